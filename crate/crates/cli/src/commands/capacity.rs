//! Bayes capacity sweeps: closed forms, explicit channels where they fit
//! under the size cap, and the max-case capacity `e^ε` of the explicit
//! channel.

use ldp_qif::channel::{RationalChannel, DEFAULT_SIZE_CAP, MAX_EXACT_COLUMNS};
use ldp_qif::leakage::{bayes_capacity, bayes_capacity_closed, epsilon_of};
use ldp_qif::{Error, MechanismSpec, Protocol};
use num_traits::ToPrimitive;
use rayon::prelude::*;

use super::{spec_cells, spec_label, write_table, SPEC_COLUMNS};
use crate::args::{CapacityArgs, GlobalArgs};
use crate::config::{check_epsilons, read_json, Settings, SweepConfig, Template, DEFAULT_THETA};
use crate::error::{CliError, CliResult, ResultExt};
use crate::output::Table;
use crate::svg::{line_chart, Series};

pub const DEFAULT_K: usize = 50;
pub const DEFAULT_EPSILONS: [f64; 14] = [0.1, 0.25, 0.5, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 8.0, 10.0, 12.0, 14.0, 16.0];

/// A fully resolved capacity sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacitySweep {
    pub specs: Vec<MechanismSpec>,
    pub exact: bool,
}

impl CapacitySweep {
    pub fn new(k: usize, templates: &[Template], epsilons: &[f64], thetas: &[f64], exact: bool) -> CliResult<Self> {
        if templates.is_empty() {
            return Err(CliError::config("protocol list is empty"));
        }
        if thetas.is_empty() {
            return Err(CliError::config("theta grid is empty"));
        }
        check_epsilons(epsilons)?;
        let mut specs = Vec::new();
        for t in templates {
            for &e in epsilons {
                specs.extend(t.instantiate(k, e, thetas).usage()?);
            }
        }
        Ok(CapacitySweep { specs, exact })
    }
}

fn rows_for(spec: &MechanismSpec, exact: bool) -> CliResult<Vec<(&'static str, f64)>> {
    let mut rows = vec![("bayes_capacity_closed", bayes_capacity_closed(spec).compute()?)];
    match spec.channel_with_cap(DEFAULT_SIZE_CAP) {
        Ok(c) => {
            rows.push(("bayes_capacity_explicit", bayes_capacity(&c)));
            if exact && c.cols() <= MAX_EXACT_COLUMNS {
                let r = RationalChannel::from_channel(&c).compute()?.bayes_capacity();
                rows.push(("bayes_capacity_exact", r.to_f64().unwrap_or(f64::NAN)));
            }
            rows.push(("max_case_capacity", epsilon_of(&c).exp()));
        }
        Err(Error::SizeCapExceeded { .. }) => {
            log::debug!("{spec}: explicit channel exceeds the size cap");
        }
        Err(e) => return Err(CliError::Compute(e)),
    }
    Ok(rows)
}

pub fn capacity_table(sweep: &CapacitySweep, settings: &Settings) -> CliResult<Table> {
    let pool = settings.pool()?;
    let cells: Vec<CliResult<Vec<(&'static str, f64)>>> =
        pool.install(|| sweep.specs.par_iter().map(|s| rows_for(s, sweep.exact)).collect());
    let mut columns = SPEC_COLUMNS.to_vec();
    columns.extend(["measure", "value"]);
    let mut table = Table::new("capacity", &columns);
    for (spec, rows) in sweep.specs.iter().zip(cells) {
        for (measure, value) in rows? {
            let mut row = spec_cells(spec);
            row.extend([measure.into(), value.into()]);
            table.push(row);
        }
    }
    Ok(table)
}

fn chart(sweep: &CapacitySweep, table: &Table) -> String {
    let measure = table.column("measure").expect("capacity column");
    let value = table.column("value").expect("capacity column");
    let mut series: Vec<Series> = Vec::new();
    let mut closed = table.rows.iter().filter(|r| r[measure] == "bayes_capacity_closed".into());
    for spec in &sweep.specs {
        let row = closed.next().expect("one closed-form row per spec");
        let v = match row[value] {
            crate::output::Cell::Real(v) => v,
            _ => f64::NAN,
        };
        let name = spec_label(spec);
        match series.iter_mut().find(|s| s.name == name) {
            Some(s) => s.points.push((spec.epsilon(), v)),
            None => series.push(Series {
                name,
                points: vec![(spec.epsilon(), v)],
            }),
        }
    }
    line_chart("Bayes capacity", "epsilon", "capacity", &series)
}

pub fn run(global: &GlobalArgs, args: &CapacityArgs) -> CliResult<()> {
    let config: SweepConfig = match &args.config {
        Some(p) => read_json(p)?,
        None => SweepConfig::default(),
    };
    let settings = Settings::resolve(global, &config.output())?;
    let k = args.k.or(config.k).unwrap_or(DEFAULT_K);
    let templates: Vec<Template> = match &args.protocols {
        Some(ps) => ps.iter().copied().map(Template::from).collect(),
        None => config
            .protocols
            .clone()
            .unwrap_or_else(|| Protocol::ALL.into_iter().map(Template::from).collect()),
    };
    let epsilons = args
        .epsilons
        .clone()
        .or_else(|| config.epsilon_grid.clone())
        .unwrap_or_else(|| DEFAULT_EPSILONS.to_vec());
    let thetas = args
        .thetas
        .clone()
        .or_else(|| config.theta_grid.clone())
        .unwrap_or_else(|| vec![DEFAULT_THETA]);
    let sweep = CapacitySweep::new(k, &templates, &epsilons, &thetas, settings.exact)?;
    let table = capacity_table(&sweep, &settings)?;
    write_table(&settings, settings.out.as_deref(), &table, || chart(&sweep, &table))
}
