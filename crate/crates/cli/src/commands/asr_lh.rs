//! Local-hashing ASR: the full-family closed form, the earlier estimate,
//! and a uniform-data simulation of the support-set attack.

use ldp_qif::leakage::{lh_asr_closed, lh_asr_prior_work};
use ldp_qif::mechanisms::olh_optimal_g;
use ldp_qif::simulate::{empirical_asr, synth_dataset, Distribution, TrialConfig};
use ldp_qif::MechanismSpec;

use super::{spec_cells, write_table, SPEC_COLUMNS};
use crate::args::{AsrLhArgs, GlobalArgs};
use crate::config::{check_epsilons, Settings};
use crate::error::{CliError, CliResult, ResultExt};
use crate::output::{Cell, Table};
use crate::svg::{line_chart, Series};

pub(crate) const EXPERIMENT_COLUMNS: [&str; 6] = ["n", "trials", "seed", "metric", "mean", "std"];

pub fn asr_lh_table(args: &AsrLhArgs, settings: &Settings) -> CliResult<Table> {
    if args.trials == 0 {
        return Err(CliError::config("trials must be at least 1"));
    }
    if args.users == 0 {
        return Err(CliError::config("users must be at least 1"));
    }
    if args.k_grid.is_empty() {
        return Err(CliError::config("k grid is empty"));
    }
    check_epsilons(&args.epsilons)?;
    if settings.exact {
        log::warn!("--exact has no effect on asr-lh-compare");
    }
    let mut specs = Vec::new();
    for &e in &args.epsilons {
        for &k in &args.k_grid {
            let g = args.g.unwrap_or_else(|| olh_optimal_g(e));
            specs.push(MechanismSpec::olh(k, e, Some(g)).usage()?);
        }
    }
    let config = TrialConfig::new(args.trials, settings.seed, settings.lanes).usage()?;
    let mut columns = SPEC_COLUMNS.to_vec();
    columns.extend(EXPERIMENT_COLUMNS);
    let mut table = Table::new("asr_lh_compare", &columns);
    for spec in &specs {
        let (k, g, e) = (spec.k(), spec.g().expect("LH spec has g"), spec.epsilon());
        let data = synth_dataset(Distribution::Uniform, k, args.users, settings.seed).usage()?;
        let sim = empirical_asr(spec, &data, &config).compute()?;
        for (metric, mean, std) in [
            ("asr_closed", lh_asr_closed(k, g, e), 0.0),
            ("asr_prior_work", lh_asr_prior_work(k, g, e), 0.0),
            ("asr_empirical", sim.mean, sim.std_error),
        ] {
            let mut row = spec_cells(spec);
            row.extend([
                Cell::from(args.users),
                args.trials.into(),
                settings.seed.into(),
                metric.into(),
                mean.into(),
                std.into(),
            ]);
            table.push(row);
        }
    }
    Ok(table)
}

fn chart(table: &Table) -> String {
    let col = |n| table.column(n).expect("asr column");
    let (k, e, metric, mean) = (col("k"), col("epsilon"), col("metric"), col("mean"));
    let mut series: Vec<Series> = Vec::new();
    for row in &table.rows {
        let (Cell::Int(kv), Cell::Real(ev), Cell::Text(m), Cell::Real(v)) = (&row[k], &row[e], &row[metric], &row[mean]) else {
            continue;
        };
        let name = format!("{m} eps={ev}");
        match series.iter_mut().find(|s| s.name == name) {
            Some(s) => s.points.push((*kv as f64, *v)),
            None => series.push(Series {
                name,
                points: vec![(*kv as f64, *v)],
            }),
        }
    }
    line_chart("Local hashing ASR", "k", "ASR", &series)
}

pub fn run(global: &GlobalArgs, args: &AsrLhArgs) -> CliResult<()> {
    let settings = Settings::resolve(global, &Default::default())?;
    let table = asr_lh_table(args, &settings)?;
    write_table(&settings, settings.out.as_deref(), &table, || chart(&table))
}
