//! Config-driven ASR and MSE experiments.

use std::path::{Path, PathBuf};

use ldp_qif::leakage::bayes_capacity_closed;
use ldp_qif::refinement::theta_threshold;
use ldp_qif::simulate::{
    empirical_asr_with, load_dataset, mse_experiment_with, synth_dataset, Dataset, MseOptions, Sampler,
    SamplerOptions, TrialConfig,
};
use ldp_qif::{MechanismSpec, Protocol};

use super::asr_lh::EXPERIMENT_COLUMNS;
use super::{spec_cells, spec_label, write_table, SPEC_COLUMNS};
use crate::args::{GlobalArgs, SimulateArgs};
use crate::config::{check_epsilons, read_json, DatasetSource, Metric, Settings, SimulateConfig, DEFAULT_THETA};
use crate::error::{CliError, CliResult, ResultExt};
use crate::output::{Cell, Table};
use crate::svg::{line_chart, Series};

/// A parsed config with its dataset loaded and specs expanded.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub dataset: Dataset,
    pub specs: Vec<MechanismSpec>,
    pub metrics: Vec<Metric>,
    pub trials: usize,
    pub project: bool,
    pub sampler: SamplerOptions,
}

impl Experiment {
    /// `base` resolves relative dataset paths.
    pub fn from_config(cfg: &SimulateConfig, base: &Path, settings: &Settings) -> CliResult<Self> {
        if cfg.trials == 0 {
            return Err(CliError::config("trials must be at least 1"));
        }
        let metrics = cfg.metric.to_vec();
        if metrics.is_empty() {
            return Err(CliError::config("no metric requested"));
        }
        let dataset = match &cfg.dataset {
            DatasetSource::File { path, format, remap } => {
                let path = if path.is_relative() { base.join(path) } else { path.clone() };
                load_dataset(&path, *format, *remap).usage()?
            }
            DatasetSource::Synthetic {
                distribution,
                k,
                n,
                seed,
            } => synth_dataset(*distribution, *k, *n, seed.unwrap_or(settings.seed)).usage()?,
        };
        let k = dataset.domain_size();
        let mut specs = cfg.specs.clone();
        if let Some(sweep) = &cfg.sweep {
            check_epsilons(&sweep.epsilons)?;
            let thetas = sweep.thetas.clone().unwrap_or_else(|| vec![DEFAULT_THETA]);
            if thetas.is_empty() {
                return Err(CliError::config("theta grid is empty"));
            }
            for &e in &sweep.epsilons {
                for t in &sweep.protocols {
                    specs.extend(t.instantiate(k, e, &thetas).usage()?);
                }
            }
        }
        if specs.is_empty() {
            return Err(CliError::config("no specs given"));
        }
        if let Some(s) = specs.iter().find(|s| s.k() != k) {
            return Err(CliError::config(format!("{s} does not match the dataset's domain size {k}")));
        }
        Ok(Experiment {
            dataset,
            specs,
            metrics,
            trials: cfg.trials,
            project: cfg.project,
            sampler: SamplerOptions {
                the_sampling: cfg.the_sampling,
                ..Default::default()
            },
        })
    }
}

fn columns() -> Vec<&'static str> {
    let mut c = SPEC_COLUMNS.to_vec();
    c.extend(EXPERIMENT_COLUMNS);
    c.push("theta_threshold");
    c
}

fn push_row(table: &mut Table, spec: &MechanismSpec, exp: &Experiment, seed: u64, metric: &str, mean: f64, std: f64) {
    let mut row = spec_cells(spec);
    row.extend([
        Cell::from(exp.dataset.len()),
        exp.trials.into(),
        seed.into(),
        metric.into(),
        mean.into(),
        std.into(),
        theta_threshold(spec.epsilon()).into(),
    ]);
    table.push(row);
}

/// One table per requested metric, in the order requested.
pub fn simulate_tables(exp: &Experiment, settings: &Settings) -> CliResult<Vec<(Metric, Table)>> {
    let config = TrialConfig::new(exp.trials, settings.seed, settings.lanes).usage()?;
    let mut out = Vec::new();
    for &metric in &exp.metrics {
        let mut table = Table::new(if metric == Metric::Asr { "simulate_asr" } else { "simulate_mse" }, &columns());
        match metric {
            Metric::Asr => {
                for spec in &exp.specs {
                    let sampler = Sampler::with_options(spec, exp.sampler);
                    let r = empirical_asr_with(&sampler, &exp.dataset, &config).compute()?;
                    let closed = bayes_capacity_closed(spec).compute()? / spec.k() as f64;
                    push_row(&mut table, spec, exp, settings.seed, "asr_closed", closed, 0.0);
                    push_row(&mut table, spec, exp, settings.seed, "asr", r.mean, r.std_error);
                }
            }
            Metric::Mse => {
                let options = MseOptions {
                    project: exp.project,
                    sampler: exp.sampler,
                };
                let results = mse_experiment_with(&exp.specs, &exp.dataset, &config, options).compute()?;
                for r in results {
                    push_row(&mut table, &r.spec, exp, settings.seed, "mse", r.mean, r.std_error);
                }
            }
        }
        out.push((metric, table));
    }
    Ok(out)
}

/// `out.csv` becomes `out.asr.csv` when several metrics share one path.
pub fn metric_path(out: &Path, metric: Metric) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match out.extension() {
        Some(ext) => format!("{stem}.{}.{}", metric.name(), ext.to_string_lossy()),
        None => format!("{stem}.{}", metric.name()),
    };
    out.with_file_name(name)
}

/// THE rows are plotted against theta, with the other protocols drawn
/// flat across the theta range; without a theta sweep, against epsilon.
fn chart(exp: &Experiment, metric: Metric, table: &Table) -> String {
    let m = table.column("metric").expect("metric column");
    let mean = table.column("mean").expect("mean column");
    let measured: Vec<(&MechanismSpec, f64)> = {
        let wanted: Cell = metric.name().into();
        let vals = table.rows.iter().filter(|r| r[m] == wanted).map(|r| match r[mean] {
            Cell::Real(v) => v,
            _ => f64::NAN,
        });
        exp.specs.iter().zip(vals).collect()
    };
    let thetas: Vec<f64> = exp.specs.iter().filter_map(|s| s.theta()).collect();
    let theta_mode = thetas.iter().any(|t| *t != thetas[0]);
    let mut series: Vec<Series> = Vec::new();
    let mut add = |name: String, pts: Vec<(f64, f64)>| match series.iter_mut().find(|s| s.name == name) {
        Some(s) => s.points.extend(pts),
        None => series.push(Series { name, points: pts }),
    };
    if theta_mode {
        let lo = thetas.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = thetas.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        for (s, v) in &measured {
            let name = format!("{} eps={}", s.protocol().name(), s.epsilon());
            match s.theta() {
                Some(t) => add(name, vec![(t, *v)]),
                None => add(name, vec![(lo, *v), (hi, *v)]),
            }
        }
        line_chart(metric.name(), "theta", metric.name(), &series)
    } else {
        for (s, v) in &measured {
            add(spec_label(s), vec![(s.epsilon(), *v)]);
        }
        line_chart(metric.name(), "epsilon", metric.name(), &series)
    }
}

pub fn run(global: &GlobalArgs, args: &SimulateArgs) -> CliResult<()> {
    let mut cfg: SimulateConfig = read_json(&args.config)?;
    if let Some(t) = args.trials {
        cfg.trials = t;
    }
    let settings = Settings::resolve(global, &cfg.output())?;
    let base = args.config.parent().unwrap_or(Path::new("."));
    let exp = Experiment::from_config(&cfg, base, &settings)?;
    // Compute everything before writing anything.
    let tables = simulate_tables(&exp, &settings)?;
    let several = tables.len() > 1;
    for (metric, table) in &tables {
        let out = settings
            .out
            .as_ref()
            .map(|p| if several { metric_path(p, *metric) } else { p.clone() });
        let mut per_metric = settings.clone();
        per_metric.svg = settings
            .svg
            .as_ref()
            .map(|p| if several { metric_path(p, *metric) } else { p.clone() });
        write_table(&per_metric, out.as_deref(), table, || chart(&exp, *metric, table))?;
    }
    if exp.specs.iter().any(|s| s.protocol() == Protocol::The) {
        log::debug!("theta_threshold column gives the refinement boundary against OUE");
    }
    Ok(())
}
