//! One module per subcommand. Each exposes a `run` entry point and a pure
//! function producing its table, so tests can inspect results directly.

pub mod asr_lh;
pub mod capacity;
pub mod family;
pub mod refine;
pub mod simulate;
pub mod tradeoff;

use std::path::Path;

use ldp_qif::MechanismSpec;

use crate::args::{Cli, Command};
use crate::config::Settings;
use crate::error::CliResult;
use crate::output::{emit, write_atomic, Cell, Table};

pub fn run(cli: &Cli) -> CliResult<()> {
    let g = &cli.global;
    match &cli.command {
        Command::Capacity(a) => capacity::run(g, a),
        Command::AsrLhCompare(a) => asr_lh::run(g, a),
        Command::Refine(a) => refine::run(g, a),
        Command::Simulate(a) => simulate::run(g, a),
        Command::TradeoffExport(a) => tradeoff::run(g, a),
        Command::FamilyCheck(a) => family::run(g, a),
    }
}

/// Leading columns identifying a mechanism.
pub(crate) const SPEC_COLUMNS: [&str; 6] = ["protocol", "k", "epsilon", "theta", "g", "omega"];

pub(crate) fn spec_cells(spec: &MechanismSpec) -> Vec<Cell> {
    vec![
        spec.protocol().name().into(),
        spec.k().into(),
        spec.epsilon().into(),
        spec.theta().into(),
        spec.g().into(),
        spec.omega().into(),
    ]
}

pub(crate) fn spec_label(spec: &MechanismSpec) -> String {
    match spec.theta() {
        Some(t) => format!("{} theta={t}", spec.protocol().name()),
        None => spec.protocol().name().to_owned(),
    }
}

/// Writes the table in the configured format, plus the chart if requested.
pub(crate) fn write_table(settings: &Settings, out: Option<&Path>, table: &Table, svg: impl FnOnce() -> String) -> CliResult<()> {
    emit(out, &table.render(settings.format)?)?;
    if let Some(path) = &settings.svg {
        write_atomic(path, &svg())?;
    }
    Ok(())
}
