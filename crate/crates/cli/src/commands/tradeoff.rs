//! Breakpoints of 2x2 trade-off functions for plotting.

use ldp_qif::mechanisms::bitwise;
use ldp_qif::refinement::TradeoffFunction;
use ldp_qif::ChannelMatrix;

use super::write_table;
use crate::args::{GlobalArgs, TradeoffArgs};
use crate::config::{check_epsilons, Settings};
use crate::error::{CliError, CliResult, ResultExt};
use crate::output::{Cell, Table};
use crate::svg::{line_chart, Series};

pub fn tradeoff_table(args: &TradeoffArgs) -> CliResult<Table> {
    let mut sources: Vec<(Cell, Cell, Cell, Cell, ChannelMatrix)> = Vec::new();
    if !args.protocols.is_empty() {
        check_epsilons(&args.epsilons)?;
    }
    for &p in &args.protocols {
        let bp = p
            .bitwise()
            .ok_or_else(|| CliError::config(format!("{} has no 2x2 bitwise core", p.name())))?;
        let theta = (p == ldp_qif::Protocol::The).then_some(args.theta);
        for &e in &args.epsilons {
            let c = bitwise(bp, e, theta).usage()?;
            sources.push((format!("{}:{e}", p.name()).into(), p.name().into(), e.into(), theta.into(), c));
        }
    }
    for path in &args.channel {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        let c = if path.extension().is_some_and(|x| x.eq_ignore_ascii_case("csv")) {
            ChannelMatrix::from_csv_str(&text)
        } else {
            ChannelMatrix::from_json_str(&text)
        }
        .usage()?;
        sources.push((path.display().to_string().into(), Cell::Empty, Cell::Empty, Cell::Empty, c));
    }
    if sources.is_empty() {
        return Err(CliError::config("nothing to export"));
    }
    let mut table = Table::new(
        "tradeoff",
        &["source", "protocol", "epsilon", "theta", "index", "alpha", "beta"],
    );
    for (source, protocol, eps, theta, c) in sources {
        let f = TradeoffFunction::of_channel(&c).usage()?;
        for (i, &(a, b)) in f.breakpoints().iter().enumerate() {
            table.push(vec![
                source.clone(),
                protocol.clone(),
                eps.clone(),
                theta.clone(),
                i.into(),
                a.into(),
                b.into(),
            ]);
        }
    }
    Ok(table)
}

fn chart(table: &Table) -> String {
    let mut series: Vec<Series> = Vec::new();
    for row in &table.rows {
        let (Cell::Text(name), Cell::Real(a), Cell::Real(b)) = (&row[0], &row[5], &row[6]) else {
            continue;
        };
        match series.iter_mut().find(|s| &s.name == name) {
            Some(s) => s.points.push((*a, *b)),
            None => series.push(Series {
                name: name.clone(),
                points: vec![(*a, *b)],
            }),
        }
    }
    line_chart("Trade-off functions", "type I error", "type II error", &series)
}

pub fn run(global: &GlobalArgs, args: &TradeoffArgs) -> CliResult<()> {
    let settings = Settings::resolve(global, &Default::default())?;
    let table = tradeoff_table(args)?;
    write_table(&settings, settings.out.as_deref(), &table, || chart(&table))
}
