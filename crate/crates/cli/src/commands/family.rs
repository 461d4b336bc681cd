//! Refinement-family checks over an epsilon grid.

use ldp_qif::channel::MAX_EXACT_COLUMNS;
use ldp_qif::refinement::{refines_exact, verify_anti_direction, verify_refinement_family, Family, FamilyPair, FamilyReport};
use ldp_qif::BitwiseProtocol;

use super::write_table;
use crate::args::{FamilyArgs, FamilyKind, GlobalArgs};
use crate::config::{check_epsilons, Settings, DEFAULT_THETA};
use crate::error::{CliError, CliResult, ResultExt};
use crate::output::Table;
use crate::svg::{line_chart, Series};

pub fn family_of(args: &FamilyArgs) -> CliResult<Family> {
    use FamilyKind::*;
    let is_the = matches!(args.family, The | OnehotThe);
    if args.theta.is_some() && !is_the {
        return Err(CliError::config("--theta only applies to THE families"));
    }
    let theta = is_the.then(|| args.theta.unwrap_or(DEFAULT_THETA));
    let bp = |k: FamilyKind| match k {
        Sue | OnehotSue => BitwiseProtocol::Sue,
        Oue | OnehotOue => BitwiseProtocol::Oue,
        _ => BitwiseProtocol::The,
    };
    Ok(match args.family {
        Grr => Family::Grr { k: args.k },
        Sue | Oue | The => Family::Bitwise {
            protocol: bp(args.family),
            theta,
        },
        OnehotSue | OnehotOue | OnehotThe => Family::OneHot {
            protocol: bp(args.family),
            k: args.k,
            theta,
        },
    })
}

/// Rational verdicts for each adjacent pair.
fn exact_report(family: Family, epsilons: &[f64], anti: bool) -> CliResult<FamilyReport> {
    if epsilons.len() < 2 || epsilons.windows(2).any(|w| w[0] > w[1]) {
        return Err(CliError::config("an ascending epsilon grid with at least two points is required"));
    }
    let mut pairs = Vec::new();
    for w in epsilons.windows(2) {
        let (lo, hi) = (family.channel(w[0]).usage()?, family.channel(w[1]).usage()?);
        if hi.cols() > MAX_EXACT_COLUMNS || lo.cols() > MAX_EXACT_COLUMNS {
            return Err(CliError::config(format!("--exact supports at most {MAX_EXACT_COLUMNS} columns")));
        }
        let v = if anti { refines_exact(&lo, &hi) } else { refines_exact(&hi, &lo) }.compute()?;
        pairs.push(FamilyPair {
            epsilon_low: w[0],
            epsilon_high: w[1],
            holds: v.holds,
            residual: v.residual,
        });
    }
    Ok(FamilyReport { family, pairs })
}

pub fn family_table(args: &FamilyArgs, settings: &Settings) -> CliResult<(FamilyReport, Table)> {
    check_epsilons(&args.epsilons)?;
    let family = family_of(args)?;
    let report = if settings.exact {
        exact_report(family, &args.epsilons, args.anti)?
    } else {
        let pool = settings.pool()?;
        pool.install(|| {
            if args.anti {
                verify_anti_direction(family, &args.epsilons)
            } else {
                verify_refinement_family(family, &args.epsilons)
            }
        })
        .usage()?
    };
    let mut table = Table::new("family_check", &["epsilon_low", "epsilon_high", "holds", "residual"]);
    for p in &report.pairs {
        table.push(vec![p.epsilon_low.into(), p.epsilon_high.into(), p.holds.into(), p.residual.into()]);
    }
    Ok((report, table))
}

pub fn run(global: &GlobalArgs, args: &FamilyArgs) -> CliResult<()> {
    let settings = Settings::resolve(global, &Default::default())?;
    let (report, table) = family_table(args, &settings)?;
    let held = report.pairs.iter().filter(|p| p.holds).count();
    log::info!("{held} of {} adjacent pairs refine", report.pairs.len());
    write_table(&settings, settings.out.as_deref(), &table, || {
        let points = report.pairs.iter().map(|p| (p.epsilon_low, p.residual)).collect();
        line_chart(
            "Refinement residual",
            "epsilon (lower end of pair)",
            "residual",
            &[Series {
                name: "residual".into(),
                points,
            }],
        )
    })
}
