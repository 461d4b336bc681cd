//! Refinement verdict between two channels. `refine LEFT RIGHT` asks
//! whether RIGHT is a post-processing of LEFT.

use ldp_qif::channel::MAX_EXACT_COLUMNS;
use ldp_qif::mechanisms::bitwise;
use ldp_qif::refinement::{refines_2x2, refines_exact, refines_lp, RefinementVerdict, REFINE_TOLERANCE};
use ldp_qif::ChannelMatrix;

use crate::args::{GlobalArgs, OutputFormat, RefineArgs, RefineMode};
use crate::config::{parse_operand, Operand, Settings};
use crate::error::{CliError, CliResult, ResultExt};
use crate::output::{emit, json_document, Table};

fn to_channel(op: Operand, use_bitwise: bool) -> CliResult<ChannelMatrix> {
    match op {
        Operand::Channel(c) => Ok(c),
        Operand::Spec(s) if use_bitwise => {
            let bp = s.protocol().bitwise().ok_or_else(|| {
                CliError::config(format!("{} has no bitwise core", s.protocol().name()))
            })?;
            bitwise(bp, s.epsilon(), s.theta()).usage()
        }
        Operand::Spec(s) => s.channel().usage(),
    }
}

pub fn verdict(left: &ChannelMatrix, right: &ChannelMatrix, mode: RefineMode, exact: bool) -> CliResult<RefinementVerdict> {
    if left.rows() != right.rows() {
        return Err(CliError::config(format!(
            "channels have {} and {} rows",
            left.rows(),
            right.rows()
        )));
    }
    let square = |c: &ChannelMatrix| c.rows() == 2 && c.cols() == 2;
    let use_tradeoff = match mode {
        RefineMode::Tradeoff => true,
        RefineMode::Lp => false,
        RefineMode::Auto => square(left) && square(right) && !exact,
    };
    if use_tradeoff {
        let mut v = refines_2x2(left, right).usage()?;
        if v.holds {
            // The ratio test gives no witness; ask the solver for one.
            v.witness = refines_lp(left, right, REFINE_TOLERANCE).compute()?.witness;
        }
        return Ok(v);
    }
    if exact {
        if left.cols().max(right.cols()) > MAX_EXACT_COLUMNS {
            return Err(CliError::config(format!(
                "--exact supports at most {MAX_EXACT_COLUMNS} columns"
            )));
        }
        return refines_exact(left, right).compute();
    }
    refines_lp(left, right, REFINE_TOLERANCE).compute()
}

pub fn run(global: &GlobalArgs, args: &RefineArgs) -> CliResult<()> {
    let settings = Settings::resolve(global, &Default::default())?;
    let left = to_channel(parse_operand(&args.left)?, args.bitwise)?;
    let right = to_channel(parse_operand(&args.right)?, args.bitwise)?;
    let v = verdict(&left, &right, args.mode, settings.exact)?;
    let text = match global.format.unwrap_or(OutputFormat::Json) {
        OutputFormat::Json => json_document(&v),
        OutputFormat::Csv => {
            let mut t = Table::new("refine", &["holds", "residual", "method"]);
            let method = serde_json::to_value(v.method).expect("method serializes");
            t.push(vec![
                v.holds.into(),
                v.residual.into(),
                method.as_str().unwrap_or_default().into(),
            ]);
            t.to_csv()?
        }
    };
    emit(settings.out.as_deref(), &text)
}
