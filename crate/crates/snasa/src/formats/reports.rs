//! CSV outputs: the per-epoch training log and the evaluation report.
//!
//! Reals are written with Rust's shortest round-trip formatting, so a file
//! depends only on the values it records.

use std::fmt::Write as _;
use std::path::Path;

use snasa_core::{EvalReport, TrainingLog};

use super::write_bytes;
use crate::{Error, Result};

/// `epoch,mean_loss,accuracy` with one row per epoch; accuracy is blank for
/// epochs that were not evaluated.
pub fn render_epoch_log(log: &TrainingLog) -> Result<String> {
    if log.is_empty() {
        return Err(Error::Invalid("epoch log is empty".into()));
    }
    let mut out = String::from("epoch,mean_loss,accuracy\n");
    for r in &log.records {
        let acc = r.accuracy.map(|a| a.to_string()).unwrap_or_default();
        writeln!(out, "{},{},{}", r.epoch, r.mean_loss, acc).expect("write to string");
    }
    Ok(out)
}

pub fn save_epoch_log(log: &TrainingLog, path: &Path) -> Result<()> {
    write_bytes(path, render_epoch_log(log)?.as_bytes())
}

/// A `# key=value ...` metadata line, the per-class rows, then accuracy and
/// the macro averages.
pub fn render_report(report: &EvalReport) -> String {
    let mut out = String::new();
    if !report.meta.is_empty() {
        out.push('#');
        for (k, v) in &report.meta {
            let v: String = v.chars().map(|c| if c.is_whitespace() { '_' } else { c }).collect();
            write!(out, " {k}={v}").expect("write to string");
        }
        out.push('\n');
    }
    out.push_str("class,precision,recall,f1\n");
    for m in &report.per_class {
        writeln!(out, "{},{},{},{}", m.label, m.precision, m.recall, m.f1).expect("write to string");
    }
    writeln!(out, "accuracy,{}", report.accuracy).expect("write to string");
    writeln!(
        out,
        "macro,{},{},{}",
        report.macro_precision, report.macro_recall, report.macro_f1
    )
    .expect("write to string");
    out
}

pub fn save_report(report: &EvalReport, path: &Path) -> Result<()> {
    write_bytes(path, render_report(report).as_bytes())
}
