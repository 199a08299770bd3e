//! CSV tables written by the subcommands.

use std::fmt::Write as _;

use tpns::multipliers::MultiplierReport;

/// `iteration,update,ratio`; the ratio column is empty on the first row.
pub fn history_csv(history: &[f64]) -> String {
    let mut out = String::from("iteration,update,ratio\n");
    for (i, d) in history.iter().enumerate() {
        let ratio = match i.checked_sub(1).map(|j| history[j]) {
            Some(prev) if prev > 0.0 => format!("{:e}", d / prev),
            _ => String::new(),
        };
        let _ = writeln!(out, "{},{d:e},{ratio}", i + 1);
    }
    out
}

pub fn probe_csv(reports: &[MultiplierReport]) -> String {
    let mut out = format!("{}\n", MultiplierReport::CSV_HEADER);
    for r in reports {
        let _ = writeln!(out, "{}", r.csv_row());
    }
    out
}

/// One row of a verification table.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    /// Passes when `value <= threshold`.
    pub fn at_most(name: &'static str, value: f64, threshold: f64) -> Self {
        Self { name, value, threshold, pass: value <= threshold }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Verdict {
    pub checks: Vec<Check>,
}

impl Verdict {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> Vec<&'static str> {
        self.checks.iter().filter(|c| !c.pass).map(|c| c.name).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("check,value,threshold,pass\n");
        for c in &self.checks {
            let _ = writeln!(out, "{},{:e},{:e},{}", c.name, c.value, c.threshold, c.pass);
        }
        out
    }
}
