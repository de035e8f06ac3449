use std::fmt;
use std::io::Write;

use super::metrics::{MetricsReport, HIGHER_IS_BETTER, METRIC_NAMES};
use super::EvalError;

/// Side-by-side metrics with the best value of each column marked (ties all marked).
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub names: Vec<String>,
    pub reports: Vec<MetricsReport>,
    pub best: Vec<[bool; 10]>,
}

pub fn compare(reports: &[(String, MetricsReport)]) -> Result<Comparison, EvalError> {
    if reports.len() < 2 {
        return Err(EvalError::TooFewReports(reports.len()));
    }
    let mut best = vec![[false; 10]; reports.len()];
    for k in 0..10 {
        let col: Vec<f64> = reports.iter().map(|(_, r)| r.values()[k]).collect();
        let target = if HIGHER_IS_BETTER[k] {
            col.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        } else {
            col.iter().copied().fold(f64::INFINITY, f64::min)
        };
        for (i, v) in col.iter().enumerate() {
            best[i][k] = *v == target;
        }
    }
    Ok(Comparison {
        names: reports.iter().map(|(n, _)| n.clone()).collect(),
        reports: reports.iter().map(|(_, r)| *r).collect(),
        best,
    })
}

fn arrow(k: usize) -> &'static str {
    if HIGHER_IS_BETTER[k] {
        "↑"
    } else {
        "↓"
    }
}

impl Comparison {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), EvalError> {
        let mut csv = csv::Writer::from_writer(w);
        let mut header = vec!["agent".to_string()];
        for (k, name) in METRIC_NAMES.iter().enumerate() {
            header.push(format!("{name}{}", arrow(k)));
            header.push(format!("{name}_best"));
        }
        csv.write_record(&header)?;
        for ((name, r), best) in self.names.iter().zip(&self.reports).zip(&self.best) {
            let mut row = vec![name.clone()];
            for (v, b) in r.values().iter().zip(best) {
                row.push(v.to_string());
                row.push(b.to_string());
            }
            csv.write_record(&row)?;
        }
        csv.flush()?;
        Ok(())
    }
}

impl fmt::Display for Comparison {
    /// Plain-text table; `*` marks the best entry in each column.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self.names.iter().map(|n| n.len()).max().unwrap_or(5).max(5);
        write!(f, "{:<width$}", "agent")?;
        for (k, name) in METRIC_NAMES.iter().enumerate() {
            write!(f, " {:>10}", format!("{name}{}", arrow(k)))?;
        }
        writeln!(f)?;
        for ((name, r), best) in self.names.iter().zip(&self.reports).zip(&self.best) {
            write!(f, "{name:<width$}")?;
            for (k, (v, b)) in r.values().iter().zip(best).enumerate() {
                let digits = if k == 0 || k == 3 { 2 } else if k < 3 { 1 } else { 2 };
                let cell = format!("{v:.digits$}{}", if *b { "*" } else { "" });
                write!(f, " {cell:>10}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}
