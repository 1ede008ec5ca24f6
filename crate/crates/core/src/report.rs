//! Text serializations: CSV tables and `key = value` summaries.
//!
//! Numbers are written as `{:.16e}` (17 significant digits, `.` decimal
//! point), which round-trips every `f64`.

use crate::bounds::BoundsSnapshot;
use crate::fixed_point::{ContractionReport, IterationTrace};
use crate::linear::SequenceReport;

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn trace_csv(trace: &IterationTrace) -> String {
    let mut out = String::from("iter,u_h4,step_h4,ratio,residual\n");
    for r in &trace.rows {
        let ratio = r.ratio.map(num).unwrap_or_default();
        out += &format!(
            "{},{},{},{},{}\n",
            r.iter,
            num(r.u_h4),
            num(r.step_h4),
            ratio,
            num(r.residual)
        );
    }
    out
}

pub fn contraction_csv(report: &ContractionReport) -> String {
    let mut out = String::from("trial,dv_h4,dtv_h4,ratio\n");
    for s in &report.samples {
        out += &format!(
            "{},{},{},{}\n",
            s.trial,
            num(s.dv_h4),
            num(s.dtv_h4),
            num(s.ratio)
        );
    }
    out
}

pub fn sequence_csv(report: &SequenceReport) -> String {
    let mut out = String::from("n,df_l1,df_l2,du_h4,majorant,ok\n");
    for r in &report.rows {
        out += &format!(
            "{},{},{},{},{},{}\n",
            r.n,
            num(r.df_l1),
            num(r.df_l2),
            num(r.du_h4),
            num(r.majorant),
            r.ok
        );
    }
    out
}

/// Ordered `key = value` lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Summary {
    entries: Vec<(String, String)>,
}

impl Summary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn text(&mut self, key: impl Into<String>, value: impl ToString) -> &mut Self {
        self.entries.push((key.into(), value.to_string()));
        self
    }

    pub fn number(&mut self, key: impl Into<String>, value: f64) -> &mut Self {
        self.text(key, num(value))
    }

    pub fn bounds(&mut self, snapshot: &BoundsSnapshot) -> &mut Self {
        for (name, value) in snapshot.fields() {
            if name == "d" {
                self.text("bounds.d", snapshot.d);
            } else {
                self.number(format!("bounds.{name}"), value);
            }
        }
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn render(&self) -> String {
        self.entries
            .iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}
