use std::fmt::Write as _;
use std::path::Path;

use super::state::Residuals;
use crate::error::{Error, Result};

/// The six block updates, in the order they run within an iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    Delta,
    W,
    B,
    Z,
    H,
    S,
}

impl Step {
    pub const ALL: [Step; 6] = [Step::Delta, Step::W, Step::B, Step::Z, Step::H, Step::S];

    pub fn name(self) -> &'static str {
        match self {
            Step::Delta => "delta",
            Step::W => "W",
            Step::B => "B",
            Step::Z => "Z",
            Step::H => "H",
            Step::S => "S",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub objective: f64,
    pub penalized: f64,
    /// Change of the penalized objective caused by each step, in `Step::ALL` order.
    pub step_deltas: [f64; 6],
    pub residuals: Residuals,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub initial_objective: f64,
    pub initial_penalized: f64,
    pub records: Vec<IterationRecord>,
}

const HEADER: &str = "iteration,objective,penalized_objective,\
d_delta,d_w,d_b,d_z,d_h,d_s,\
h_orthogonality,b_orthogonality,z_min,s_row_sum,s_min,delta_sum,delta_min,laplacian_row";

impl RunTrace {
    pub fn new(initial_objective: f64, initial_penalized: f64) -> Self {
        Self {
            initial_objective,
            initial_penalized,
            records: Vec::new(),
        }
    }

    pub fn push(&mut self, record: IterationRecord) {
        self.records.push(record);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn objectives(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.objective).collect()
    }

    /// Largest increase of the penalized objective by any single step,
    /// relative to the value before that step.
    pub fn worst_relative_increase(&self) -> f64 {
        let mut before = self.initial_penalized;
        let mut worst = f64::NEG_INFINITY;
        for r in &self.records {
            for d in r.step_deltas {
                worst = worst.max(d / before.abs().max(f64::MIN_POSITIVE));
                before += d;
            }
        }
        worst
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(HEADER);
        out.push('\n');
        for r in &self.records {
            let res = &r.residuals;
            let mut fields = vec![r.iteration.to_string(), r.objective.to_string(), r.penalized.to_string()];
            fields.extend(r.step_deltas.iter().map(|d| d.to_string()));
            fields.extend(
                [
                    res.h_orthogonality,
                    res.b_orthogonality,
                    res.z_min,
                    res.s_row_sum,
                    res.s_min,
                    res.delta_sum,
                    res.delta_min,
                    res.laplacian_row,
                ]
                .iter()
                .map(|x| x.to_string()),
            );
            let _ = writeln!(out, "{}", fields.join(","));
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}
