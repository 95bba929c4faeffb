//! Per-iteration training history.

/// Solver bookkeeping for one medium-training iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverTrace {
    pub forward_iterations: usize,
    pub forward_residual: f64,
    pub adjoint_iterations: usize,
    pub adjoint_residual: f64,
    /// At least one of the two solves needed the looser-tolerance retry.
    pub retried: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub eta: f64,
    pub nrmse: f64,
    pub solver: Option<SolverTrace>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingRecord {
    rows: Vec<IterationRecord>,
}

impl TrainingRecord {
    pub fn new() -> Self {
        Self::default()
    }

    pub(crate) fn from_rows(rows: Vec<IterationRecord>) -> Self {
        debug_assert!(rows.windows(2).all(|w| w[0].iteration < w[1].iteration));
        Self { rows }
    }

    pub fn push(&mut self, row: IterationRecord) {
        if let Some(last) = self.rows.last() {
            assert!(row.iteration > last.iteration, "iteration index must increase");
        }
        self.rows.push(row);
    }

    pub fn rows(&self) -> &[IterationRecord] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn nrmse_series(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.nrmse).collect()
    }

    /// Mean NRMSE over the first `n` iterations.
    pub fn leading_mean(&self, n: usize) -> f64 {
        mean(self.rows.iter().take(n).map(|r| r.nrmse))
    }

    /// Mean NRMSE over the last `n` iterations.
    pub fn trailing_mean(&self, n: usize) -> f64 {
        let skip = self.rows.len().saturating_sub(n);
        mean(self.rows.iter().skip(skip).map(|r| r.nrmse))
    }
}

fn mean(it: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = it.fold((0.0, 0usize), |(s, c), x| (s + x, c + 1));
    if count == 0 {
        f64::NAN
    } else {
        sum / count as f64
    }
}
