use crate::model::{rank_view, CellLabel};

#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    Completed,
    /// The explosion guard or the boundary policy stopped the run at `time`.
    Exploded { time: f64, reason: String },
}

/// Recorded states of one path, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    dim: usize,
    times: Vec<f64>,
    states: Vec<f64>,
    pub terminated: Termination,
    pub rng_fingerprint: u64,
    /// Number of step halvings (or noise redraws) performed.
    pub halvings: u64,
    pub rejections: u64,
}

impl PathSample {
    pub(crate) fn with_capacity(dim: usize, n: usize) -> Self {
        Self {
            dim,
            times: Vec::with_capacity(n),
            states: Vec::with_capacity(n * dim),
            terminated: Termination::Completed,
            rng_fingerprint: 0,
            halvings: 0,
            rejections: 0,
        }
    }

    /// Builds a path from recorded values; `states` is row-major.
    pub fn from_parts(dim: usize, times: Vec<f64>, states: Vec<f64>) -> Self {
        assert_eq!(times.len() * dim, states.len(), "states must hold dim values per time");
        Self { dim, times, states, terminated: Termination::Completed, rng_fingerprint: 0, halvings: 0, rejections: 0 }
    }

    pub(crate) fn push(&mut self, t: f64, x: &[f64]) {
        self.times.push(t);
        self.states.extend_from_slice(x);
    }

    pub(crate) fn terminate(&mut self, time: f64, reason: String) {
        self.terminated = Termination::Exploded { time, reason };
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Flat row-major state storage.
    pub fn states(&self) -> &[f64] {
        &self.states
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.states[i * self.dim..(i + 1) * self.dim]
    }

    pub fn last(&self) -> Option<&[f64]> {
        (!self.is_empty()).then(|| self.state(self.len() - 1))
    }

    pub fn iter_states(&self) -> std::slice::ChunksExact<'_, f64> {
        self.states.chunks_exact(self.dim)
    }

    /// Cell label of each recorded state.
    pub fn cells(&self) -> impl Iterator<Item = CellLabel> + '_ {
        self.iter_states().map(|x| rank_view(x).expect("finite state").cell())
    }

    pub fn is_completed(&self) -> bool {
        self.terminated == Termination::Completed
    }
}
