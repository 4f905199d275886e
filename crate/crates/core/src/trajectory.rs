//! Time series of solver states with their norm track.

use crate::error::{Error, Result};
use crate::fraccalc::TimeGrid;

/// Solver output: times, states and `‖u(t_n)‖`.
///
/// Scalar trajectories store one-component states and use `|v|` as the
/// norm. Vector trajectories use the weighted norm `(w Σ u_i²)^{1/2}`,
/// where `w` is the mesh width for discretized fields.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    times: Vec<f64>,
    grid: Option<TimeGrid>,
    states: Vec<Vec<f64>>,
    norms: Vec<f64>,
    weight: f64,
}

impl Trajectory {
    pub fn from_scalars(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let states = values.into_iter().map(|v| vec![v]).collect();
        Self::from_vectors(times, states, 1.0)
    }

    pub fn from_vectors(times: Vec<f64>, states: Vec<Vec<f64>>, weight: f64) -> Result<Self> {
        if times.len() != states.len() {
            return Err(Error::invalid(
                "states",
                format!("{} times but {} states", times.len(), states.len()),
            ));
        }
        if let Some(first) = states.first() {
            if states.iter().any(|s| s.len() != first.len()) {
                return Err(Error::invalid("states", "state dimension changes along the trajectory"));
            }
        }
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(Error::invalid("weight", format!("need a positive weight, got {weight}")));
        }
        let norms = states.iter().map(|s| weighted_norm(s, weight)).collect();
        Ok(Trajectory { times, grid: None, states, norms, weight })
    }

    /// Attach the uniform grid the trajectory was computed on.
    pub fn with_grid(mut self, grid: TimeGrid) -> Result<Self> {
        if grid.points() != self.times.as_slice() {
            return Err(Error::invalid("grid", "grid nodes differ from trajectory times"));
        }
        self.grid = Some(grid);
        Ok(self)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn grid(&self) -> Option<&TimeGrid> {
        self.grid.as_ref()
    }

    pub fn states(&self) -> &[Vec<f64>] {
        &self.states
    }

    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states.first().map_or(0, Vec::len)
    }

    pub fn is_scalar(&self) -> bool {
        self.dim() == 1
    }

    /// The scalar values of a one-component trajectory.
    pub fn scalar_values(&self) -> Result<Vec<f64>> {
        if !self.is_scalar() {
            return Err(Error::invalid("trajectory", "expected a scalar trajectory"));
        }
        Ok(self.states.iter().map(|s| s[0]).collect())
    }
}

pub(crate) fn weighted_norm(v: &[f64], weight: f64) -> f64 {
    (weight * v.iter().map(|x| x * x).sum::<f64>()).sqrt()
}
