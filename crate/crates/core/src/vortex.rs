use crate::error::{Error, Result};

/// Prescribed zeros of each species, one list per `i = 1..m`.
/// Repeating a point encodes multiplicity.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct VortexConfiguration {
    pub points: Vec<Vec<[f64; 2]>>,
}

impl VortexConfiguration {
    pub fn new(points: Vec<Vec<[f64; 2]>>) -> Result<Self> {
        for (i, list) in points.iter().enumerate() {
            if let Some(p) = list.iter().find(|p| !(p[0].is_finite() && p[1].is_finite())) {
                return Err(Error::Config(format!(
                    "vortices.{}: non-finite point ({}, {})",
                    i + 1,
                    p[0],
                    p[1]
                )));
            }
        }
        Ok(VortexConfiguration { points })
    }

    /// No vortices in any of the `m` species.
    pub fn empty(m: usize) -> Self {
        VortexConfiguration {
            points: vec![Vec::new(); m],
        }
    }

    pub fn m(&self) -> usize {
        self.points.len()
    }

    pub fn counts(&self) -> Vec<usize> {
        self.points.iter().map(Vec::len).collect()
    }

    pub fn total(&self) -> usize {
        self.points.iter().map(Vec::len).sum()
    }

    pub fn max_radius(&self) -> f64 {
        self.points
            .iter()
            .flatten()
            .map(|p| p[0].hypot(p[1]))
            .fold(0.0, f64::max)
    }

    pub(crate) fn check_m(&self, m: usize) -> Result<()> {
        if self.m() != m {
            return Err(Error::Config(format!(
                "vortex configuration has {} species, expected m = {m}",
                self.m()
            )));
        }
        Ok(())
    }

    /// Every point scaled by `factor` about the origin.
    pub fn scaled(&self, factor: f64) -> Self {
        VortexConfiguration {
            points: self
                .points
                .iter()
                .map(|list| list.iter().map(|p| [p[0] * factor, p[1] * factor]).collect())
                .collect(),
        }
    }
}
