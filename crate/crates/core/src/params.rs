use crate::error::{Error, Result};

/// Orientation sign `s` of the BPS reduction.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Sign {
    Plus,
    #[default]
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn from_i32(s: i32) -> Result<Self> {
        match s {
            1 => Ok(Sign::Plus),
            -1 => Ok(Sign::Minus),
            other => Err(Error::Config(format!("model.s must be +1 or -1, got {other}"))),
        }
    }
}

/// Physical and algebraic parameters of the reduced system.
///
/// `m = N - 1` species, deformation `a`, coupling `lambda = 4 mu^2`,
/// Chern-Simons level `k` (energy reporting only), sign `s`, and the
/// planar background sharpness `nu`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub m: usize,
    pub a: f64,
    pub lambda: f64,
    pub k: f64,
    pub s: Sign,
    pub nu: f64,
}

impl ModelParams {
    pub fn new(m: usize, a: f64, lambda: f64) -> Result<Self> {
        let p = ModelParams {
            m,
            a,
            lambda,
            k: 1.0,
            s: Sign::Minus,
            nu: 1.0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_nu(mut self, nu: f64) -> Result<Self> {
        self.nu = nu;
        self.validate()?;
        Ok(self)
    }

    pub fn with_lambda(mut self, lambda: f64) -> Result<Self> {
        self.lambda = lambda;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 2 {
            return Err(Error::InvalidDimension(format!(
                "m = N - 1 must be at least 2, got {}",
                self.m
            )));
        }
        if !(self.a >= 0.0) || !self.a.is_finite() {
            return Err(Error::Config(format!("model.a must be >= 0, got {}", self.a)));
        }
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(Error::Config(format!(
                "model.lambda must be > 0, got {}",
                self.lambda
            )));
        }
        if !(self.k > 0.0) || !self.k.is_finite() {
            return Err(Error::Config(format!("model.k must be > 0, got {}", self.k)));
        }
        if !(self.nu > 0.0) || !self.nu.is_finite() {
            return Err(Error::Config(format!("solver.nu must be > 0, got {}", self.nu)));
        }
        Ok(())
    }

    /// `N`, the rank of the gauge group factor.
    pub fn n_gauge(&self) -> usize {
        self.m + 1
    }

    /// Mass deformation `mu = sqrt(lambda / 4)`.
    pub fn mu(&self) -> f64 {
        (self.lambda / 4.0).sqrt()
    }

    pub fn mu_squared(&self) -> f64 {
        self.lambda / 4.0
    }
}
