//! Reference solutions computed independently of the Picard iteration.

use thiserror::Error;

use crate::fields::{dieudonne_q, heaviside};
use crate::quadrature::PiecewiseConst;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("amplitude must be positive and finite")]
    BadAmplitude,
    #[error("horizon must be finite and nonnegative (positive for event stepping)")]
    BadHorizon,
    #[error("step count must be positive")]
    BadSteps,
}

/// Affine piece `u(t) = alpha + beta·t` on `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarSolution {
    pub segments: Vec<Segment>,
    /// Times where the slope changes sign.
    pub switch_times: Vec<f64>,
}

impl ScalarSolution {
    pub fn value_at(&self, t: f64) -> f64 {
        let idx = self.segments.partition_point(|s| s.end <= t).min(self.segments.len() - 1);
        let s = &self.segments[idx];
        s.alpha + s.beta * t
    }
}

/// Solves `u' = a·H(u + ρ(t))`, `u(0) = u0` on `[0, T]`, one `ρ` piece at a
/// time. The slope is fixed at the start of each piece.
pub fn scalar_heaviside_solve(a: f64, rho: &PiecewiseConst, u0: f64, horizon: f64) -> Result<ScalarSolution, OracleError> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(OracleError::BadAmplitude);
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(OracleError::BadHorizon);
    }
    let mut cuts = vec![0.0];
    cuts.extend(rho.breaks().iter().copied().filter(|&b| b > 0.0 && b < horizon));
    cuts.push(horizon);

    let mut segments = Vec::with_capacity(cuts.len() - 1);
    let mut switch_times = Vec::new();
    let mut u = u0;
    let mut prev_slope: Option<f64> = None;
    for w in cuts.windows(2) {
        let (s, e) = (w[0], w[1]);
        let beta = a * heaviside(u + rho.value(s));
        if prev_slope.is_some_and(|p| p != beta) {
            switch_times.push(s);
        }
        prev_slope = Some(beta);
        segments.push(Segment { start: s, end: e, alpha: u - beta * s, beta });
        u += beta * (e - s);
    }
    Ok(ScalarSolution { segments, switch_times })
}

/// Lower bound for coordinate `k` of the minimal solution of the Dieudonné
/// system at time `T`, from `steps` explicit Euler steps starting at 0.
pub fn dieudonne_mode_solve(k: usize, horizon: f64, steps: usize) -> Result<f64, OracleError> {
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(OracleError::BadHorizon);
    }
    if steps == 0 {
        return Err(OracleError::BadSteps);
    }
    let dt = horizon / steps as f64;
    let forcing = 1.0 / (k as f64 + 1.0);
    let mut x = 0.0;
    for _ in 0..steps {
        x += dt * (dieudonne_q(x) + forcing);
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_positive_rho_gives_linear_growth() {
        let s = scalar_heaviside_solve(3.0, &PiecewiseConst::constant(1.0), 0.0, 1.0).unwrap();
        assert_eq!(s.value_at(0.5), 1.5);
        assert!(s.switch_times.is_empty());
    }

    #[test]
    fn rho_jump_reverses_the_slope() {
        let rho = PiecewiseConst::new(vec![0.5], vec![1.0, -10.0]).unwrap();
        let s = scalar_heaviside_solve(1.0, &rho, 0.0, 1.0).unwrap();
        assert_eq!(s.value_at(0.5), 0.5);
        assert_eq!(s.value_at(1.0), 0.0);
        assert_eq!(s.switch_times, vec![0.5]);
    }

    #[test]
    fn threshold_start_moves_down() {
        let s = scalar_heaviside_solve(2.0, &PiecewiseConst::constant(0.0), 0.0, 1.0).unwrap();
        assert_eq!(s.value_at(1.0), -2.0);
    }

    #[test]
    fn dieudonne_lower_bound_increases_with_resolution() {
        let coarse = dieudonne_mode_solve(0, 1.0, 100).unwrap();
        let fine = dieudonne_mode_solve(0, 1.0, 10_000).unwrap();
        assert!(coarse <= fine);
        // x' = √x + 1 from 0 stays below the linear bound 1 + T·(1 + √(1+T))
        assert!(fine > 1.0 && fine < 3.5);
        assert!(dieudonne_mode_solve(0, 1.0, 0).is_err());
        assert_eq!(dieudonne_mode_solve(3, 0.0, 10).unwrap(), 0.0);
    }
}
