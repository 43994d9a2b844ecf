//! Per-joint Taylor-series uncertainty estimator and the two adaptation
//! laws, maintaining the Taylor coefficients phi_hat, the disturbance-bound
//! estimate psi_hat, and the regressor's integral accumulator.
//!
//! The regressor around the expansion point xi2_0 is
//! gamma = [1, acc, .., acc^l1, (xi2 - xi2_0), .., (xi2 - xi2_0)^l2]
//! with acc = integral of (xi2 - xi2_0).

use nalgebra::DVector;

use crate::error::{Error, Result};

/// Taylor orders and per-joint adaptation rates/leaks.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorConfig {
    /// Taylor order of the integral branch.
    pub l1: usize,
    /// Taylor order of the direct branch.
    pub l2: usize,
    pub rho_phi: DVector<f64>,
    pub sigma_phi: DVector<f64>,
    pub rho_psi: DVector<f64>,
    pub sigma_psi: DVector<f64>,
}

impl EstimatorConfig {
    pub fn new(
        l1: usize,
        l2: usize,
        rho_phi: DVector<f64>,
        sigma_phi: DVector<f64>,
        rho_psi: DVector<f64>,
        sigma_psi: DVector<f64>,
    ) -> Result<Self> {
        if l1 + l2 < 1 {
            return Err(Error::Config("estimator needs l1 + l2 >= 1".into()));
        }
        let n = rho_phi.len();
        if sigma_phi.len() != n || rho_psi.len() != n || sigma_psi.len() != n {
            return Err(Error::Config("estimator rate vectors must share one length".into()));
        }
        for (name, v) in [
            ("rho_phi", &rho_phi),
            ("sigma_phi", &sigma_phi),
            ("rho_psi", &rho_psi),
            ("sigma_psi", &sigma_psi),
        ] {
            if v.iter().any(|&x| !(x > 0.0)) {
                return Err(Error::Config(format!("{name} entries must be strictly positive")));
            }
        }
        Ok(Self {
            l1,
            l2,
            rho_phi,
            sigma_phi,
            rho_psi,
            sigma_psi,
        })
    }

    /// Regressor length l1 + l2 + 1.
    pub fn regressor_len(&self) -> usize {
        self.l1 + self.l2 + 1
    }

    pub fn n(&self) -> usize {
        self.rho_phi.len()
    }
}

/// Adaptive state of one joint.
#[derive(Debug, Clone, PartialEq)]
pub struct JointEstimator {
    /// Taylor coefficient estimates, length l1 + l2 + 1.
    pub phi_hat: DVector<f64>,
    /// Disturbance-bound estimate, clamped at >= 0.
    pub psi_hat: f64,
    /// Expansion reference point, fixed at the value of xi2 at start.
    pub xi2_0: f64,
    /// Integral of (xi2 - xi2_0).
    pub integral_acc: f64,
    prev_offset: f64,
}

impl JointEstimator {
    /// Zero-knowledge start: phi_hat = 0, psi_hat = 0, expansion point at
    /// the initial xi2 sample.
    pub fn new(cfg: &EstimatorConfig, xi2_initial: f64) -> Self {
        Self {
            phi_hat: DVector::zeros(cfg.regressor_len()),
            psi_hat: 0.0,
            xi2_0: xi2_initial,
            integral_acc: 0.0,
            prev_offset: 0.0,
        }
    }

    /// gamma = [1, acc^1..acc^l1, (xi2 - xi2_0)^1..(xi2 - xi2_0)^l2].
    pub fn build_regressor(&self, cfg: &EstimatorConfig, xi2: f64) -> DVector<f64> {
        let mut gamma = DVector::zeros(cfg.regressor_len());
        gamma[0] = 1.0;
        let mut p = 1.0;
        for k in 0..cfg.l1 {
            p *= self.integral_acc;
            gamma[1 + k] = p;
        }
        let offset = xi2 - self.xi2_0;
        let mut p = 1.0;
        for m in 0..cfg.l2 {
            p *= offset;
            gamma[1 + cfg.l1 + m] = p;
        }
        gamma
    }

    /// Forward-Euler step of phi_hat_dot = rho_phi s gamma - sigma_phi phi_hat.
    pub fn update_phi(&mut self, gamma: &DVector<f64>, s: f64, rho: f64, sigma: f64, dt: f64) -> Result<()> {
        if gamma.len() != self.phi_hat.len() {
            return Err(Error::Dimension {
                what: "update_phi regressor",
                expected: self.phi_hat.len(),
                got: gamma.len(),
            });
        }
        for i in 0..self.phi_hat.len() {
            self.phi_hat[i] += dt * (rho * s * gamma[i] - sigma * self.phi_hat[i]);
        }
        if self.phi_hat.iter().any(|v| !v.is_finite()) {
            return Err(Error::numeric("phi_hat became non-finite"));
        }
        Ok(())
    }

    /// Forward-Euler step of psi_hat_dot = rho_psi |s| - sigma_psi psi_hat,
    /// clamped at zero.
    pub fn update_psi(&mut self, s: f64, rho: f64, sigma: f64, dt: f64) {
        self.psi_hat += dt * (rho * s.abs() - sigma * self.psi_hat);
        if self.psi_hat < 0.0 {
            self.psi_hat = 0.0;
        }
    }

    /// Trapezoidal accumulation of (xi2 - xi2_0).
    pub fn advance_integral(&mut self, xi2: f64, dt: f64) {
        let offset = xi2 - self.xi2_0;
        self.integral_acc += 0.5 * dt * (self.prev_offset + offset);
        self.prev_offset = offset;
    }
}

/// Inner product gamma^T phi_hat, the estimator output tau_hat.
pub fn predict_uncertainty(gamma: &DVector<f64>, phi_hat: &DVector<f64>) -> Result<f64> {
    if gamma.len() != phi_hat.len() {
        return Err(Error::Dimension {
            what: "predict_uncertainty",
            expected: phi_hat.len(),
            got: gamma.len(),
        });
    }
    Ok(gamma.dot(phi_hat))
}
