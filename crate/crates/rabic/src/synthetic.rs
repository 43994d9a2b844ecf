//! Scalar synthetic plant whose lumped uncertainty is *exactly* a regressor
//! inner product gamma^T phi_true plus a known bounded disturbance. Because
//! the truth is representable in the estimator's basis, the closed loop must
//! obey the practical finite-time descent certificate
//! `V_dot + rho V^l <= c`,
//! which this module evaluates sample-by-sample with a central-difference
//! V_dot. Used by the invariant checker and the acceptance gate.

use nalgebra::DVector;

use crate::controller::{
    lyapunov_value, rabic_torque, stability_constants, surface, ErrorCoordinates, GainSet,
    NominalInertia,
};
use crate::error::{Error, Result};
use crate::estimator::{predict_uncertainty, EstimatorConfig, JointEstimator};
use crate::numerics::rk4_step;

/// Scalar closed-loop experiment description.
#[derive(Debug, Clone)]
pub struct SyntheticParams {
    pub k1: f64,
    pub k2: f64,
    pub l: f64,
    pub d_hat: f64,
    pub est: EstimatorConfig,
    /// True Taylor coefficients, length est.regressor_len().
    pub phi_true: DVector<f64>,
    /// Amplitude of the bounded disturbance d(t) = psi_true sin(omega t).
    pub psi_true: f64,
    pub disturbance_omega: f64,
    pub xi1_0: f64,
    pub xi2_0: f64,
    pub duration: f64,
    pub dt: f64,
}

impl SyntheticParams {
    /// A representative stable configuration.
    pub fn default_case() -> Self {
        SyntheticParams {
            k1: 2.0,
            k2: 2.0,
            l: 0.999,
            d_hat: 1.0,
            est: EstimatorConfig::new(
                1,
                1,
                DVector::from_element(1, 50.0),
                DVector::from_element(1, 0.005),
                DVector::from_element(1, 0.1),
                DVector::from_element(1, 0.005),
            )
            .unwrap(),
            phi_true: DVector::from_vec(vec![0.4, -0.3, 0.6]),
            psi_true: 0.0,
            disturbance_omega: 3.0,
            xi1_0: 1.0,
            xi2_0: 0.5,
            duration: 10.0,
            dt: 0.001,
        }
    }
}

/// Recorded closed-loop trace plus the certificate constants.
#[derive(Debug, Clone)]
pub struct SyntheticTrace {
    pub t: Vec<f64>,
    pub v: Vec<f64>,
    pub xi1: Vec<f64>,
    pub s: Vec<f64>,
    pub psi_hat: Vec<f64>,
    pub rho: f64,
    pub c: f64,
    pub l: f64,
}

fn gains_of(p: &SyntheticParams) -> Result<GainSet> {
    GainSet::new(
        DVector::from_element(1, p.k1),
        DVector::from_element(1, p.k2),
        p.l,
        DVector::from_element(1, 1.0),
        NominalInertia::Diagonal(DVector::from_element(1, p.d_hat)),
        0.0,
        1e-3,
    )
}

/// Integrate the scalar error dynamics
///   xi1_dot = xi2,  xi2_dot = gamma^T phi_true + d(t) - tau / d_hat
/// under the adaptive robust law, with the torque zero-order-held per step
/// and the adaptation laws stepped by forward Euler.
pub fn run_synthetic(p: &SyntheticParams) -> Result<SyntheticTrace> {
    if p.est.n() != 1 {
        return Err(Error::Config("synthetic plant is scalar; estimator must have n = 1".into()));
    }
    if p.phi_true.len() != p.est.regressor_len() {
        return Err(Error::Config("phi_true length must match the regressor".into()));
    }
    if p.psi_true < 0.0 {
        return Err(Error::Config("psi_true must be nonnegative".into()));
    }
    let gains = gains_of(p)?;
    let (rho, c) = stability_constants(&gains, &p.est, &p.phi_true, p.psi_true, 0);

    let steps = (p.duration / p.dt).round() as usize;
    let mut t_vec = Vec::with_capacity(steps + 1);
    let mut v_vec = Vec::with_capacity(steps + 1);
    let mut xi1_vec = Vec::with_capacity(steps + 1);
    let mut s_vec = Vec::with_capacity(steps + 1);
    let mut psi_vec = Vec::with_capacity(steps + 1);

    // Plant state: [xi1, xi2, acc] with acc the integral of (xi2 - xi2(0)),
    // shared with the estimator so the truth stays in the regressor span.
    let mut state = DVector::from_vec(vec![p.xi1_0, p.xi2_0, 0.0]);
    let mut est = JointEstimator::new(&p.est, p.xi2_0);

    for k in 0..=steps {
        let t = k as f64 * p.dt;
        est.integral_acc = state[2];
        let xi1 = DVector::from_element(1, state[0]);
        let xi2 = DVector::from_element(1, state[1]);
        let s = surface(&xi1, &xi2, &gains);
        let gamma = est.build_regressor(&p.est, state[1]);

        let phi_tilde = &p.phi_true - &est.phi_hat;
        // The disturbance bound estimate should converge toward psi_true;
        // its error enters V the same way.
        let psi_tilde = p.psi_true - est.psi_hat;
        let v = lyapunov_value(state[0], s[0], &phi_tilde, psi_tilde, &p.est, 0);
        t_vec.push(t);
        v_vec.push(v);
        xi1_vec.push(state[0]);
        s_vec.push(s[0]);
        psi_vec.push(est.psi_hat);
        if k == steps {
            break;
        }

        let tau_hat = DVector::from_element(1, predict_uncertainty(&gamma, &est.phi_hat)?);
        let psi_hat = DVector::from_element(1, est.psi_hat);
        let coords = ErrorCoordinates {
            e: DVector::zeros(1),
            e_dot: DVector::zeros(1),
            xi1,
            xi2,
            s: s.clone(),
            };
        let tau = rabic_torque(&gains, &coords, &tau_hat, &psi_hat)?[0];

        est.update_phi(&gamma, s[0], p.est.rho_phi[0], p.est.sigma_phi[0], p.dt)?;
        est.update_psi(s[0], p.est.rho_psi[0], p.est.sigma_psi[0], p.dt);

        let xi2_ref = est.xi2_0;
        let est_cfg = &p.est;
        let est_frozen = est.clone();
        state = rk4_step(
            |tt, x| {
                let mut g_est = est_frozen.clone();
                g_est.integral_acc = x[2];
                let gamma = g_est.build_regressor(est_cfg, x[1]);
                let h = gamma.dot(&p.phi_true)
                    + p.psi_true * (p.disturbance_omega * (t + tt)).sin();
                DVector::from_vec(vec![x[1], h - tau / p.d_hat, x[1] - xi2_ref])
            },
            &state,
            0.0,
            p.dt,
        )?;
        if state.iter().any(|v| !v.is_finite()) {
            return Err(Error::numeric_at("synthetic state became non-finite", t));
        }
    }

    Ok(SyntheticTrace {
        t: t_vec,
        v: v_vec,
        xi1: xi1_vec,
        s: s_vec,
        psi_hat: psi_vec,
        rho,
        c,
        l: p.l,
    })
}

/// Fraction of interior samples where the descent certificate
/// V_dot + rho V^l <= c + tol holds, with central-difference V_dot.
pub fn certificate_fraction(trace: &SyntheticTrace, tol: f64) -> Result<f64> {
    let m = trace.v.len();
    if m < 3 {
        return Err(Error::Domain("certificate check needs at least three samples".into()));
    }
    let dt = trace.t[1] - trace.t[0];
    let mut ok = 0usize;
    for k in 1..m - 1 {
        let v_dot = (trace.v[k + 1] - trace.v[k - 1]) / (2.0 * dt);
        if v_dot + trace.rho * trace.v[k].powf(trace.l) <= trace.c + tol {
            ok += 1;
        }
    }
    Ok(ok as f64 / (m - 2) as f64)
}
