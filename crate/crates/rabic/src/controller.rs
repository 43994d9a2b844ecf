//! Inner-loop backstepping impedance controller: error coordinates, the
//! surface s, the adaptive robust torque law, the PD baseline, and the
//! Lyapunov monitor with its stability constants.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::estimator::EstimatorConfig;
use crate::numerics::{guarded_power_deriv, signed_pow_raw};

/// Nominal inertia used by the torque law.
#[derive(Debug, Clone, PartialEq)]
pub enum NominalInertia {
    Diagonal(DVector<f64>),
    Full(DMatrix<f64>),
}

impl NominalInertia {
    pub fn identity(n: usize) -> Self {
        NominalInertia::Diagonal(DVector::from_element(n, 1.0))
    }

    fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        match self {
            NominalInertia::Diagonal(d) => v.component_mul(d),
            NominalInertia::Full(m) => m * v,
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        match self {
            NominalInertia::Diagonal(d) => {
                if d.len() != n {
                    return Err(Error::Config("nominal inertia diagonal length mismatch".into()));
                }
                if d.iter().any(|&x| !(x > 0.0)) {
                    return Err(Error::Config("nominal inertia diagonal must be positive".into()));
                }
            }
            NominalInertia::Full(m) => {
                if m.nrows() != n || m.ncols() != n {
                    return Err(Error::Config("nominal inertia matrix dimension mismatch".into()));
                }
                if (m - m.transpose()).amax() > 1e-12 * m.amax().max(1.0) {
                    return Err(Error::Config("nominal inertia matrix must be symmetric".into()));
                }
                if m.clone().cholesky().is_none() {
                    return Err(Error::Config("nominal inertia matrix must be positive definite".into()));
                }
            }
        }
        Ok(())
    }
}

/// Backstepping gains and design constants.
#[derive(Debug, Clone, PartialEq)]
pub struct GainSet {
    pub k1: DVector<f64>,
    pub k2: DVector<f64>,
    /// Fractional-power exponent, restricted to (0.5, 1): the factors
    /// xi1^(2l-1) and |xi1|^(2(l-1)) are real and nonsingular (up to the
    /// guard) only there.
    pub l: f64,
    pub mu: DVector<f64>,
    pub d_hat: NominalInertia,
    /// Boundary-layer width for the sign term; 0 means exact sign.
    pub sign_smoothing_eps: f64,
    /// Guard threshold for the |xi1|^(2(l-1)) factor.
    pub xi1_guard_eps: f64,
}

impl GainSet {
    pub fn new(
        k1: DVector<f64>,
        k2: DVector<f64>,
        l: f64,
        mu: DVector<f64>,
        d_hat: NominalInertia,
        sign_smoothing_eps: f64,
        xi1_guard_eps: f64,
    ) -> Result<Self> {
        let n = k1.len();
        if k2.len() != n || mu.len() != n {
            return Err(Error::Config("gain vectors must share one length".into()));
        }
        for (name, v) in [("k1", &k1), ("k2", &k2), ("mu", &mu)] {
            if v.iter().any(|&x| !(x > 0.0)) {
                return Err(Error::Config(format!("{name} entries must be strictly positive")));
            }
        }
        if !(l > 0.5 && l < 1.0) {
            return Err(Error::Config(format!(
                "exponent l must lie in (0.5, 1), got {l}"
            )));
        }
        if !(sign_smoothing_eps >= 0.0) {
            return Err(Error::Config("sign smoothing width must be nonnegative".into()));
        }
        if !(xi1_guard_eps > 0.0) {
            return Err(Error::Config("xi1 guard threshold must be positive".into()));
        }
        d_hat.validate(n)?;
        Ok(Self {
            k1,
            k2,
            l,
            mu,
            d_hat,
            sign_smoothing_eps,
            xi1_guard_eps,
        })
    }

    pub fn n(&self) -> usize {
        self.k1.len()
    }
}

/// PD baseline gains.
#[derive(Debug, Clone, PartialEq)]
pub struct PdGains {
    pub kp: DVector<f64>,
    pub kd: DVector<f64>,
}

impl PdGains {
    pub fn new(kp: DVector<f64>, kd: DVector<f64>) -> Result<Self> {
        if kp.len() != kd.len() {
            return Err(Error::Config("kp and kd must share one length".into()));
        }
        if kp.iter().chain(kd.iter()).any(|&x| !(x > 0.0)) {
            return Err(Error::Config("PD gains must be strictly positive".into()));
        }
        Ok(Self { kp, kd })
    }
}

/// Tracking error coordinates and the backstepping surface.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorCoordinates {
    pub e: DVector<f64>,
    pub e_dot: DVector<f64>,
    /// Integral of (e_dot + mu e).
    pub xi1: DVector<f64>,
    /// e_dot + mu e.
    pub xi2: DVector<f64>,
    /// Surface s_i = xi2_i + k1_i xi1_i^(2l-1) (signed power).
    pub s: DVector<f64>,
}

impl ErrorCoordinates {
    fn build(
        theta_r: &DVector<f64>,
        theta_r_dot: &DVector<f64>,
        theta: &DVector<f64>,
        theta_dot: &DVector<f64>,
        gains: &GainSet,
        xi1: DVector<f64>,
    ) -> Self {
        let e = theta_r - theta;
        let e_dot = theta_r_dot - theta_dot;
        let xi2 = &e_dot + e.component_mul(&gains.mu);
        let s = surface(&xi1, &xi2, gains);
        Self { e, e_dot, xi1, xi2, s }
    }

    /// Coordinates at controller start: xi1 = 0.
    pub fn initial(
        theta_r: &DVector<f64>,
        theta_r_dot: &DVector<f64>,
        theta: &DVector<f64>,
        theta_dot: &DVector<f64>,
        gains: &GainSet,
    ) -> Self {
        let n = theta.len();
        Self::build(theta_r, theta_r_dot, theta, theta_dot, gains, DVector::zeros(n))
    }
}

/// s_i = xi2_i + k1_i * signed_pow(xi1_i, 2l - 1).
pub fn surface(xi1: &DVector<f64>, xi2: &DVector<f64>, gains: &GainSet) -> DVector<f64> {
    let q = 2.0 * gains.l - 1.0;
    DVector::from_fn(xi1.len(), |i, _| {
        xi2[i] + gains.k1[i] * signed_pow_raw(xi1[i], q)
    })
}

/// Advance the error coordinates: xi1 by trapezoid from the previous xi2
/// sample, everything else recomputed from the new states.
pub fn error_coords(
    theta_r: &DVector<f64>,
    theta_r_dot: &DVector<f64>,
    theta: &DVector<f64>,
    theta_dot: &DVector<f64>,
    gains: &GainSet,
    prev: &ErrorCoordinates,
    dt: f64,
) -> Result<ErrorCoordinates> {
    if !(dt > 0.0) {
        return Err(Error::Domain(format!("error_coords: dt must be positive, got {dt}")));
    }
    let e = theta_r - theta;
    let e_dot = theta_r_dot - theta_dot;
    let xi2 = &e_dot + e.component_mul(&gains.mu);
    let xi1 = &prev.xi1 + (&prev.xi2 + &xi2) * (0.5 * dt);
    Ok(ErrorCoordinates::build(theta_r, theta_r_dot, theta, theta_dot, gains, xi1))
}

#[inline]
fn smoothed_sign(s: f64, eps: f64) -> f64 {
    if eps == 0.0 {
        if s > 0.0 {
            1.0
        } else if s < 0.0 {
            -1.0
        } else {
            0.0
        }
    } else {
        s / s.abs().max(eps)
    }
}

/// The adaptive robust backstepping torque law, per joint:
///
/// tau_i = D_hat [ xi1_i + k1_i (2l-1) xi2_i |xi1_i|^(2(l-1))
///               + k2_i signed_pow(s_i, 2l-1)
///               + tau_hat_i + sgn(s_i) psi_hat_i ]
pub fn rabic_torque(
    gains: &GainSet,
    coords: &ErrorCoordinates,
    tau_hat: &DVector<f64>,
    psi_hat: &DVector<f64>,
) -> Result<DVector<f64>> {
    let n = gains.n();
    if coords.xi1.len() != n || tau_hat.len() != n || psi_hat.len() != n {
        return Err(Error::Dimension {
            what: "rabic_torque",
            expected: n,
            got: coords.xi1.len().max(tau_hat.len()).max(psi_hat.len()),
        });
    }
    let q = 2.0 * gains.l - 1.0;
    let mut bracket = DVector::zeros(n);
    for i in 0..n {
        let deriv = guarded_power_deriv(coords.xi1[i], gains.l, gains.xi1_guard_eps);
        let s = coords.s[i];
        bracket[i] = coords.xi1[i] + gains.k1[i] * q * coords.xi2[i] * deriv
            + gains.k2[i] * signed_pow_raw(s, q)
            + tau_hat[i]
            + smoothed_sign(s, gains.sign_smoothing_eps) * psi_hat[i];
    }
    let tau = gains.d_hat.apply(&bracket);
    for i in 0..n {
        if !tau[i].is_finite() {
            return Err(Error::numeric(format!("rabic_torque non-finite on joint {}", i + 1)));
        }
    }
    Ok(tau)
}

/// PD baseline: tau = kp (theta_d - theta) + kd (theta_d_dot - theta_dot).
pub fn pd_torque(
    pd: &PdGains,
    theta_d: &DVector<f64>,
    theta_d_dot: &DVector<f64>,
    theta: &DVector<f64>,
    theta_dot: &DVector<f64>,
) -> DVector<f64> {
    (theta_d - theta).component_mul(&pd.kp) + (theta_d_dot - theta_dot).component_mul(&pd.kd)
}

/// Lyapunov candidate of one joint, for the synthetic-truth harness:
/// V_i = 0.5 xi1^2 + 0.5 s^2 + 0.5 (phi_tilde . phi_tilde / rho_phi + psi_tilde^2 / rho_psi).
pub fn lyapunov_value(
    xi1_i: f64,
    s_i: f64,
    phi_tilde: &DVector<f64>,
    psi_tilde: f64,
    cfg: &EstimatorConfig,
    joint: usize,
) -> f64 {
    0.5 * xi1_i * xi1_i
        + 0.5 * s_i * s_i
        + 0.5 * (phi_tilde.dot(phi_tilde) / cfg.rho_phi[joint] + psi_tilde * psi_tilde / cfg.rho_psi[joint])
}

/// Per-joint practical finite-time stability constants.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityCertificate {
    pub rho: Vec<f64>,
    pub c: Vec<f64>,
    pub l: f64,
}

/// rho_i = min{2 k1_i, 2 k2_i, sigma_phi_i, sigma_psi_i} and
/// c_i per the closed-loop descent bound, with p = l^(l/(1-l)).
pub fn stability_constants(
    gains: &GainSet,
    cfg: &EstimatorConfig,
    phi_true: &DVector<f64>,
    psi_true: f64,
    joint: usize,
) -> (f64, f64) {
    let rho = (2.0 * gains.k1[joint])
        .min(2.0 * gains.k2[joint])
        .min(cfg.sigma_phi[joint])
        .min(cfg.sigma_psi[joint]);
    let l = gains.l;
    let p = l.powf(l / (1.0 - l));
    let a_phi = cfg.sigma_phi[joint] / (2.0 * cfg.rho_phi[joint]);
    let a_psi = cfg.sigma_psi[joint] / (2.0 * cfg.rho_psi[joint]);
    let c = (a_phi + a_psi) * (1.0 - l) * p
        + a_phi * phi_true.dot(phi_true)
        + a_psi * psi_true * psi_true;
    (rho, c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn gains(n: usize) -> GainSet {
        GainSet::new(
            DVector::from_element(n, 1.0),
            DVector::from_element(n, 1.0),
            0.999,
            DVector::from_element(n, 1.0),
            NominalInertia::identity(n),
            0.0,
            1e-3,
        )
        .unwrap()
    }

    fn est_cfg(n: usize) -> EstimatorConfig {
        EstimatorConfig::new(
            1,
            1,
            DVector::from_element(n, 50.0),
            DVector::from_element(n, 0.005),
            DVector::from_element(n, 0.1),
            DVector::from_element(n, 0.005),
        )
        .unwrap()
    }

    #[test]
    fn gain_validation() {
        assert!(GainSet::new(
            DVector::from_element(1, 1.0),
            DVector::from_element(1, 1.0),
            0.4,
            DVector::from_element(1, 1.0),
            NominalInertia::identity(1),
            0.0,
            1e-3,
        )
        .is_err());
        assert!(GainSet::new(
            DVector::from_element(1, -1.0),
            DVector::from_element(1, 1.0),
            0.9,
            DVector::from_element(1, 1.0),
            NominalInertia::identity(1),
            0.0,
            1e-3,
        )
        .is_err());
    }

    #[test]
    fn zero_error_gives_zero_coordinates() {
        let g = gains(2);
        let th = DVector::from_vec(vec![0.3, -0.1]);
        let thd = DVector::from_vec(vec![0.5, 0.0]);
        let c = ErrorCoordinates::initial(&th, &thd, &th, &thd, &g);
        assert!(c.e.amax() == 0.0 && c.xi1.amax() == 0.0 && c.xi2.amax() == 0.0 && c.s.amax() == 0.0);
    }

    #[test]
    fn xi2_from_position_error_only() {
        let g = gains(1);
        let c = ErrorCoordinates::initial(
            &DVector::from_vec(vec![0.1]),
            &DVector::zeros(1),
            &DVector::zeros(1),
            &DVector::zeros(1),
            &g,
        );
        assert_relative_eq!(c.xi2[0], 0.1, epsilon = 1e-15);
    }

    #[test]
    fn xi1_quadrature_of_constant_xi2() {
        let g = gains(1);
        // theta_r - theta = 0 but rate error 1 => xi2 = 1 constant.
        let mut coords = ErrorCoordinates::initial(
            &DVector::zeros(1),
            &DVector::from_vec(vec![1.0]),
            &DVector::zeros(1),
            &DVector::zeros(1),
            &g,
        );
        for _ in 0..1000 {
            coords = error_coords(
                &DVector::zeros(1),
                &DVector::from_vec(vec![1.0]),
                &DVector::zeros(1),
                &DVector::zeros(1),
                &g,
                &coords,
                0.001,
            )
            .unwrap();
        }
        assert_relative_eq!(coords.xi1[0], 1.0, epsilon = 1e-9);
    }

    #[test]
    fn surface_recomputation_is_bit_stable() {
        let g = gains(3);
        let mut coords = ErrorCoordinates::initial(
            &DVector::from_vec(vec![0.5, -0.2, 1.0]),
            &DVector::from_vec(vec![0.1, 0.0, -0.3]),
            &DVector::zeros(3),
            &DVector::zeros(3),
            &g,
        );
        for _ in 0..50 {
            coords = error_coords(
                &DVector::from_vec(vec![0.5, -0.2, 1.0]),
                &DVector::from_vec(vec![0.1, 0.0, -0.3]),
                &DVector::zeros(3),
                &DVector::zeros(3),
                &g,
                &coords,
                0.001,
            )
            .unwrap();
            let re = surface(&coords.xi1, &coords.xi2, &g);
            for i in 0..3 {
                assert_eq!(re[i], coords.s[i]);
            }
        }
    }

    #[test]
    fn torque_zero_at_origin() {
        let g = gains(2);
        let coords = ErrorCoordinates::initial(
            &DVector::zeros(2),
            &DVector::zeros(2),
            &DVector::zeros(2),
            &DVector::zeros(2),
            &g,
        );
        let tau = rabic_torque(&g, &coords, &DVector::zeros(2), &DVector::zeros(2)).unwrap();
        assert!(tau.amax() == 0.0);
    }

    #[test]
    fn torque_scalar_hand_evaluation() {
        let g = gains(1);
        let xi1 = DVector::from_vec(vec![0.5]);
        let xi2 = DVector::from_vec(vec![0.2]);
        let s = surface(&xi1, &xi2, &g);
        let coords = ErrorCoordinates {
            e: DVector::zeros(1),
            e_dot: DVector::zeros(1),
            xi1,
            xi2,
            s,
        };
        let tau = rabic_torque(
            &g,
            &coords,
            &DVector::from_vec(vec![0.3]),
            &DVector::from_vec(vec![0.1]),
        )
        .unwrap();
        // Hand evaluation of the law term by term with high-precision powers.
        assert_relative_eq!(tau[0], 1.801_069_153_207_356_4, epsilon = 1e-12);
    }

    #[test]
    fn torque_odd_in_error_coordinates() {
        let g = gains(2);
        let xi1 = DVector::from_vec(vec![0.4, -0.7]);
        let xi2 = DVector::from_vec(vec![-0.2, 0.9]);
        let tau_hat = DVector::from_vec(vec![0.3, -0.1]);
        let psi_hat = DVector::from_vec(vec![0.2, 0.5]);
        let mk = |xi1: &DVector<f64>, xi2: &DVector<f64>| ErrorCoordinates {
            e: DVector::zeros(2),
            e_dot: DVector::zeros(2),
            xi1: xi1.clone(),
            xi2: xi2.clone(),
            s: surface(xi1, xi2, &g),
        };
        let plus = rabic_torque(&g, &mk(&xi1, &xi2), &tau_hat, &psi_hat).unwrap();
        let minus = rabic_torque(&g, &mk(&(-&xi1), &(-&xi2)), &(-&tau_hat), &psi_hat).unwrap();
        for i in 0..2 {
            assert_relative_eq!(plus[i], -minus[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn torque_homogeneous_in_nominal_inertia() {
        let mut g = gains(2);
        let xi1 = DVector::from_vec(vec![0.4, -0.7]);
        let xi2 = DVector::from_vec(vec![-0.2, 0.9]);
        let coords = ErrorCoordinates {
            e: DVector::zeros(2),
            e_dot: DVector::zeros(2),
            xi1: xi1.clone(),
            xi2: xi2.clone(),
            s: surface(&xi1, &xi2, &g),
        };
        let tau_hat = DVector::from_vec(vec![0.3, -0.1]);
        let psi_hat = DVector::from_vec(vec![0.2, 0.5]);
        let one = rabic_torque(&g, &coords, &tau_hat, &psi_hat).unwrap();
        g.d_hat = NominalInertia::Diagonal(DVector::from_element(2, 3.0));
        let three = rabic_torque(&g, &coords, &tau_hat, &psi_hat).unwrap();
        for i in 0..2 {
            assert_relative_eq!(three[i], 3.0 * one[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn robust_term_magnitude_with_exact_sign() {
        let g = gains(1);
        let xi1 = DVector::zeros(1);
        let xi2 = DVector::from_vec(vec![1e-9]);
        let coords = ErrorCoordinates {
            e: DVector::zeros(1),
            e_dot: DVector::zeros(1),
            xi1: xi1.clone(),
            xi2: xi2.clone(),
            s: surface(&xi1, &xi2, &g),
        };
        let with = rabic_torque(&g, &coords, &DVector::zeros(1), &DVector::from_vec(vec![0.7])).unwrap();
        let without = rabic_torque(&g, &coords, &DVector::zeros(1), &DVector::zeros(1)).unwrap();
        assert_relative_eq!((with[0] - without[0]).abs(), 0.7, epsilon = 1e-12);
    }

    #[test]
    fn pd_cases() {
        let pd = PdGains::new(
            DVector::from_vec(vec![60.0, 60.0]),
            DVector::from_vec(vec![24.0, 24.0]),
        )
        .unwrap();
        let zero = DVector::zeros(2);
        let tau = pd_torque(&pd, &zero, &zero, &zero, &zero);
        assert!(tau.amax() == 0.0);

        let tau = pd_torque(&pd, &DVector::from_vec(vec![0.1, 0.0]), &zero, &zero, &zero);
        assert_relative_eq!(tau[0], 6.0, epsilon = 1e-12);

        let pd = PdGains::new(DVector::from_element(1, 60.0), DVector::from_element(1, 24.0)).unwrap();
        let tau = pd_torque(
            &pd,
            &DVector::zeros(1),
            &DVector::zeros(1),
            &DVector::zeros(1),
            &DVector::from_vec(vec![0.5]),
        );
        assert_relative_eq!(tau[0], -12.0, epsilon = 1e-12);
    }

    #[test]
    fn pd_homogeneous_in_gains() {
        let pd = PdGains::new(DVector::from_element(1, 6.0), DVector::from_element(1, 2.0)).unwrap();
        let pd2 = PdGains::new(DVector::from_element(1, 12.0), DVector::from_element(1, 4.0)).unwrap();
        let d = DVector::from_vec(vec![0.3]);
        let v = DVector::from_vec(vec![-0.2]);
        let z = DVector::zeros(1);
        let a = pd_torque(&pd, &d, &v, &z, &z);
        let b = pd_torque(&pd2, &d, &v, &z, &z);
        assert_relative_eq!(b[0], 2.0 * a[0], epsilon = 1e-15);
    }

    #[test]
    fn lyapunov_trivial_values() {
        let c = est_cfg(1);
        assert_eq!(lyapunov_value(0.0, 0.0, &DVector::zeros(3), 0.0, &c, 0), 0.0);
        assert_relative_eq!(
            lyapunov_value(1.0, 0.0, &DVector::zeros(3), 0.0, &c, 0),
            0.5,
            epsilon = 1e-15
        );
    }

    #[test]
    fn decay_rate_is_smallest_gain_or_leak() {
        let g = GainSet::new(
            DVector::from_element(1, 5.76),
            DVector::from_element(1, 7.7),
            0.999,
            DVector::from_element(1, 1.0),
            NominalInertia::identity(1),
            0.0,
            1e-3,
        )
        .unwrap();
        let c = est_cfg(1);
        let (rho, _) = stability_constants(&g, &c, &DVector::zeros(3), 0.0, 0);
        assert_relative_eq!(rho, 0.005, epsilon = 1e-15);
    }

    #[test]
    fn stability_constant_c_vanishes_in_limit() {
        let c = est_cfg(1);
        for l in [0.999, 0.999_99] {
            let g = GainSet::new(
                DVector::from_element(1, 1.0),
                DVector::from_element(1, 1.0),
                l,
                DVector::from_element(1, 1.0),
                NominalInertia::identity(1),
                0.0,
                1e-3,
            )
            .unwrap();
            let (_, ci) = stability_constants(&g, &c, &DVector::zeros(3), 0.0, 0);
            // Both (1-l)p and the parameter terms vanish with phi = psi = 0, l -> 1.
            assert!(ci < (1.0 - l) * 1.0 * (0.005 / 100.0 + 0.005 / 0.2) * 1.01);
        }
    }

    #[test]
    fn stability_constant_c_matches_recomputation() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let k1 = rng.gen_range(0.1..10.0);
            let k2 = rng.gen_range(0.1..10.0);
            let l: f64 = rng.gen_range(0.6..0.999);
            let g = GainSet::new(
                DVector::from_element(1, k1),
                DVector::from_element(1, k2),
                l,
                DVector::from_element(1, 1.0),
                NominalInertia::identity(1),
                0.0,
                1e-3,
            )
            .unwrap();
            let cfg = EstimatorConfig::new(
                1,
                1,
                DVector::from_element(1, rng.gen_range(0.1..50.0)),
                DVector::from_element(1, rng.gen_range(0.001..1.0)),
                DVector::from_element(1, rng.gen_range(0.01..1.0)),
                DVector::from_element(1, rng.gen_range(0.001..1.0)),
            )
            .unwrap();
            let phi = DVector::from_fn(3, |_, _| rng.gen_range(-2.0..2.0));
            let psi = rng.gen_range(0.0..2.0);
            let (rho, c) = stability_constants(&g, &cfg, &phi, psi, 0);
            // Independent re-evaluation.
            let p = l.powf(l / (1.0 - l));
            let c_ref = (cfg.sigma_phi[0] / (2.0 * cfg.rho_phi[0]) + cfg.sigma_psi[0] / (2.0 * cfg.rho_psi[0]))
                * (1.0 - l)
                * p
                + cfg.sigma_phi[0] / (2.0 * cfg.rho_phi[0]) * phi.dot(&phi)
                + cfg.sigma_psi[0] / (2.0 * cfg.rho_psi[0]) * psi * psi;
            let rho_ref = (2.0 * k1).min(2.0 * k2).min(cfg.sigma_phi[0]).min(cfg.sigma_psi[0]);
            assert!((c - c_ref).abs() <= 1e-12 * c_ref.abs().max(1.0));
            assert_eq!(rho, rho_ref);
        }
    }
}
