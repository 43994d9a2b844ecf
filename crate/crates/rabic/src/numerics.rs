//! Scalar/vector numerical primitives: signed fractional powers, fixed-step
//! RK4 integration, finite-difference oracles, and the inequality checkers
//! used as property-test oracles.

use nalgebra::DVector;

use crate::error::{Error, Result};

/// A positive fractional exponent, restricted to (0, 2].
///
/// Exponents of this form appear as `2l - 1` and `2l` with `0.5 < l < 1`,
/// so everything the control law raises to a power stays in this range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerExponent {
    value: f64,
}

impl PowerExponent {
    pub fn new(value: f64) -> Result<Self> {
        if !value.is_finite() || value <= 0.0 || value > 2.0 {
            return Err(Error::Domain(format!(
                "power exponent must lie in (0, 2], got {value}"
            )));
        }
        Ok(Self { value })
    }

    pub fn value(self) -> f64 {
        self.value
    }
}

/// sign(x) * |x|^q. Odd in `x` and monotone nondecreasing.
pub fn signed_pow(x: f64, q: PowerExponent) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("signed_pow: non-finite input {x}")));
    }
    Ok(signed_pow_raw(x, q.value))
}

/// Unchecked version for hot loops where the exponent was validated up front.
#[inline]
pub fn signed_pow_raw(x: f64, q: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x.signum() * x.abs().powf(q)
    }
}

/// |xi1|^(2(l-1)) with a singularity guard: below `eps` the factor is frozen
/// at eps^(2(l-1)). The exponent 2(l-1) is negative for l < 1, so the raw
/// expression blows up at xi1 = 0.
///
/// Caller guarantees 0.5 < l < 1 and eps > 0 (enforced at config validation).
#[inline]
pub fn guarded_power_deriv(xi1: f64, l: f64, eps: f64) -> f64 {
    debug_assert!(l > 0.5 && l < 1.0);
    debug_assert!(eps > 0.0);
    let base = xi1.abs().max(eps);
    base.powf(2.0 * (l - 1.0))
}

/// One classical 4th-order Runge-Kutta step.
pub fn rk4_step<F>(deriv: F, state: &DVector<f64>, t: f64, dt: f64) -> Result<DVector<f64>>
where
    F: Fn(f64, &DVector<f64>) -> DVector<f64>,
{
    if !(dt > 0.0) {
        return Err(Error::Domain(format!("rk4_step: dt must be positive, got {dt}")));
    }
    let half = 0.5 * dt;
    let k1 = deriv(t, state);
    let k2 = deriv(t + half, &(state + &k1 * half));
    let k3 = deriv(t + half, &(state + &k2 * half));
    let k4 = deriv(t + dt, &(state + &k3 * dt));
    let next = state + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
    if next.iter().any(|v| !v.is_finite()) {
        return Err(Error::numeric_at("rk4_step produced non-finite state", t));
    }
    Ok(next)
}

const LEMMA_SLACK: f64 = 1e-12;

/// Young-type inequality (Appendix, first lemma):
/// |q1|^a |q2|^b <= a/(a+b) p |q1|^(a+b) + b/(a+b) p^(-a/b) |q2|^(a+b).
pub fn check_young_inequality(q1: f64, q2: f64, a: f64, b: f64, p: f64) -> Result<bool> {
    if !(a > 0.0 && b > 0.0 && p > 0.0) {
        return Err(Error::Domain(format!(
            "check_young_inequality: a, b, p must be positive (a={a}, b={b}, p={p})"
        )));
    }
    if !(q1.is_finite() && q2.is_finite()) {
        return Err(Error::Domain("check_young_inequality: non-finite q".into()));
    }
    let lhs = q1.abs().powf(a) * q2.abs().powf(b);
    let rhs = a / (a + b) * p * q1.abs().powf(a + b)
        + b / (a + b) * p.powf(-a / b) * q2.abs().powf(a + b);
    Ok(lhs <= rhs + LEMMA_SLACK)
}

/// Power subadditivity (Appendix, second lemma):
/// (p1 + ... + pn)^l <= p1^l + ... + pn^l for 0 < l < 1 and nonnegative pi.
pub fn check_power_subadditivity(values: &[f64], l: f64) -> Result<bool> {
    if !(l > 0.0 && l < 1.0) {
        return Err(Error::Domain(format!(
            "check_power_subadditivity: l must lie in (0, 1), got {l}"
        )));
    }
    if values.iter().any(|&v| !v.is_finite() || v < 0.0) {
        return Err(Error::Domain(
            "check_power_subadditivity: entries must be finite and nonnegative".into(),
        ));
    }
    let sum: f64 = values.iter().sum();
    let lhs = sum.powf(l);
    let rhs: f64 = values.iter().map(|v| v.powf(l)).sum();
    Ok(lhs <= rhs + LEMMA_SLACK)
}

/// Central-difference gradient of a scalar field, O(h^2) accurate.
pub fn finite_difference_gradient<F>(f: F, x: &DVector<f64>, h: f64) -> Result<DVector<f64>>
where
    F: Fn(&DVector<f64>) -> f64,
{
    if !(h > 0.0) {
        return Err(Error::Domain(format!(
            "finite_difference_gradient: h must be positive, got {h}"
        )));
    }
    let mut grad = DVector::zeros(x.len());
    let mut xp = x.clone();
    for i in 0..x.len() {
        xp[i] = x[i] + h;
        let fp = f(&xp);
        xp[i] = x[i] - h;
        let fm = f(&xp);
        xp[i] = x[i];
        if !(fp.is_finite() && fm.is_finite()) {
            return Err(Error::numeric("finite_difference_gradient: non-finite evaluation"));
        }
        grad[i] = (fp - fm) / (2.0 * h);
    }
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn exp(v: f64) -> PowerExponent {
        PowerExponent::new(v).unwrap()
    }

    #[test]
    fn signed_pow_cube_root_of_negative() {
        assert_relative_eq!(signed_pow(-8.0, exp(1.0 / 3.0)).unwrap(), -2.0, epsilon = 1e-12);
    }

    #[test]
    fn signed_pow_zero() {
        assert_eq!(signed_pow(0.0, exp(0.5)).unwrap(), 0.0);
    }

    #[test]
    fn signed_pow_near_unit_exponent() {
        // exp(0.999 ln 2)
        assert_relative_eq!(
            signed_pow(2.0, exp(0.999)).unwrap(),
            1.998_614_185_980_905,
            epsilon = 1e-12
        );
    }

    #[test]
    fn signed_pow_rejects_non_finite() {
        assert!(signed_pow(f64::NAN, exp(0.5)).is_err());
        assert!(PowerExponent::new(f64::INFINITY).is_err());
        assert!(PowerExponent::new(0.0).is_err());
    }

    #[test]
    fn guarded_power_deriv_values() {
        assert_relative_eq!(guarded_power_deriv(1.0, 0.999, 1e-3), 1.0, epsilon = 1e-15);
        // (1e-3)^(-0.002) = exp(-0.002 ln 1e-3)
        assert_relative_eq!(
            guarded_power_deriv(0.0, 0.999, 1e-3),
            1.013_911_385_736_679_4,
            epsilon = 1e-12
        );
        // exp(-0.002 ln 0.5)
        assert_relative_eq!(
            guarded_power_deriv(0.5, 0.999, 1e-3),
            1.001_387_255_711_334_5,
            epsilon = 1e-12
        );
    }

    #[test]
    fn guarded_power_deriv_jump_at_threshold_is_small() {
        for &l in &[0.9, 0.95, 0.999] {
            let eps = 1e-3;
            let below = guarded_power_deriv(eps * (1.0 - 1e-12), l, eps);
            let above = guarded_power_deriv(eps * (1.0 + 1e-12), l, eps);
            assert!(((below - above) / above).abs() <= 1e-9);
        }
    }

    #[test]
    fn rk4_zero_and_constant_fields() {
        let x0 = DVector::from_vec(vec![3.0, -1.0]);
        let next = rk4_step(|_, _| DVector::zeros(2), &x0, 0.0, 0.01).unwrap();
        assert_eq!(next, x0);

        let x0 = DVector::from_vec(vec![0.0]);
        let next = rk4_step(|_, _| DVector::from_vec(vec![1.0]), &x0, 5.0, 0.001).unwrap();
        assert_relative_eq!(next[0], 0.001, epsilon = 1e-15);
    }

    #[test]
    fn rk4_exponential_field() {
        let x0 = DVector::from_vec(vec![1.0]);
        let next = rk4_step(|_, x| x.clone(), &x0, 0.0, 0.1).unwrap();
        assert!((next[0] - 0.1f64.exp()).abs() < 1e-7);
    }

    #[test]
    fn rk4_matches_exponential_over_lambda_range() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let lambda: f64 = rng.gen_range(-1.0..1.0);
            let dt: f64 = rng.gen_range(1e-4..0.1 / lambda.abs().max(1.0));
            if (lambda * dt).abs() > 0.1 {
                continue;
            }
            let x0 = DVector::from_vec(vec![1.0]);
            let next = rk4_step(|_, x| x * lambda, &x0, 0.0, dt).unwrap();
            // Local truncation error of one RK4 step is ~(lambda dt)^5 / 120.
            assert_relative_eq!(next[0], (lambda * dt).exp(), max_relative = 1e-6);
        }
    }

    #[test]
    fn young_inequality_trivial_cases() {
        assert!(check_young_inequality(0.0, 5.0, 1.0, 1.0, 1.0).unwrap());
        assert!(check_young_inequality(1.0, 1.0, 1.0, 1.0, 1.0).unwrap());
        assert!(check_young_inequality(1.0, 1.0, 0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn young_inequality_random_sweep() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for _ in 0..10_000 {
            let a = rng.gen_range(1e-3..3.0);
            let b = rng.gen_range(1e-3..3.0);
            let p = rng.gen_range(1e-3..3.0);
            let q1 = rng.gen_range(-10.0..10.0);
            let q2 = rng.gen_range(-10.0..10.0);
            assert!(
                check_young_inequality(q1, q2, a, b, p).unwrap(),
                "violated at q1={q1} q2={q2} a={a} b={b} p={p}"
            );
        }
    }

    #[test]
    fn subadditivity_trivial_cases() {
        assert!(check_power_subadditivity(&[2.5], 0.7).unwrap());
        assert!(check_power_subadditivity(&[1.0, 1.0], 0.5).unwrap());
        assert!(check_power_subadditivity(&[1.0], 1.0).is_err());
        assert!(check_power_subadditivity(&[-1.0], 0.5).is_err());
    }

    #[test]
    fn subadditivity_random_sweep() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(43);
        for _ in 0..10_000 {
            let len = rng.gen_range(1..=8);
            let values: Vec<f64> = (0..len).map(|_| rng.gen_range(0.0..10.0)).collect();
            let l = rng.gen_range(1e-3..1.0 - 1e-9);
            assert!(
                check_power_subadditivity(&values, l).unwrap(),
                "violated at values={values:?} l={l}"
            );
        }
    }

    #[test]
    fn fd_gradient_constant_and_quadratic() {
        let x = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let g = finite_difference_gradient(|_| 4.0, &x, 1e-5).unwrap();
        assert!(g.amax() < 1e-10);

        let g = finite_difference_gradient(|v| 0.5 * v.dot(v), &x, 1e-5).unwrap();
        assert!((g - &x).amax() < 1e-8);
    }

    proptest! {
        #[test]
        fn signed_pow_is_odd(x in -1e6f64..1e6, q in 1e-3f64..2.0) {
            let q = exp(q);
            let a = signed_pow(x, q).unwrap();
            let b = signed_pow(-x, q).unwrap();
            prop_assert_eq!(a, -b);
        }

        #[test]
        fn signed_pow_identity_exponent(x in -1e6f64..1e6) {
            let y = signed_pow(x, exp(1.0)).unwrap();
            prop_assert!((y - x).abs() <= f64::EPSILON * x.abs());
        }

        #[test]
        fn signed_pow_monotone(x in -100.0f64..100.0, d in 1e-6f64..10.0, q in 1e-3f64..2.0) {
            let q = exp(q);
            prop_assert!(signed_pow(x + d, q).unwrap() >= signed_pow(x, q).unwrap());
        }
    }
}
