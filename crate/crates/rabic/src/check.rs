//! Fast self-contained invariant suite behind the `check` CLI command.
//! Each item re-verifies one structural property with fixed seeds, so the
//! whole run is deterministic and finishes in a few seconds.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dynamics::{BaseParams, LinkParams, RobotModel, Wrench};
use crate::error::Result;
use crate::estimator::{EstimatorConfig, JointEstimator};
use crate::numerics::{check_power_subadditivity, check_young_inequality, rk4_step, signed_pow_raw};
use crate::oracle;
use crate::synthetic::{certificate_fraction, run_synthetic, SyntheticParams};

/// One verdict line of the report.
#[derive(Debug, Clone)]
pub struct CheckItem {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Full report of the invariant suite.
#[derive(Debug, Clone)]
pub struct CheckReport {
    pub items: Vec<CheckItem>,
}

impl CheckReport {
    pub fn all_passed(&self) -> bool {
        self.items.iter().all(|i| i.passed)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for i in &self.items {
            out.push_str(&format!(
                "[{}] {} — {}\n",
                if i.passed { "PASS" } else { "FAIL" },
                i.name,
                i.detail
            ));
        }
        out.push_str(&format!(
            "{}: {} of {} checks passed\n",
            if self.all_passed() { "OK" } else { "FAILED" },
            self.items.iter().filter(|i| i.passed).count(),
            self.items.len()
        ));
        out
    }
}

fn item(name: &'static str, passed: bool, detail: String) -> CheckItem {
    CheckItem { name, passed, detail }
}

fn arm3(base: bool) -> RobotModel {
    let links = vec![
        LinkParams { mass: 2.0, length: 0.6, com_offset: 0.3, inertia: 0.06, viscous_friction: 0.0 },
        LinkParams { mass: 1.5, length: 0.5, com_offset: 0.25, inertia: 0.03, viscous_friction: 0.0 },
        LinkParams { mass: 0.8, length: 0.4, com_offset: 0.2, inertia: 0.01, viscous_friction: 0.0 },
    ];
    let b = base.then(|| BaseParams {
        wheel_radius: 0.1,
        half_track: 0.25,
        chassis_mass: 12.0,
        chassis_inertia: 0.8,
    });
    RobotModel::new(b, links, 9.81, !base).unwrap()
}

fn check_lemma_young(flip: bool) -> Result<CheckItem> {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut violations = 0usize;
    const SAMPLES: usize = 10_000;
    for _ in 0..SAMPLES {
        let a = rng.gen_range(1e-3..3.0);
        let b = rng.gen_range(1e-3..3.0);
        let p = rng.gen_range(1e-3..3.0);
        let q1: f64 = rng.gen_range(-10.0..10.0);
        let q2: f64 = rng.gen_range(-10.0..10.0);
        let holds = check_young_inequality(q1, q2, a, b, p)?;
        // Self-test mode demands the reversed inequality, which must fail.
        let expected = !flip;
        if holds != expected {
            violations += 1;
        }
    }
    Ok(item(
        "young-type bound sweep",
        violations == 0,
        format!("{violations} violations in {SAMPLES} samples"),
    ))
}

fn check_lemma_subadditivity(flip: bool) -> Result<CheckItem> {
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    let mut violations = 0usize;
    const SAMPLES: usize = 10_000;
    for _ in 0..SAMPLES {
        let len = rng.gen_range(1..=8);
        let values: Vec<f64> = (0..len).map(|_| rng.gen_range(0.0..10.0)).collect();
        let l = rng.gen_range(1e-3..1.0 - 1e-9);
        let holds = check_power_subadditivity(&values, l)?;
        if holds != !flip {
            violations += 1;
        }
    }
    Ok(item(
        "power subadditivity sweep",
        violations == 0,
        format!("{violations} violations in {SAMPLES} samples"),
    ))
}

fn check_signed_pow() -> CheckItem {
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let mut worst: f64 = 0.0;
    for _ in 0..5_000 {
        let x: f64 = rng.gen_range(-100.0..100.0);
        let q: f64 = rng.gen_range(1e-3..2.0);
        let odd = (signed_pow_raw(x, q) + signed_pow_raw(-x, q)).abs();
        worst = worst.max(odd);
        let d: f64 = rng.gen_range(0.0..5.0);
        if signed_pow_raw(x + d, q) < signed_pow_raw(x, q) {
            worst = f64::INFINITY;
        }
    }
    item(
        "signed power oddness/monotonicity",
        worst == 0.0,
        format!("worst oddness defect {worst:e}"),
    )
}

fn check_rk4_order() -> CheckItem {
    // Error against the exact exponential should shrink ~16x when dt halves.
    let run = |dt: f64| -> f64 {
        let steps = (1.0 / dt).round() as usize;
        let mut x = DVector::from_vec(vec![1.0]);
        for _ in 0..steps {
            x = rk4_step(|_, x| x * -2.0, &x, 0.0, dt).unwrap();
        }
        (x[0] - (-2.0f64).exp()).abs()
    };
    let ratio = run(0.02) / run(0.01);
    item(
        "rk4 4th-order convergence",
        ratio > 10.0 && ratio < 24.0,
        format!("dt-halving error ratio {ratio:.2}"),
    )
}

fn check_dynamics_oracle() -> CheckItem {
    let mut worst: f64 = 0.0;
    for base in [false, true] {
        let model = arm3(base);
        let n = model.n();
        let mut rng = ChaCha8Rng::seed_from_u64(45);
        for _ in 0..10 {
            let theta = DVector::from_fn(n, |_, _| rng.gen_range(-2.5..2.5));
            let theta_dot = DVector::from_fn(n, |_, _| rng.gen_range(-2.0..2.0));
            let terms = match model.compute_terms(&theta, &theta_dot) {
                Ok(t) => t,
                Err(_) => return item("dynamics dual-route agreement", false, "compute_terms failed".into()),
            };
            let d_fd = oracle::inertia_fd(&model, &theta);
            let c_fd = oracle::coriolis_fd(&model, &theta, &theta_dot);
            worst = worst.max((&terms.d - &d_fd).amax() / d_fd.amax().max(1.0));
            worst = worst.max((&terms.c - &c_fd).amax() / c_fd.amax().max(1.0));
        }
    }
    item(
        "dynamics dual-route agreement",
        worst < 1e-6,
        format!("worst relative deviation {worst:.2e}"),
    )
}

fn check_structural_properties() -> CheckItem {
    // D symmetric positive definite; theta_dot^T (D_dot - 2C) theta_dot = 0.
    let mut worst: f64 = 0.0;
    for base in [false, true] {
        let model = arm3(base);
        let n = model.n();
        let mut rng = ChaCha8Rng::seed_from_u64(46);
        for _ in 0..20 {
            let theta = DVector::from_fn(n, |_, _| rng.gen_range(-3.0..3.0));
            let theta_dot = DVector::from_fn(n, |_, _| rng.gen_range(-2.0..2.0));
            let terms = model.compute_terms(&theta, &theta_dot).unwrap();
            if (&terms.d - terms.d.transpose()).amax() > 1e-12
                || terms.d.clone().cholesky().is_none()
            {
                return item("inertia SPD + passivity", false, "D not symmetric positive definite".into());
            }
            // D_dot along the motion by central differences.
            let h = 1e-6;
            let tp = &theta + &theta_dot * h;
            let tm = &theta - &theta_dot * h;
            let dp = model.compute_terms(&tp, &theta_dot).unwrap().d;
            let dm = model.compute_terms(&tm, &theta_dot).unwrap().d;
            let d_dot = (dp - dm) / (2.0 * h);
            let skew = &d_dot - (&terms.c * 2.0);
            let q = theta_dot.dot(&(&skew * &theta_dot)).abs();
            worst = worst.max(q);
        }
    }
    item(
        "inertia SPD + passivity",
        worst < 1e-4,
        format!("worst |qd^T (D_dot - 2C) qd| = {worst:.2e}"),
    )
}

fn check_energy_drift() -> CheckItem {
    // Unforced frictionless pendulum chain under in-plane gravity, 1 s at 1 ms.
    let model = arm3(false);
    let n = model.n();
    let mut x = DVector::zeros(2 * n);
    x[0] = 0.9;
    x[1] = -0.4;
    x[2] = 0.3;
    let theta0 = x.rows(0, n).clone_owned();
    let e0 = model.total_energy(&theta0, &x.rows(n, n).clone_owned());
    let zero = DVector::zeros(n);
    for _ in 0..1000 {
        let next = rk4_step(
            |_, s| {
                let th = s.rows(0, n).clone_owned();
                let thd = s.rows(n, n).clone_owned();
                let acc = model
                    .forward_dynamics(&th, &thd, &zero, &zero, &Wrench::zero())
                    .unwrap_or_else(|_| DVector::zeros(n));
                let mut dx = DVector::zeros(2 * n);
                dx.rows_mut(0, n).copy_from(&thd);
                dx.rows_mut(n, n).copy_from(&acc);
                dx
            },
            &x,
            0.0,
            0.001,
        );
        x = match next {
            Ok(v) => v,
            Err(_) => return item("energy conservation", false, "integration failed".into()),
        };
    }
    let e1 = model.total_energy(&x.rows(0, n).clone_owned(), &x.rows(n, n).clone_owned());
    let drift = (e1 - e0).abs();
    item(
        "energy conservation",
        drift < 1e-5,
        format!("|dE| = {drift:.2e} over 1 s"),
    )
}

fn check_adaptation_properties() -> CheckItem {
    let cfg = EstimatorConfig::new(
        1,
        1,
        DVector::from_element(1, 50.0),
        DVector::from_element(1, 0.005),
        DVector::from_element(1, 0.1),
        DVector::from_element(1, 0.005),
    )
    .unwrap();
    let mut est = JointEstimator::new(&cfg, 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(47);
    for _ in 0..10_000 {
        let s: f64 = rng.gen_range(-3.0..3.0);
        est.update_psi(s, 0.1, 0.005, 0.001);
        if est.psi_hat < 0.0 {
            return item("adaptation nonnegativity + leak", false, "psi went negative".into());
        }
    }
    // Pure leak must decay geometrically.
    let mut est = JointEstimator::new(&cfg, 0.0);
    est.psi_hat = 1.0;
    for _ in 0..1000 {
        est.update_psi(0.0, 0.1, 0.005, 0.001);
    }
    let expected = (1.0f64 - 0.005 * 0.001).powi(1000);
    let defect = (est.psi_hat - expected).abs();
    item(
        "adaptation nonnegativity + leak",
        defect < 1e-9,
        format!("leak decay defect {defect:.2e}"),
    )
}

fn check_synthetic_descent() -> CheckItem {
    let mut p = SyntheticParams::default_case();
    p.duration = 3.0;
    p.psi_true = 0.2;
    match run_synthetic(&p).and_then(|tr| certificate_fraction(&tr, 1e-3)) {
        Ok(frac) => item(
            "finite-time descent certificate",
            frac >= 0.999,
            format!("certificate held at {:.3}% of samples", 100.0 * frac),
        ),
        Err(e) => item("finite-time descent certificate", false, format!("{e}")),
    }
}

/// Run the whole suite. With `self_test_flip` the two lemma sweeps assert
/// the reversed inequalities, which must make the report fail — proving the
/// checker can actually detect violations.
pub fn run_check(self_test_flip: bool) -> Result<CheckReport> {
    let mut items = Vec::new();
    items.push(check_lemma_young(self_test_flip)?);
    items.push(check_lemma_subadditivity(self_test_flip)?);
    items.push(check_signed_pow());
    items.push(check_rk4_order());
    items.push(check_dynamics_oracle());
    items.push(check_structural_properties());
    items.push(check_energy_drift());
    items.push(check_adaptation_properties());
    items.push(check_synthetic_descent());
    Ok(CheckReport { items })
}
