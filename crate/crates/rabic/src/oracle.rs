//! Independent finite-difference oracles for the rigid-body dynamics.
//!
//! Everything here is derived from first-principles body velocities and
//! energies only; none of it reuses the closed-form D/C/G construction in
//! [`crate::dynamics`]. The `check` command and the verification suite use
//! these as the second route of a dual-route comparison.

use nalgebra::{DMatrix, DVector};

use crate::dynamics::{RobotModel, Wrench};
use crate::error::Result;

/// Kinetic energy evaluated body by body from explicit velocity formulas.
pub fn kinetic_energy_direct(model: &RobotModel, theta: &DVector<f64>, theta_dot: &DVector<f64>) -> f64 {
    let n_b = model.n_base();
    let links = model.links();

    let (phi, v_base, omega_base) = if let Some(b) = model.base() {
        let phi = b.wheel_radius / (2.0 * b.half_track) * (theta[0] - theta[1]);
        let v = b.wheel_radius / 2.0 * (theta_dot[0] + theta_dot[1]);
        let om = b.wheel_radius / (2.0 * b.half_track) * (theta_dot[0] - theta_dot[1]);
        (phi, v, om)
    } else {
        (0.0, 0.0, 0.0)
    };

    let mut t = 0.0;
    if let Some(b) = model.base() {
        t += 0.5 * b.chassis_mass * v_base * v_base + 0.5 * b.chassis_inertia * omega_base * omega_base;
    }

    // Absolute link angles and rates.
    let mut alpha = phi;
    let mut alpha_dot = omega_base;
    let mut alphas = Vec::with_capacity(links.len());
    let mut alpha_dots = Vec::with_capacity(links.len());
    for j in 0..links.len() {
        alpha += theta[n_b + j];
        alpha_dot += theta_dot[n_b + j];
        alphas.push(alpha);
        alpha_dots.push(alpha_dot);
    }

    for k in 0..links.len() {
        let mut vx = v_base * phi.cos();
        let mut vy = v_base * phi.sin();
        for j in 0..=k {
            let coef = if j < k { links[j].length } else { links[k].com_offset };
            vx += coef * alpha_dots[j] * (-alphas[j].sin());
            vy += coef * alpha_dots[j] * alphas[j].cos();
        }
        t += 0.5 * links[k].mass * (vx * vx + vy * vy)
            + 0.5 * links[k].inertia * alpha_dots[k] * alpha_dots[k];
    }
    t
}

/// Potential energy from link center-of-mass heights.
pub fn potential_energy_direct(model: &RobotModel, theta: &DVector<f64>) -> f64 {
    if !model.planar_gravity() {
        return 0.0;
    }
    let n_b = model.n_base();
    let links = model.links();
    let mut alpha = 0.0;
    let mut alphas = Vec::with_capacity(links.len());
    for j in 0..links.len() {
        alpha += theta[n_b + j];
        alphas.push(alpha);
    }
    let mut v = 0.0;
    for k in 0..links.len() {
        let mut y = 0.0;
        for j in 0..=k {
            let coef = if j < k { links[j].length } else { links[k].com_offset };
            y += coef * alphas[j].sin();
        }
        v += links[k].mass * model.gravity() * y;
    }
    v
}

/// Inertia matrix from second differences of the kinetic energy in the
/// rates. T is exactly quadratic in theta_dot, so the central second
/// difference is exact up to roundoff.
pub fn inertia_fd(model: &RobotModel, theta: &DVector<f64>) -> DMatrix<f64> {
    let n = model.n();
    let h = 1e-2;
    let mut d = DMatrix::zeros(n, n);
    let mut td = DVector::zeros(n);
    for i in 0..n {
        for j in i..n {
            let mut stencil = 0.0;
            for (si, sj) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                td.fill(0.0);
                td[i] += si * h;
                td[j] += sj * h;
                let sign = si * sj;
                stencil += sign * kinetic_energy_direct(model, theta, &td);
            }
            let val = stencil / (4.0 * h * h);
            d[(i, j)] = val;
            d[(j, i)] = val;
        }
    }
    d
}

/// dD/dtheta_m by central differences of the FD inertia matrix.
pub fn inertia_partials_fd(model: &RobotModel, theta: &DVector<f64>, h: f64) -> Vec<DMatrix<f64>> {
    let n = model.n();
    let mut out = Vec::with_capacity(n);
    let mut th = theta.clone();
    for m in 0..n {
        th[m] = theta[m] + h;
        let dp = inertia_fd(model, &th);
        th[m] = theta[m] - h;
        let dm = inertia_fd(model, &th);
        th[m] = theta[m];
        out.push((dp - dm) / (2.0 * h));
    }
    out
}

/// Coriolis matrix from the Christoffel symbols of the FD inertia matrix.
pub fn coriolis_fd(model: &RobotModel, theta: &DVector<f64>, theta_dot: &DVector<f64>) -> DMatrix<f64> {
    let n = model.n();
    let dd = inertia_partials_fd(model, theta, 3e-5);
    let mut c = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut cij = 0.0;
            for k in 0..n {
                cij += 0.5 * (dd[k][(i, j)] + dd[j][(i, k)] - dd[i][(j, k)]) * theta_dot[k];
            }
            c[(i, j)] = cij;
        }
    }
    c
}

/// Gravity vector as the finite-difference gradient of the potential.
pub fn gravity_fd(model: &RobotModel, theta: &DVector<f64>) -> DVector<f64> {
    let n = model.n();
    let h = 1e-6;
    let mut g = DVector::zeros(n);
    let mut th = theta.clone();
    for i in 0..n {
        th[i] = theta[i] + h;
        let vp = potential_energy_direct(model, &th);
        th[i] = theta[i] - h;
        let vm = potential_energy_direct(model, &th);
        th[i] = theta[i];
        g[i] = (vp - vm) / (2.0 * h);
    }
    g
}

/// End-effector planar Jacobian (rows vx, vy, yaw rate) from explicit
/// velocity formulas, used to map wrenches independently.
pub fn ee_jacobian_direct(model: &RobotModel, theta: &DVector<f64>) -> DMatrix<f64> {
    let n = model.n();
    let mut j = DMatrix::zeros(3, n);
    let mut e = DVector::zeros(n);
    // Columns from directional rates: differentiate pose numerically is not
    // possible for the nonholonomic base, so use unit-rate velocities.
    for col in 0..n {
        e.fill(0.0);
        e[col] = 1.0;
        let (vx, vy, wz) = ee_velocity_direct(model, theta, &e);
        j[(0, col)] = vx;
        j[(1, col)] = vy;
        j[(2, col)] = wz;
    }
    j
}

fn ee_velocity_direct(model: &RobotModel, theta: &DVector<f64>, theta_dot: &DVector<f64>) -> (f64, f64, f64) {
    let n_b = model.n_base();
    let links = model.links();
    let (phi, v_base, omega_base) = if let Some(b) = model.base() {
        let phi = b.wheel_radius / (2.0 * b.half_track) * (theta[0] - theta[1]);
        let v = b.wheel_radius / 2.0 * (theta_dot[0] + theta_dot[1]);
        let om = b.wheel_radius / (2.0 * b.half_track) * (theta_dot[0] - theta_dot[1]);
        (phi, v, om)
    } else {
        (0.0, 0.0, 0.0)
    };
    let mut vx = v_base * phi.cos();
    let mut vy = v_base * phi.sin();
    let mut alpha = phi;
    let mut alpha_dot = omega_base;
    for j in 0..links.len() {
        alpha += theta[n_b + j];
        alpha_dot += theta_dot[n_b + j];
        vx += links[j].length * alpha_dot * (-alpha.sin());
        vy += links[j].length * alpha_dot * alpha.cos();
    }
    (vx, vy, alpha_dot)
}

/// Forward dynamics through the FD route only.
pub fn forward_dynamics_fd(
    model: &RobotModel,
    theta: &DVector<f64>,
    theta_dot: &DVector<f64>,
    tau_r: &DVector<f64>,
    tau_u: &DVector<f64>,
    f_e: &Wrench,
) -> Result<DVector<f64>> {
    let d = inertia_fd(model, theta);
    let c = coriolis_fd(model, theta, theta_dot);
    let g = gravity_fd(model, theta);
    let j = ee_jacobian_direct(model, theta);
    let f = DVector::from_vec(vec![f_e.0[0], f_e.0[1], f_e.0[5]]);
    let rhs = tau_r + tau_u - c * theta_dot - g - j.transpose() * f;
    Ok(d
        .cholesky()
        .ok_or_else(|| crate::error::Error::numeric("oracle inertia not positive definite"))?
        .solve(&rhs))
}
