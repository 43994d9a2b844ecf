//! Euler-Lagrange model of a planar n-link manipulator, optionally mounted
//! on a differential-drive base (pure rolling, reduced to the two wheel
//! coordinates). Produces the inertia matrix D, Coriolis matrix C (Christoffel
//! construction), gravity vector G, and the coupled 6xn Jacobian J_mm, plus
//! forward dynamics and energy bookkeeping.
//!
//! Generalized coordinates are `[theta_R, theta_L, theta_1..theta_nm]` when a
//! base is present, `[theta_1..theta_nm]` otherwise. All link angles are
//! relative; the absolute angle of link j is `phi + theta_1 + ... + theta_j`
//! where `phi = r (theta_R - theta_L) / (2W)` is the base heading.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Parameters of one arm link.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkParams {
    /// Link mass (kg).
    pub mass: f64,
    /// Link length, joint to joint (m).
    pub length: f64,
    /// Distance from the joint to the center of mass (m), in (0, length].
    pub com_offset: f64,
    /// Rotational inertia about the center of mass (kg m^2).
    pub inertia: f64,
    /// Viscous joint friction (N m s/rad); folded into the lumped
    /// uncertainty torque by the simulation, not into D/C/G.
    pub viscous_friction: f64,
}

/// Parameters of the differential-drive base.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseParams {
    /// Wheel radius (m).
    pub wheel_radius: f64,
    /// Half the distance between the wheels (m).
    pub half_track: f64,
    /// Chassis mass (kg).
    pub chassis_mass: f64,
    /// Chassis yaw inertia about its center (kg m^2).
    pub chassis_inertia: f64,
}

/// Immutable kinematic/dynamic description of the robot.
#[derive(Debug, Clone)]
pub struct RobotModel {
    base: Option<BaseParams>,
    links: Vec<LinkParams>,
    gravity: f64,
    planar_gravity: bool,
    n: usize,
    n_b: usize,
    /// d(phi)/d(theta); zero vector for a fixed base.
    w_phi: DVector<f64>,
    /// Forward-speed row: v_base = u_b . theta_dot along the heading.
    u_b: DVector<f64>,
    /// w[j] = d(alpha_j)/d(theta) for arm link j (absolute link angle).
    w: Vec<DVector<f64>>,
}

/// D, C, G, J_mm evaluated at one state.
#[derive(Debug, Clone)]
pub struct DynamicsTerms {
    pub d: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub g: DVector<f64>,
    /// 6xn coupled Jacobian; rows are [vx, vy, vz, wx, wy, wz], with the
    /// out-of-plane rows zero for this planar model.
    pub j_mm: DMatrix<f64>,
}

/// External wrench at the end-effector: [fx, fy, fz, tx, ty, tz].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wrench(pub [f64; 6]);

impl Wrench {
    pub fn zero() -> Self {
        Wrench([0.0; 6])
    }

    pub fn planar(fx: f64, fy: f64, tz: f64) -> Self {
        Wrench([fx, fy, 0.0, 0.0, 0.0, tz])
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0.0)
    }

    pub fn force_norm(&self) -> f64 {
        (self.0[0] * self.0[0] + self.0[1] * self.0[1] + self.0[2] * self.0[2]).sqrt()
    }

    pub fn as_vector(&self) -> DVector<f64> {
        DVector::from_row_slice(&self.0)
    }
}

/// Planar end-effector pose.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EePose {
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
}

/// Planar end-effector velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EeVelocity {
    pub vx: f64,
    pub vy: f64,
    pub yaw_rate: f64,
}

impl RobotModel {
    pub fn new(
        base: Option<BaseParams>,
        links: Vec<LinkParams>,
        gravity: f64,
        planar_gravity: bool,
    ) -> Result<Self> {
        if links.is_empty() {
            return Err(Error::Config("robot needs at least one link".into()));
        }
        for (i, l) in links.iter().enumerate() {
            if !(l.mass > 0.0) || !(l.length > 0.0) || !(l.inertia > 0.0) {
                return Err(Error::Config(format!(
                    "link {}: mass, length, inertia must be positive",
                    i + 1
                )));
            }
            if !(l.com_offset > 0.0 && l.com_offset <= l.length) {
                return Err(Error::Config(format!(
                    "link {}: com offset must lie in (0, length]",
                    i + 1
                )));
            }
            if l.viscous_friction < 0.0 {
                return Err(Error::Config(format!(
                    "link {}: viscous friction must be nonnegative",
                    i + 1
                )));
            }
        }
        if let Some(b) = &base {
            if !(b.wheel_radius > 0.0 && b.half_track > 0.0) {
                return Err(Error::Config("base: wheel radius and half-track must be positive".into()));
            }
            if !(b.chassis_mass > 0.0 && b.chassis_inertia > 0.0) {
                return Err(Error::Config("base: chassis mass and inertia must be positive".into()));
            }
            if planar_gravity {
                // The wheeled base moves in the horizontal plane; in-plane
                // gravity would make the potential depend on the nonholonomic
                // base position, which is not a function of theta.
                return Err(Error::Config(
                    "planar gravity is not supported with a mobile base".into(),
                ));
            }
        }
        if !(gravity >= 0.0) {
            return Err(Error::Config("gravity magnitude must be nonnegative".into()));
        }

        let n_b = if base.is_some() { 2 } else { 0 };
        let n_m = links.len();
        let n = n_b + n_m;

        let mut w_phi = DVector::zeros(n);
        let mut u_b = DVector::zeros(n);
        if let Some(b) = &base {
            let k = b.wheel_radius / (2.0 * b.half_track);
            w_phi[0] = k;
            w_phi[1] = -k;
            u_b[0] = b.wheel_radius / 2.0;
            u_b[1] = b.wheel_radius / 2.0;
        }
        let mut w = Vec::with_capacity(n_m);
        for j in 0..n_m {
            let mut wj = w_phi.clone();
            for i in 0..=j {
                wj[n_b + i] = 1.0;
            }
            w.push(wj);
        }

        Ok(Self {
            base,
            links,
            gravity,
            planar_gravity,
            n,
            n_b,
            w_phi,
            u_b,
            w,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n_base(&self) -> usize {
        self.n_b
    }

    pub fn n_links(&self) -> usize {
        self.links.len()
    }

    pub fn links(&self) -> &[LinkParams] {
        &self.links
    }

    pub fn base(&self) -> Option<&BaseParams> {
        self.base.as_ref()
    }

    pub fn gravity(&self) -> f64 {
        self.gravity
    }

    pub fn planar_gravity(&self) -> bool {
        self.planar_gravity
    }

    /// Per-joint viscous friction as a vector over all n coordinates
    /// (zero on the wheel coordinates).
    pub fn viscous_friction(&self) -> DVector<f64> {
        let mut b = DVector::zeros(self.n);
        for (j, l) in self.links.iter().enumerate() {
            b[self.n_b + j] = l.viscous_friction;
        }
        b
    }

    fn check_dim(&self, v: &DVector<f64>, what: &'static str) -> Result<()> {
        if v.len() != self.n {
            return Err(Error::Dimension {
                what,
                expected: self.n,
                got: v.len(),
            });
        }
        Ok(())
    }

    /// Base heading angle phi as a function of the wheel coordinates.
    fn heading(&self, theta: &DVector<f64>) -> f64 {
        if self.n_b == 2 {
            self.w_phi[0] * theta[0] + self.w_phi[1] * theta[1]
        } else {
            0.0
        }
    }

    /// Absolute link angles alpha_j = phi + theta_1 + ... + theta_j.
    fn link_angles(&self, theta: &DVector<f64>) -> Vec<f64> {
        let phi = self.heading(theta);
        let mut alphas = Vec::with_capacity(self.links.len());
        let mut acc = phi;
        for j in 0..self.links.len() {
            acc += theta[self.n_b + j];
            alphas.push(acc);
        }
        alphas
    }

    /// Center-of-mass coefficient of link k with respect to angle alpha_j:
    /// full length for j < k, com offset for j = k.
    fn com_coef(&self, k: usize, j: usize) -> f64 {
        if j < k {
            self.links[j].length
        } else {
            self.links[k].com_offset
        }
    }

    /// 2xn linear-velocity Jacobian of the center of mass of link k,
    /// and its partial derivatives with respect to each coordinate.
    fn link_jacobian(
        &self,
        k: usize,
        alphas: &[f64],
        phi: f64,
        with_partials: bool,
    ) -> (DMatrix<f64>, Vec<DMatrix<f64>>) {
        let n = self.n;
        let mut jv = DMatrix::zeros(2, n);
        let mut djv = if with_partials {
            vec![DMatrix::zeros(2, n); n]
        } else {
            Vec::new()
        };

        if self.n_b == 2 {
            // Base translation term e(phi) u_b^T.
            let (s, c) = phi.sin_cos();
            for col in 0..n {
                jv[(0, col)] += c * self.u_b[col];
                jv[(1, col)] += s * self.u_b[col];
            }
            if with_partials {
                for m in 0..n {
                    let wm = self.w_phi[m];
                    if wm != 0.0 {
                        for col in 0..n {
                            djv[m][(0, col)] += -s * wm * self.u_b[col];
                            djv[m][(1, col)] += c * wm * self.u_b[col];
                        }
                    }
                }
            }
        }

        for j in 0..=k {
            let coef = self.com_coef(k, j);
            let (s, c) = alphas[j].sin_cos();
            let wj = &self.w[j];
            // n(alpha_j) = (-sin, cos); partial of n is -e(alpha_j).
            for col in 0..n {
                if wj[col] != 0.0 {
                    jv[(0, col)] += coef * (-s) * wj[col];
                    jv[(1, col)] += coef * c * wj[col];
                }
            }
            if with_partials {
                for m in 0..n {
                    let wm = wj[m];
                    if wm != 0.0 {
                        for col in 0..n {
                            if wj[col] != 0.0 {
                                djv[m][(0, col)] += coef * (-c) * wm * wj[col];
                                djv[m][(1, col)] += coef * (-s) * wm * wj[col];
                            }
                        }
                    }
                }
            }
        }
        (jv, djv)
    }

    /// Inertia matrix and its partial derivatives dD/dtheta_m.
    fn inertia_and_partials(
        &self,
        theta: &DVector<f64>,
        with_partials: bool,
    ) -> (DMatrix<f64>, Vec<DMatrix<f64>>) {
        let n = self.n;
        let phi = self.heading(theta);
        let alphas = self.link_angles(theta);
        let mut d = DMatrix::zeros(n, n);
        let mut dd = if with_partials {
            vec![DMatrix::zeros(n, n); n]
        } else {
            Vec::new()
        };

        if let Some(b) = &self.base {
            // Chassis: Jv = e(phi) u_b^T, so Jv^T Jv = u_b u_b^T (unit e).
            for i in 0..n {
                for j in 0..n {
                    d[(i, j)] += b.chassis_mass * self.u_b[i] * self.u_b[j]
                        + b.chassis_inertia * self.w_phi[i] * self.w_phi[j];
                }
            }
            // Rotation-invariant, so no contribution to dD.
        }

        for k in 0..self.links.len() {
            let (jv, djv) = self.link_jacobian(k, &alphas, phi, with_partials);
            let m = self.links[k].mass;
            let inertia = self.links[k].inertia;
            let wk = &self.w[k];

            d += (jv.transpose() * &jv) * m;
            for i in 0..n {
                for j in 0..n {
                    d[(i, j)] += inertia * wk[i] * wk[j];
                }
            }
            if with_partials {
                for mm in 0..n {
                    let t = djv[mm].transpose() * &jv;
                    dd[mm] += (&t + t.transpose()) * m;
                }
            }
        }
        // Symmetrize exactly against roundoff asymmetry from the products.
        let d = (&d + d.transpose()) * 0.5;
        (d, dd)
    }

    /// Evaluate D, C (Christoffel symbols), G, and J_mm at a state.
    pub fn compute_terms(
        &self,
        theta: &DVector<f64>,
        theta_dot: &DVector<f64>,
    ) -> Result<DynamicsTerms> {
        self.check_dim(theta, "compute_terms theta")?;
        self.check_dim(theta_dot, "compute_terms theta_dot")?;
        let n = self.n;
        let (d, dd) = self.inertia_and_partials(theta, true);

        let mut c = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let mut cij = 0.0;
                for k in 0..n {
                    cij += 0.5
                        * (dd[k][(i, j)] + dd[j][(i, k)] - dd[i][(j, k)])
                        * theta_dot[k];
                }
                c[(i, j)] = cij;
            }
        }

        let g = self.gravity_vector(theta);
        let j_mm = self.coupled_jacobian(theta);

        if d.iter().any(|v| !v.is_finite()) || c.iter().any(|v| !v.is_finite()) {
            return Err(Error::numeric("compute_terms produced non-finite entries"));
        }
        Ok(DynamicsTerms { d, c, g, j_mm })
    }

    /// Gravity vector G = dV/dtheta (zero unless planar gravity is enabled).
    pub fn gravity_vector(&self, theta: &DVector<f64>) -> DVector<f64> {
        let n = self.n;
        let mut g = DVector::zeros(n);
        if !self.planar_gravity {
            return g;
        }
        let alphas = self.link_angles(theta);
        for k in 0..self.links.len() {
            let m = self.links[k].mass;
            for j in 0..=k {
                let coef = self.com_coef(k, j);
                let ca = alphas[j].cos();
                let wj = &self.w[j];
                for i in 0..n {
                    g[i] += self.gravity * m * coef * ca * wj[i];
                }
            }
        }
        g
    }

    /// Coupled 6xn Jacobian J_mm = [J_b J_m] mapping joint rates to the
    /// end-effector twist. Out-of-plane rows are zero.
    pub fn coupled_jacobian(&self, theta: &DVector<f64>) -> DMatrix<f64> {
        let n = self.n;
        let phi = self.heading(theta);
        let alphas = self.link_angles(theta);
        let mut j = DMatrix::zeros(6, n);

        if self.n_b == 2 {
            let (s, c) = phi.sin_cos();
            for col in 0..n {
                j[(0, col)] += c * self.u_b[col];
                j[(1, col)] += s * self.u_b[col];
            }
        }
        for (jj, alpha) in alphas.iter().enumerate() {
            let coef = self.links[jj].length;
            let (s, c) = alpha.sin_cos();
            let wj = &self.w[jj];
            for col in 0..n {
                if wj[col] != 0.0 {
                    j[(0, col)] += coef * (-s) * wj[col];
                    j[(1, col)] += coef * c * wj[col];
                }
            }
        }
        let w_ee = &self.w[self.links.len() - 1];
        for col in 0..n {
            j[(5, col)] = w_ee[col];
        }
        j
    }

    /// Joint torques produced by an external wrench: J_mm^T f_e.
    pub fn wrench_torque(&self, theta: &DVector<f64>, f_e: &Wrench) -> DVector<f64> {
        if f_e.is_zero() {
            return DVector::zeros(self.n);
        }
        self.coupled_jacobian(theta).transpose() * f_e.as_vector()
    }

    /// Joint accelerations from D(theta) theta_dd = tau_r + tau_u - C theta_d - G - J^T f_e.
    pub fn forward_dynamics(
        &self,
        theta: &DVector<f64>,
        theta_dot: &DVector<f64>,
        tau_r: &DVector<f64>,
        tau_u: &DVector<f64>,
        f_e: &Wrench,
    ) -> Result<DVector<f64>> {
        self.check_dim(tau_r, "forward_dynamics tau_r")?;
        self.check_dim(tau_u, "forward_dynamics tau_u")?;
        let terms = self.compute_terms(theta, theta_dot)?;
        let rhs = tau_r + tau_u
            - &terms.c * theta_dot
            - &terms.g
            - terms.j_mm.transpose() * f_e.as_vector();
        solve_spd(&terms.d, &rhs)
    }

    /// World-frame end-effector pose and velocity. `base_xy` is the
    /// integrated base position (pass (0, 0) for a fixed base).
    pub fn end_effector_state(
        &self,
        theta: &DVector<f64>,
        theta_dot: &DVector<f64>,
        base_xy: (f64, f64),
    ) -> Result<(EePose, EeVelocity)> {
        self.check_dim(theta, "end_effector_state theta")?;
        self.check_dim(theta_dot, "end_effector_state theta_dot")?;
        let alphas = self.link_angles(theta);
        let mut x = base_xy.0;
        let mut y = base_xy.1;
        for (j, alpha) in alphas.iter().enumerate() {
            x += self.links[j].length * alpha.cos();
            y += self.links[j].length * alpha.sin();
        }
        let j_mm = self.coupled_jacobian(theta);
        let twist = &j_mm * theta_dot;
        Ok((
            EePose {
                x,
                y,
                yaw: alphas[self.links.len() - 1],
            },
            EeVelocity {
                vx: twist[0],
                vy: twist[1],
                yaw_rate: twist[5],
            },
        ))
    }

    /// Kinetic energy 0.5 theta_dot^T D theta_dot.
    pub fn kinetic_energy(&self, theta: &DVector<f64>, theta_dot: &DVector<f64>) -> f64 {
        let (d, _) = self.inertia_and_partials(theta, false);
        0.5 * theta_dot.dot(&(&d * theta_dot))
    }

    /// Gravitational potential energy (zero unless planar gravity).
    pub fn potential_energy(&self, theta: &DVector<f64>) -> f64 {
        if !self.planar_gravity {
            return 0.0;
        }
        let alphas = self.link_angles(theta);
        let mut v = 0.0;
        for k in 0..self.links.len() {
            let mut y = 0.0;
            for j in 0..=k {
                y += self.com_coef(k, j) * alphas[j].sin();
            }
            v += self.links[k].mass * self.gravity * y;
        }
        v
    }

    pub fn total_energy(&self, theta: &DVector<f64>, theta_dot: &DVector<f64>) -> f64 {
        self.kinetic_energy(theta, theta_dot) + self.potential_energy(theta)
    }

    /// Base forward speed and heading rate for world-pose integration.
    pub fn base_rates(&self, theta: &DVector<f64>, theta_dot: &DVector<f64>) -> (f64, f64, f64) {
        if self.n_b != 2 {
            return (0.0, 0.0, 0.0);
        }
        let phi = self.heading(theta);
        let v = self.u_b[0] * theta_dot[0] + self.u_b[1] * theta_dot[1];
        let omega = self.w_phi[0] * theta_dot[0] + self.w_phi[1] * theta_dot[1];
        (v, omega, phi)
    }
}

/// Symmetric positive-definite solve with a conditioning guard.
fn solve_spd(d: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    let chol = d
        .clone()
        .cholesky()
        .ok_or_else(|| Error::numeric("inertia matrix lost positive definiteness"))?;
    // Cheap condition estimate from the Cholesky diagonal.
    let ldiag = chol.l_dirty();
    let mut dmin = f64::INFINITY;
    let mut dmax: f64 = 0.0;
    for i in 0..d.nrows() {
        let v = ldiag[(i, i)];
        dmin = dmin.min(v);
        dmax = dmax.max(v);
    }
    if (dmax / dmin).powi(2) > 1e12 {
        return Err(Error::numeric("inertia matrix is ill-conditioned"));
    }
    Ok(chol.solve(rhs))
}
