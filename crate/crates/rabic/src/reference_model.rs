//! Outer-loop reference impedance dynamics and desired-trajectory generators.
//!
//! The reference model turns the desired trajectory, desired torque, and the
//! measured external wrench into the reference joint position `theta_r` the
//! inner loop tracks:
//!
//! theta_r_dd = M_r^-1 (tau_d - J^T f_e) + theta_d_dd
//!            - M_r^-1 B_r (theta_r_d - theta_d_d) - M_r^-1 K_r (theta_r - theta_d)

use nalgebra::{DMatrix, DVector};

use crate::dynamics::Wrench;
use crate::error::{Error, Result};
use crate::numerics::rk4_step;

/// Diagonal desired inertia / damping / stiffness plus the desired torque.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpedanceParams {
    pub m_r: DVector<f64>,
    pub b_r: DVector<f64>,
    pub k_r: DVector<f64>,
    pub tau_d: DVector<f64>,
}

impl ImpedanceParams {
    pub fn new(m_r: DVector<f64>, b_r: DVector<f64>, k_r: DVector<f64>, tau_d: DVector<f64>) -> Result<Self> {
        let n = m_r.len();
        if b_r.len() != n || k_r.len() != n || tau_d.len() != n {
            return Err(Error::Config("impedance parameter vectors must share one length".into()));
        }
        for (name, v) in [("M_r", &m_r), ("B_r", &b_r), ("K_r", &k_r)] {
            if v.iter().any(|&x| !(x > 0.0)) {
                return Err(Error::Config(format!("{name} diagonal entries must be strictly positive")));
            }
        }
        Ok(Self { m_r, b_r, k_r, tau_d })
    }

    pub fn n(&self) -> usize {
        self.m_r.len()
    }
}

/// Output state of the reference impedance model.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceState {
    pub theta_r: DVector<f64>,
    pub theta_r_dot: DVector<f64>,
}

impl ReferenceState {
    pub fn new(theta_r: DVector<f64>, theta_r_dot: DVector<f64>) -> Self {
        Self { theta_r, theta_r_dot }
    }
}

/// One sample of the desired trajectory with two derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct DesiredPoint {
    pub pos: DVector<f64>,
    pub vel: DVector<f64>,
    pub acc: DVector<f64>,
}

/// Analytic per-joint desired signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum JointSignal {
    Constant { value: f64 },
    /// a * sin(omega t)
    Sinusoid { amplitude: f64, omega: f64 },
    /// a * sin(omega t) (1 - e^{-omega t} (1 + omega t)); value and rate
    /// both vanish at t = 0.
    SmoothedSinusoid { amplitude: f64, omega: f64 },
    /// Quintic rise from 0 to `value` over `rise_time`, then hold. Velocity
    /// and acceleration vanish at both ends.
    Ramp { value: f64, rise_time: f64 },
}

/// Desired trajectory: one signal per joint and a nominal horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySpec {
    pub joints: Vec<JointSignal>,
    pub t_f: f64,
}

impl TrajectorySpec {
    pub fn new(joints: Vec<JointSignal>, t_f: f64) -> Result<Self> {
        if joints.is_empty() {
            return Err(Error::Config("trajectory needs at least one joint signal".into()));
        }
        if !(t_f > 0.0) {
            return Err(Error::Config("trajectory horizon t_f must be positive".into()));
        }
        for s in &joints {
            let finite = match s {
                JointSignal::Constant { value } => value.is_finite(),
                JointSignal::Sinusoid { amplitude, omega }
                | JointSignal::SmoothedSinusoid { amplitude, omega } => {
                    amplitude.is_finite() && omega.is_finite()
                }
                JointSignal::Ramp { value, rise_time } => value.is_finite() && *rise_time > 0.0,
            };
            if !finite {
                return Err(Error::Config("trajectory parameters must be finite".into()));
            }
        }
        Ok(Self { joints, t_f })
    }

    pub fn n(&self) -> usize {
        self.joints.len()
    }
}

/// Evaluate the desired trajectory and its first two derivatives at `t`.
pub fn desired_point(spec: &TrajectorySpec, t: f64) -> Result<DesiredPoint> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("desired_point: t must be nonnegative, got {t}")));
    }
    let n = spec.joints.len();
    let mut pos = DVector::zeros(n);
    let mut vel = DVector::zeros(n);
    let mut acc = DVector::zeros(n);
    for (i, s) in spec.joints.iter().enumerate() {
        match *s {
            JointSignal::Constant { value } => {
                pos[i] = value;
            }
            JointSignal::Sinusoid { amplitude, omega } => {
                let (sn, cs) = (omega * t).sin_cos();
                pos[i] = amplitude * sn;
                vel[i] = amplitude * omega * cs;
                acc[i] = -amplitude * omega * omega * sn;
            }
            JointSignal::SmoothedSinusoid { amplitude, omega } => {
                let wt = omega * t;
                let (sn, cs) = wt.sin_cos();
                let ex = (-wt).exp();
                let g = 1.0 - ex * (1.0 + wt);
                let g1 = omega * omega * t * ex;
                let g2 = omega * omega * ex * (1.0 - wt);
                pos[i] = amplitude * sn * g;
                vel[i] = amplitude * (omega * cs * g + sn * g1);
                acc[i] = amplitude * (-omega * omega * sn * g + 2.0 * omega * cs * g1 + sn * g2);
            }
            JointSignal::Ramp { value, rise_time } => {
                if t >= rise_time {
                    pos[i] = value;
                } else {
                    let u = t / rise_time;
                    let u2 = u * u;
                    pos[i] = value * u2 * u * (10.0 - 15.0 * u + 6.0 * u2);
                    vel[i] = value * 30.0 * u2 * (1.0 - u) * (1.0 - u) / rise_time;
                    acc[i] = value * 60.0 * u * (1.0 - u) * (1.0 - 2.0 * u) / (rise_time * rise_time);
                }
            }
        }
    }
    Ok(DesiredPoint { pos, vel, acc })
}

/// Reference acceleration of the impedance model.
pub fn reference_accel(
    imp: &ImpedanceParams,
    state: &ReferenceState,
    des: &DesiredPoint,
    f_e: &Wrench,
    j_mm: &DMatrix<f64>,
) -> DVector<f64> {
    let jt_fe = j_mm.transpose() * f_e.as_vector();
    let n = imp.n();
    let mut acc = DVector::zeros(n);
    for i in 0..n {
        acc[i] = (imp.tau_d[i] - jt_fe[i]) / imp.m_r[i] + des.acc[i]
            - imp.b_r[i] / imp.m_r[i] * (state.theta_r_dot[i] - des.vel[i])
            - imp.k_r[i] / imp.m_r[i] * (state.theta_r[i] - des.pos[i]);
    }
    acc
}

/// One RK4 step of the reference model, holding the desired point and the
/// wrench constant over the step (zero-order hold at the control rate).
pub fn step_reference(
    imp: &ImpedanceParams,
    state: &ReferenceState,
    des: &DesiredPoint,
    f_e: &Wrench,
    j_mm: &DMatrix<f64>,
    dt: f64,
) -> Result<ReferenceState> {
    let n = imp.n();
    let mut packed = DVector::zeros(2 * n);
    packed.rows_mut(0, n).copy_from(&state.theta_r);
    packed.rows_mut(n, n).copy_from(&state.theta_r_dot);
    let jt_fe = j_mm.transpose() * f_e.as_vector();

    let next = rk4_step(
        |_, x| {
            let mut dx = DVector::zeros(2 * n);
            for i in 0..n {
                dx[i] = x[n + i];
                dx[n + i] = (imp.tau_d[i] - jt_fe[i]) / imp.m_r[i] + des.acc[i]
                    - imp.b_r[i] / imp.m_r[i] * (x[n + i] - des.vel[i])
                    - imp.k_r[i] / imp.m_r[i] * (x[i] - des.pos[i]);
            }
            dx
        },
        &packed,
        0.0,
        dt,
    )?;
    Ok(ReferenceState {
        theta_r: next.rows(0, n).clone_owned(),
        theta_r_dot: next.rows(n, n).clone_owned(),
    })
}

/// Settled value of theta_r - theta_d under constant inputs:
/// K_r^-1 (tau_d - J^T f_e). `jt_fe` is the already-projected n-vector.
pub fn steady_state_offset(imp: &ImpedanceParams, jt_fe: &DVector<f64>) -> DVector<f64> {
    let n = imp.n();
    DVector::from_fn(n, |i, _| (imp.tau_d[i] - jt_fe[i]) / imp.k_r[i])
}
