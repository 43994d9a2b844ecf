//! Fixed-step closed-loop simulation: plant integration (RK4), reference
//! impedance model, estimator updates, contact, disturbances, and the
//! time-series log.

use std::cell::RefCell;
use std::io::Write as _;
use std::path::Path;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::contact::{ContactModel, ObstacleState};
use crate::controller::{
    error_coords, pd_torque, rabic_torque, ErrorCoordinates, GainSet, PdGains,
};
use crate::dynamics::{RobotModel, Wrench};
use crate::error::{Error, Result};
use crate::estimator::{predict_uncertainty, EstimatorConfig, JointEstimator};
use crate::numerics::rk4_step;
use crate::reference_model::{
    desired_point, step_reference, ImpedanceParams, JointSignal, ReferenceState, TrajectorySpec,
};

/// Any state component beyond this aborts the run as a blow-up.
const BLOWUP_LIMIT: f64 = 1e9;

/// Which control law closes the loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControllerKind {
    Pd,
    Rabic,
}

impl ControllerKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ControllerKind::Pd => "pd",
            ControllerKind::Rabic => "rabic",
        }
    }
}

/// Exogenous disturbances: per-joint torque signals plus zero-mean uniform
/// force noise on the planar wrench components, redrawn every step from the
/// scenario seed.
#[derive(Debug, Clone, PartialEq)]
pub struct Disturbance {
    pub joint_signals: Option<Vec<JointSignal>>,
    pub wrench_noise_amplitude: f64,
}

impl Disturbance {
    pub fn none() -> Self {
        Self {
            joint_signals: None,
            wrench_noise_amplitude: 0.0,
        }
    }

    fn torque(&self, n: usize, t: f64) -> Result<DVector<f64>> {
        match &self.joint_signals {
            None => Ok(DVector::zeros(n)),
            Some(signals) => {
                let spec = TrajectorySpec::new(signals.clone(), 1.0)?;
                Ok(desired_point(&spec, t)?.pos)
            }
        }
    }
}

/// Everything needed to run one closed-loop experiment.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub robot: RobotModel,
    pub contact: Option<ContactModel>,
    pub trajectory: TrajectorySpec,
    pub impedance: ImpedanceParams,
    pub controller: ControllerKind,
    pub gains: Option<GainSet>,
    pub estimator: Option<EstimatorConfig>,
    pub pd: Option<PdGains>,
    pub disturbance: Disturbance,
    pub duration: f64,
    pub dt: f64,
    pub seed: u64,
    pub theta0: DVector<f64>,
    pub theta_dot0: DVector<f64>,
    /// Hash of the full configuration, stamped into the log header.
    pub config_hash: u64,
    /// Hash of the plant/contact geometry only, used to refuse comparing
    /// runs of different physical setups.
    pub geometry_hash: u64,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        let n = self.robot.n();
        if self.trajectory.n() != n {
            return Err(Error::Config(format!(
                "trajectory has {} joint signals, robot has {} coordinates",
                self.trajectory.n(),
                n
            )));
        }
        if self.impedance.n() != n {
            return Err(Error::Config("impedance parameter length mismatch".into()));
        }
        if self.theta0.len() != n || self.theta_dot0.len() != n {
            return Err(Error::Config("initial state length mismatch".into()));
        }
        if let Some(sig) = &self.disturbance.joint_signals {
            if sig.len() != n {
                return Err(Error::Config("disturbance signal length mismatch".into()));
            }
        }
        if !(self.disturbance.wrench_noise_amplitude >= 0.0) {
            return Err(Error::Config("wrench noise amplitude must be nonnegative".into()));
        }
        if !(self.dt > 0.0 && self.dt <= 0.1) {
            return Err(Error::Config(format!("dt must lie in (0, 0.1], got {}", self.dt)));
        }
        if !(self.duration >= self.dt) {
            return Err(Error::Config("duration must cover at least one step".into()));
        }
        match self.controller {
            ControllerKind::Pd => {
                let pd = self
                    .pd
                    .as_ref()
                    .ok_or_else(|| Error::Config("pd controller selected but no pd gains".into()))?;
                if pd.kp.len() != n {
                    return Err(Error::Config("pd gain length mismatch".into()));
                }
            }
            ControllerKind::Rabic => {
                let g = self
                    .gains
                    .as_ref()
                    .ok_or_else(|| Error::Config("rabic controller selected but no gains".into()))?;
                let e = self
                    .estimator
                    .as_ref()
                    .ok_or_else(|| Error::Config("rabic controller selected but no estimator".into()))?;
                if g.n() != n || e.n() != n {
                    return Err(Error::Config("rabic gain/estimator length mismatch".into()));
                }
            }
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }
}

/// Column-labelled numeric time series produced by a run.
#[derive(Debug, Clone)]
pub struct SimLog {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub config_hash: u64,
    pub geometry_hash: u64,
    pub n: usize,
    pub dt: f64,
}

impl SimLog {
    pub fn col_index(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::Config(format!("log has no column named {name}")))
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let i = self.col_index(name)?;
        Ok(self.rows.iter().map(|r| r[i]).collect())
    }

    /// CSV text: a comment line with the hashes, the header, then rows with
    /// shortest-roundtrip float formatting (bitwise reproducible).
    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "# config_hash={:016x} geometry_hash={:016x}\n",
            self.config_hash, self.geometry_hash
        ));
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let mut first = true;
            for v in row {
                if !first {
                    out.push(',');
                }
                out.push_str(&format!("{v}"));
                first = false;
            }
            out.push('\n');
        }
        out
    }

    /// Write the CSV atomically (temp file in the same directory, then rename).
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_csv_string().as_bytes())
    }
}

/// Atomic file write used for all run artifacts.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(
        ".{}.tmp",
        path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "out".into())
    ));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Result of a run: either the full log, or a partial log plus the abort
/// diagnosis when the state blew up or a numeric guard tripped.
#[derive(Debug, Clone)]
pub enum RunOutcome {
    Completed { log: SimLog },
    Aborted { log: SimLog, t: f64, what: String },
}

impl RunOutcome {
    pub fn log(&self) -> &SimLog {
        match self {
            RunOutcome::Completed { log } | RunOutcome::Aborted { log, .. } => log,
        }
    }

    pub fn is_completed(&self) -> bool {
        matches!(self, RunOutcome::Completed { .. })
    }
}

fn log_columns(n: usize) -> Vec<String> {
    let mut cols = vec!["t".to_string()];
    let per_joint = |name: &str, cols: &mut Vec<String>| {
        for i in 1..=n {
            cols.push(format!("{name}_{i}"));
        }
    };
    per_joint("theta", &mut cols);
    per_joint("theta_dot", &mut cols);
    per_joint("theta_d", &mut cols);
    per_joint("theta_r", &mut cols);
    per_joint("tau", &mut cols);
    for i in 0..6 {
        cols.push(format!("fe_{i}"));
    }
    per_joint("s", &mut cols);
    per_joint("xi1", &mut cols);
    per_joint("xi2", &mut cols);
    per_joint("phi_norm", &mut cols);
    per_joint("psi", &mut cols);
    cols
}

struct LoopState {
    theta: DVector<f64>,
    theta_dot: DVector<f64>,
    base_xy: (f64, f64),
    reference: ReferenceState,
    coords: ErrorCoordinates,
    estimators: Vec<JointEstimator>,
    obstacle: ObstacleState,
}

/// Run the closed loop and collect the log. Deterministic for a fixed
/// scenario (including the seed).
pub fn run_scenario(sc: &Scenario) -> Result<RunOutcome> {
    sc.validate()?;
    let n = sc.robot.n();
    let steps = sc.steps();
    let columns = log_columns(n);
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(steps + 1);
    let mut rng = ChaCha8Rng::seed_from_u64(sc.seed);

    let des0 = desired_point(&sc.trajectory, 0.0)?;
    // For the backstepping law the inner loop tracks the reference model,
    // initialized on the desired trajectory; the PD baseline tracks the
    // desired trajectory directly.
    let reference = ReferenceState::new(des0.pos.clone(), des0.vel.clone());
    let viscous = sc.robot.viscous_friction();

    let dummy_gains = GainSet::new(
        DVector::from_element(n, 1.0),
        DVector::from_element(n, 1.0),
        0.9,
        DVector::from_element(n, 1.0),
        crate::controller::NominalInertia::identity(n),
        0.0,
        1e-3,
    )?;
    let gains = sc.gains.as_ref().unwrap_or(&dummy_gains);
    let coords = ErrorCoordinates::initial(
        &reference.theta_r,
        &reference.theta_r_dot,
        &sc.theta0,
        &sc.theta_dot0,
        gains,
    );
    let estimators: Vec<JointEstimator> = match (&sc.estimator, sc.controller) {
        (Some(cfg), ControllerKind::Rabic) => {
            (0..n).map(|i| JointEstimator::new(cfg, coords.xi2[i])).collect()
        }
        _ => Vec::new(),
    };

    let mut st = LoopState {
        theta: sc.theta0.clone(),
        theta_dot: sc.theta_dot0.clone(),
        base_xy: (0.0, 0.0),
        reference,
        coords,
        estimators,
        obstacle: ObstacleState::default(),
    };

    let mut abort: Option<(f64, String)> = None;

    for k in 0..=steps {
        let t = k as f64 * sc.dt;
        let des = desired_point(&sc.trajectory, t)?;

        // Measured external wrench: contact plus (optional) force noise.
        let (pose, vel) = sc.robot.end_effector_state(&st.theta, &st.theta_dot, st.base_xy)?;
        let (contact_wrench, push_force) = match &sc.contact {
            Some(c) => c.contact_wrench(&st.obstacle, &pose, &vel),
            None => (Wrench::zero(), 0.0),
        };
        let noise = if sc.disturbance.wrench_noise_amplitude > 0.0 {
            let a = sc.disturbance.wrench_noise_amplitude;
            Wrench::planar(rng.gen_range(-a..a), rng.gen_range(-a..a), 0.0)
        } else {
            Wrench::zero()
        };
        let mut fe = contact_wrench;
        for i in 0..6 {
            fe.0[i] += noise.0[i];
        }

        // Control torque at this sample.
        let tau = match sc.controller {
            ControllerKind::Pd => {
                let pd = sc.pd.as_ref().unwrap();
                pd_torque(pd, &des.pos, &des.vel, &st.theta, &st.theta_dot)
            }
            ControllerKind::Rabic => {
                let cfg = sc.estimator.as_ref().unwrap();
                let mut tau_hat = DVector::zeros(n);
                let mut psi_hat = DVector::zeros(n);
                for i in 0..n {
                    let gamma = st.estimators[i].build_regressor(cfg, st.coords.xi2[i]);
                    tau_hat[i] = predict_uncertainty(&gamma, &st.estimators[i].phi_hat)?;
                    psi_hat[i] = st.estimators[i].psi_hat;
                }
                rabic_torque(gains, &st.coords, &tau_hat, &psi_hat)?
            }
        };

        // Log the sample at time t.
        let mut row = Vec::with_capacity(columns.len());
        row.push(t);
        row.extend(st.theta.iter());
        row.extend(st.theta_dot.iter());
        row.extend(des.pos.iter());
        match sc.controller {
            ControllerKind::Pd => row.extend(des.pos.iter()),
            ControllerKind::Rabic => row.extend(st.reference.theta_r.iter()),
        }
        row.extend(tau.iter());
        row.extend(fe.0.iter());
        match sc.controller {
            ControllerKind::Pd => {
                row.extend(std::iter::repeat(0.0).take(5 * n));
            }
            ControllerKind::Rabic => {
                row.extend(st.coords.s.iter());
                row.extend(st.coords.xi1.iter());
                row.extend(st.coords.xi2.iter());
                for i in 0..n {
                    row.push(st.estimators[i].phi_hat.norm());
                }
                for i in 0..n {
                    row.push(st.estimators[i].psi_hat);
                }
            }
        }
        rows.push(row);
        if k == steps {
            break;
        }

        // Estimator adaptation from this sample (forward Euler).
        if sc.controller == ControllerKind::Rabic {
            let cfg = sc.estimator.as_ref().unwrap();
            for i in 0..n {
                let gamma = st.estimators[i].build_regressor(cfg, st.coords.xi2[i]);
                let s = st.coords.s[i];
                st.estimators[i].update_phi(&gamma, s, cfg.rho_phi[i], cfg.sigma_phi[i], sc.dt)?;
                st.estimators[i].update_psi(s, cfg.rho_psi[i], cfg.sigma_psi[i], sc.dt);
            }
        }

        // Advance the plant with the torque and measured wrench held, but
        // contact force recomputed along the trajectory inside the step
        // (the obstacle's own state is frozen during the step).
        let mut packed = DVector::zeros(2 * n + 2);
        packed.rows_mut(0, n).copy_from(&st.theta);
        packed.rows_mut(n, n).copy_from(&st.theta_dot);
        packed[2 * n] = st.base_xy.0;
        packed[2 * n + 1] = st.base_xy.1;

        let deriv_err: RefCell<Option<Error>> = RefCell::new(None);
        let next = rk4_step(
            |tt, x| {
                let theta = x.rows(0, n).clone_owned();
                let theta_dot = x.rows(n, n).clone_owned();
                let base = (x[2 * n], x[2 * n + 1]);
                let result = (|| -> Result<DVector<f64>> {
                    let (pose, vel) = sc.robot.end_effector_state(&theta, &theta_dot, base)?;
                    let (cw, _) = match &sc.contact {
                        Some(c) => c.contact_wrench(&st.obstacle, &pose, &vel),
                        None => (Wrench::zero(), 0.0),
                    };
                    let mut fe_in = cw;
                    for i in 0..6 {
                        fe_in.0[i] += noise.0[i];
                    }
                    let mut tau_u = -theta_dot.component_mul(&viscous);
                    tau_u += sc.disturbance.torque(n, (t + tt).max(0.0))?;
                    let acc = sc.robot.forward_dynamics(&theta, &theta_dot, &tau, &tau_u, &fe_in)?;
                    let (v, _, phi) = sc.robot.base_rates(&theta, &theta_dot);
                    let mut dx = DVector::zeros(2 * n + 2);
                    dx.rows_mut(0, n).copy_from(&theta_dot);
                    dx.rows_mut(n, n).copy_from(&acc);
                    dx[2 * n] = v * phi.cos();
                    dx[2 * n + 1] = v * phi.sin();
                    Ok(dx)
                })();
                match result {
                    Ok(dx) => dx,
                    Err(e) => {
                        *deriv_err.borrow_mut() = Some(e);
                        DVector::zeros(2 * n + 2)
                    }
                }
            },
            &packed,
            0.0,
            sc.dt,
        );

        if let Some(e) = deriv_err.into_inner() {
            abort = Some((t, format!("plant derivative failed: {e}")));
            break;
        }
        let next = match next {
            Ok(v) => v,
            Err(e) => {
                abort = Some((t, format!("plant step failed: {e}")));
                break;
            }
        };
        st.theta = next.rows(0, n).clone_owned();
        st.theta_dot = next.rows(n, n).clone_owned();
        st.base_xy = (next[2 * n], next[2 * n + 1]);

        if st.theta.amax() > BLOWUP_LIMIT || st.theta_dot.amax() > BLOWUP_LIMIT {
            abort = Some((t + sc.dt, "state exceeded blow-up limit".to_string()));
            break;
        }

        // Advance the reference model (wrench and desired point held).
        let j_mm = sc.robot.coupled_jacobian(&st.theta);
        st.reference = step_reference(&sc.impedance, &st.reference, &des, &fe, &j_mm, sc.dt)?;

        // New error coordinates and the estimator's integral channel.
        if sc.controller == ControllerKind::Rabic {
            st.coords = error_coords(
                &st.reference.theta_r,
                &st.reference.theta_r_dot,
                &st.theta,
                &st.theta_dot,
                gains,
                &st.coords,
                sc.dt,
            )?;
            for i in 0..n {
                st.estimators[i].advance_integral(st.coords.xi2[i], sc.dt);
            }
        }

        // The obstacle reacts to the normal force over the step.
        if let Some(c) = &sc.contact {
            c.step_obstacle(&mut st.obstacle, push_force, sc.dt);
        }
    }

    let log = SimLog {
        columns,
        rows,
        config_hash: sc.config_hash,
        geometry_hash: sc.geometry_hash,
        n,
        dt: sc.dt,
    };
    Ok(match abort {
        None => RunOutcome::Completed { log },
        Some((t, what)) => RunOutcome::Aborted { log, t, what },
    })
}
