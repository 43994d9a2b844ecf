//! TOML configuration schema, validation into a runnable [`Scenario`],
//! embedded presets, deterministic config/geometry hashing, and the dotted
//! parameter-path editing used by sweeps.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::contact::{ContactModel, Obstacle};
use crate::controller::{GainSet, NominalInertia, PdGains};
use crate::dynamics::{BaseParams, LinkParams, RobotModel};
use crate::error::{Error, Result};
use crate::estimator::EstimatorConfig;
use crate::reference_model::{ImpedanceParams, JointSignal, TrajectorySpec};
use crate::simulation::{ControllerKind, Disturbance, Scenario};

/// Either one number broadcast over all joints, or an explicit list.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum NumOrVec {
    Num(f64),
    Vec(Vec<f64>),
}

impl NumOrVec {
    fn to_dvector(&self, n: usize, what: &str) -> Result<DVector<f64>> {
        match self {
            NumOrVec::Num(v) => Ok(DVector::from_element(n, *v)),
            NumOrVec::Vec(vs) => {
                if vs.len() != n {
                    return Err(Error::Config(format!(
                        "{what}: expected {n} entries, got {}",
                        vs.len()
                    )));
                }
                Ok(DVector::from_vec(vs.clone()))
            }
        }
    }
}

fn default_zero() -> NumOrVec {
    NumOrVec::Num(0.0)
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct LinkConfig {
    pub mass: f64,
    pub length: f64,
    pub com_offset: f64,
    pub inertia: f64,
    #[serde(default)]
    pub viscous_friction: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BaseConfig {
    pub wheel_radius: f64,
    pub half_track: f64,
    pub chassis_mass: f64,
    pub chassis_inertia: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RobotConfig {
    /// "none" or "diff-drive".
    #[serde(default = "default_base_kind")]
    pub base: String,
    pub links: Vec<LinkConfig>,
    #[serde(default = "default_gravity")]
    pub gravity: f64,
    #[serde(default)]
    pub planar_gravity: bool,
    #[serde(default)]
    pub base_params: Option<BaseConfig>,
}

fn default_base_kind() -> String {
    "none".to_string()
}

fn default_gravity() -> f64 {
    9.81
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ContactConfig {
    /// "wall" or "box".
    pub obstacle: String,
    pub face_x: f64,
    #[serde(default)]
    pub mass: Option<f64>,
    #[serde(default)]
    pub pushable: bool,
    pub stiffness: f64,
    #[serde(default)]
    pub damping: f64,
    #[serde(default)]
    pub friction: f64,
    #[serde(default = "default_gravity")]
    pub gravity: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SignalConfig {
    Constant { value: f64 },
    Sinusoid { amplitude: f64, omega: f64 },
    SmoothedSinusoid { amplitude: f64, omega: f64 },
    Ramp { value: f64, rise_time: f64 },
}

impl SignalConfig {
    fn to_signal(&self) -> JointSignal {
        match *self {
            SignalConfig::Constant { value } => JointSignal::Constant { value },
            SignalConfig::Sinusoid { amplitude, omega } => JointSignal::Sinusoid { amplitude, omega },
            SignalConfig::SmoothedSinusoid { amplitude, omega } => {
                JointSignal::SmoothedSinusoid { amplitude, omega }
            }
            SignalConfig::Ramp { value, rise_time } => JointSignal::Ramp { value, rise_time },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryConfig {
    pub t_f: f64,
    pub joints: Vec<SignalConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PdConfig {
    pub kp: NumOrVec,
    pub kd: NumOrVec,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RabicConfig {
    pub k1: NumOrVec,
    pub k2: NumOrVec,
    pub l: f64,
    #[serde(default = "default_one")]
    pub mu: NumOrVec,
    #[serde(default = "default_one")]
    pub d_hat: NumOrVec,
    #[serde(default)]
    pub sign_smoothing_eps: f64,
    #[serde(default = "default_guard")]
    pub xi1_guard_eps: f64,
}

fn default_one() -> NumOrVec {
    NumOrVec::Num(1.0)
}

fn default_guard() -> f64 {
    1e-3
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ImpedanceConfig {
    pub m_r: NumOrVec,
    pub b_r: NumOrVec,
    pub k_r: NumOrVec,
    #[serde(default = "default_zero")]
    pub tau_d: NumOrVec,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EstimatorSection {
    #[serde(default = "default_order")]
    pub l1: usize,
    #[serde(default = "default_order")]
    pub l2: usize,
    pub rho_phi: NumOrVec,
    pub sigma_phi: NumOrVec,
    pub rho_psi: NumOrVec,
    pub sigma_psi: NumOrVec,
}

fn default_order() -> usize {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ControllerConfig {
    /// "pd" or "rabic"; overridable from the command line.
    pub kind: String,
    #[serde(default)]
    pub pd: Option<PdConfig>,
    #[serde(default)]
    pub rabic: Option<RabicConfig>,
    pub impedance: ImpedanceConfig,
    #[serde(default)]
    pub estimator: Option<EstimatorSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DisturbanceConfig {
    #[serde(default)]
    pub wrench_noise_amplitude: f64,
    #[serde(default)]
    pub joints: Option<Vec<SignalConfig>>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub duration: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_zero")]
    pub theta0: NumOrVec,
    #[serde(default = "default_zero")]
    pub theta_dot0: NumOrVec,
}

fn default_dt() -> f64 {
    0.001
}

/// The full experiment configuration as read from a TOML file.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub robot: RobotConfig,
    #[serde(default)]
    pub contact: Option<ContactConfig>,
    pub trajectory: TrajectoryConfig,
    pub controller: ControllerConfig,
    #[serde(default)]
    pub disturbance: Option<DisturbanceConfig>,
    pub sim: SimConfig,
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("TOML parse failed: {e}")))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(format!("TOML serialization failed: {e}")))
    }

    /// Read from a file path, or fall back to an embedded preset of that name.
    pub fn load(path_or_preset: &str) -> Result<Self> {
        let p = std::path::Path::new(path_or_preset);
        if p.is_file() {
            let text = std::fs::read_to_string(p)?;
            return Self::from_toml(&text);
        }
        if let Some(text) = preset_toml(path_or_preset) {
            return Self::from_toml(text);
        }
        Err(Error::Config(format!(
            "no config file at '{path_or_preset}' and no preset with that name (presets: {})",
            preset_names().join(", ")
        )))
    }

    fn build_robot(&self) -> Result<RobotModel> {
        let base = match self.robot.base.as_str() {
            "none" => None,
            "diff-drive" => {
                let b = self.robot.base_params.as_ref().ok_or_else(|| {
                    Error::Config("base = \"diff-drive\" needs a [robot.base_params] section".into())
                })?;
                Some(BaseParams {
                    wheel_radius: b.wheel_radius,
                    half_track: b.half_track,
                    chassis_mass: b.chassis_mass,
                    chassis_inertia: b.chassis_inertia,
                })
            }
            other => {
                return Err(Error::Config(format!(
                    "robot.base must be \"none\" or \"diff-drive\", got \"{other}\""
                )))
            }
        };
        let links = self
            .robot
            .links
            .iter()
            .map(|l| LinkParams {
                mass: l.mass,
                length: l.length,
                com_offset: l.com_offset,
                inertia: l.inertia,
                viscous_friction: l.viscous_friction,
            })
            .collect();
        RobotModel::new(base, links, self.robot.gravity, self.robot.planar_gravity)
    }

    fn build_contact(&self) -> Result<Option<ContactModel>> {
        let Some(c) = &self.contact else { return Ok(None) };
        let obstacle = match c.obstacle.as_str() {
            "wall" => Obstacle::Wall { x: c.face_x },
            "box" => Obstacle::Box {
                face_x: c.face_x,
                mass: c
                    .mass
                    .ok_or_else(|| Error::Config("box obstacle needs a mass".into()))?,
                pushable: c.pushable,
            },
            other => {
                return Err(Error::Config(format!(
                    "contact.obstacle must be \"wall\" or \"box\", got \"{other}\""
                )))
            }
        };
        Ok(Some(ContactModel::new(
            obstacle,
            c.stiffness,
            c.damping,
            c.friction,
            c.gravity,
        )?))
    }

    /// Validate and build a runnable scenario. `controller_override` replaces
    /// the configured controller kind (the `--controller` flag).
    pub fn build_scenario(&self, controller_override: Option<ControllerKind>) -> Result<Scenario> {
        let robot = self.build_robot()?;
        let n = robot.n();
        let contact = self.build_contact()?;
        let trajectory = TrajectorySpec::new(
            self.trajectory.joints.iter().map(|s| s.to_signal()).collect(),
            self.trajectory.t_f,
        )?;
        let impedance = ImpedanceParams::new(
            self.controller.impedance.m_r.to_dvector(n, "impedance.m_r")?,
            self.controller.impedance.b_r.to_dvector(n, "impedance.b_r")?,
            self.controller.impedance.k_r.to_dvector(n, "impedance.k_r")?,
            self.controller.impedance.tau_d.to_dvector(n, "impedance.tau_d")?,
        )?;

        let controller = match controller_override {
            Some(k) => k,
            None => match self.controller.kind.as_str() {
                "pd" => ControllerKind::Pd,
                "rabic" => ControllerKind::Rabic,
                other => {
                    return Err(Error::Config(format!(
                        "controller.kind must be \"pd\" or \"rabic\", got \"{other}\""
                    )))
                }
            },
        };

        let pd = match &self.controller.pd {
            Some(p) => Some(PdGains::new(
                p.kp.to_dvector(n, "pd.kp")?,
                p.kd.to_dvector(n, "pd.kd")?,
            )?),
            None => None,
        };
        let gains = match &self.controller.rabic {
            Some(r) => Some(GainSet::new(
                r.k1.to_dvector(n, "rabic.k1")?,
                r.k2.to_dvector(n, "rabic.k2")?,
                r.l,
                r.mu.to_dvector(n, "rabic.mu")?,
                NominalInertia::Diagonal(r.d_hat.to_dvector(n, "rabic.d_hat")?),
                r.sign_smoothing_eps,
                r.xi1_guard_eps,
            )?),
            None => None,
        };
        let estimator = match &self.controller.estimator {
            Some(e) => Some(EstimatorConfig::new(
                e.l1,
                e.l2,
                e.rho_phi.to_dvector(n, "estimator.rho_phi")?,
                e.sigma_phi.to_dvector(n, "estimator.sigma_phi")?,
                e.rho_psi.to_dvector(n, "estimator.rho_psi")?,
                e.sigma_psi.to_dvector(n, "estimator.sigma_psi")?,
            )?),
            None => None,
        };

        let disturbance = match &self.disturbance {
            None => Disturbance::none(),
            Some(d) => Disturbance {
                joint_signals: d
                    .joints
                    .as_ref()
                    .map(|js| js.iter().map(|s| s.to_signal()).collect()),
                wrench_noise_amplitude: d.wrench_noise_amplitude,
            },
        };

        let sc = Scenario {
            config_hash: self.config_hash()?,
            geometry_hash: self.geometry_hash()?,
            theta0: self.sim.theta0.to_dvector(n, "sim.theta0")?,
            theta_dot0: self.sim.theta_dot0.to_dvector(n, "sim.theta_dot0")?,
            robot,
            contact,
            trajectory,
            impedance,
            controller,
            gains,
            estimator,
            pd,
            disturbance,
            duration: self.sim.duration,
            dt: self.sim.dt,
            seed: self.sim.seed,
        };
        sc.validate()?;
        Ok(sc)
    }

    /// FNV-1a hash of the canonical serialization of the whole config.
    pub fn config_hash(&self) -> Result<u64> {
        Ok(fnv1a(self.to_toml()?.as_bytes()))
    }

    /// Hash of the physical setup only (plant, contact, trajectory,
    /// disturbance, timing, initial state) — controller choice and seed are
    /// excluded so PD and impedance runs of one experiment compare cleanly.
    pub fn geometry_hash(&self) -> Result<u64> {
        #[derive(Serialize)]
        struct Geometry<'a> {
            robot: &'a RobotConfig,
            contact: &'a Option<ContactConfig>,
            trajectory: &'a TrajectoryConfig,
            disturbance: &'a Option<DisturbanceConfig>,
            duration: f64,
            dt: f64,
            theta0: &'a NumOrVec,
            theta_dot0: &'a NumOrVec,
        }
        let g = Geometry {
            robot: &self.robot,
            contact: &self.contact,
            trajectory: &self.trajectory,
            disturbance: &self.disturbance,
            duration: self.sim.duration,
            dt: self.sim.dt,
            theta0: &self.sim.theta0,
            theta_dot0: &self.sim.theta_dot0,
        };
        let text = toml::to_string(&g)
            .map_err(|e| Error::Config(format!("geometry serialization failed: {e}")))?;
        Ok(fnv1a(text.as_bytes()))
    }

    /// Set one parameter by dotted TOML path (e.g. "controller.rabic.l" or
    /// "contact.stiffness"). If the target is an array of numbers the value
    /// is broadcast to every entry.
    pub fn set_param(&self, path: &str, value: f64) -> Result<Config> {
        let text = self.to_toml()?;
        let mut root: toml::Value = toml::from_str(&text)
            .map_err(|e| Error::Config(format!("internal TOML roundtrip failed: {e}")))?;
        let parts: Vec<&str> = path.split('.').collect();
        let (last, parents) = parts
            .split_last()
            .ok_or_else(|| Error::Config("sweep path must not be empty".into()))?;
        let mut node = &mut root;
        for part in parents {
            let table = node.as_table_mut().ok_or_else(|| {
                Error::Config(format!("sweep path '{path}': '{part}' is not a section"))
            })?;
            node = table.get_mut(*part).ok_or_else(|| {
                Error::Config(format!("sweep path '{path}': no section '{part}'"))
            })?;
        }
        let table = node.as_table_mut().ok_or_else(|| {
            Error::Config(format!("sweep path '{path}': '{last}' is not reachable"))
        })?;
        let slot = table
            .get_mut(*last)
            .ok_or_else(|| Error::Config(format!("sweep path '{path}': no field '{last}'")))?;
        match slot {
            toml::Value::Array(arr) => {
                for e in arr.iter_mut() {
                    *e = toml::Value::Float(value);
                }
            }
            toml::Value::Float(_) | toml::Value::Integer(_) => {
                *slot = toml::Value::Float(value);
            }
            _ => {
                return Err(Error::Config(format!(
                    "sweep path '{path}' does not point at a number or number array"
                )))
            }
        }
        let new_text = toml::to_string(&root)
            .map_err(|e| Error::Config(format!("TOML serialization failed: {e}")))?;
        Config::from_toml(&new_text)
    }
}

/// 64-bit FNV-1a.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

const PRESET_NOMINAL: &str = include_str!("../presets/nominal-3link.toml");
const PRESET_B_ANALOG: &str = include_str!("../presets/b-analog.toml");
const PRESET_D_ANALOG: &str = include_str!("../presets/d-analog.toml");

pub fn preset_names() -> Vec<&'static str> {
    vec!["nominal-3link", "b-analog", "d-analog"]
}

pub fn preset_toml(name: &str) -> Option<&'static str> {
    match name {
        "nominal-3link" => Some(PRESET_NOMINAL),
        "b-analog" => Some(PRESET_B_ANALOG),
        "d-analog" => Some(PRESET_D_ANALOG),
        _ => None,
    }
}
