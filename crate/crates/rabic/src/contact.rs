//! Compliant penalty contact between the end-effector point and a desk-scale
//! obstacle: a fixed half-plane wall or a box that may slide on the ground.
//!
//! Normal force is k_c * delta + b_c * delta_dot, clamped at zero (no
//! adhesion). Tangential force is a regularized Coulomb clamp along the
//! tangential slip. Forces are reported in the robot-on-environment
//! convention. A pushable obstacle integrates its own 1-DoF
//! position along the contact normal under the reaction force and ground
//! friction.

use crate::dynamics::{EePose, EeVelocity, Wrench};
use crate::error::{Error, Result};

/// Slip-speed threshold for the regularized Coulomb law (m/s). Above this
/// the tangential force magnitude is exactly mu * |F_n|.
pub const SLIP_EPS: f64 = 1e-3;

/// Obstacle geometry. Contact happens against a face normal to +x: the
/// end-effector penetrates when its x coordinate exceeds the face position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Obstacle {
    /// Immovable half-plane wall with its face at `x`.
    Wall { x: f64 },
    /// Box with its contact face at `face_x`; pushable boxes slide along +x.
    Box {
        face_x: f64,
        mass: f64,
        pushable: bool,
    },
}

/// Penalty contact parameters plus obstacle description.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactModel {
    pub obstacle: Obstacle,
    /// Normal stiffness (N/m).
    pub stiffness: f64,
    /// Normal damping (N s/m).
    pub damping: f64,
    /// Coulomb friction coefficient, used both at the end-effector contact
    /// and between a pushable box and the ground.
    pub friction: f64,
    /// Gravity magnitude for the box-ground normal load (m/s^2).
    pub gravity: f64,
}

/// Mutable state of a pushable obstacle (displacement along +x from the
/// configured face position, and its rate).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ObstacleState {
    pub displacement: f64,
    pub velocity: f64,
}

impl ContactModel {
    pub fn new(obstacle: Obstacle, stiffness: f64, damping: f64, friction: f64, gravity: f64) -> Result<Self> {
        if !(stiffness > 0.0) {
            return Err(Error::Config("contact stiffness must be positive".into()));
        }
        if damping < 0.0 || friction < 0.0 {
            return Err(Error::Config("contact damping and friction must be nonnegative".into()));
        }
        if let Obstacle::Box { mass, .. } = obstacle {
            if !(mass > 0.0) {
                return Err(Error::Config("obstacle mass must be positive".into()));
            }
        }
        Ok(Self {
            obstacle,
            stiffness,
            damping,
            friction,
            gravity,
        })
    }

    fn face_position(&self, state: &ObstacleState) -> f64 {
        match self.obstacle {
            Obstacle::Wall { x } => x,
            Obstacle::Box { face_x, pushable, .. } => {
                if pushable {
                    face_x + state.displacement
                } else {
                    face_x
                }
            }
        }
    }

    /// Interaction wrench the end-effector exerts on the environment (the
    /// convention the plant and reference model subtract as J^T f_e), plus
    /// the normal force pushing the obstacle (positive along +x).
    pub fn contact_wrench(
        &self,
        state: &ObstacleState,
        pose: &EePose,
        vel: &EeVelocity,
    ) -> (Wrench, f64) {
        let face = self.face_position(state);
        let delta = pose.x - face;
        if delta <= 0.0 {
            return (Wrench::zero(), 0.0);
        }
        let obstacle_vel = match self.obstacle {
            Obstacle::Box { pushable: true, .. } => state.velocity,
            _ => 0.0,
        };
        let delta_dot = vel.vx - obstacle_vel;
        let f_n = (self.stiffness * delta + self.damping * delta_dot).max(0.0);
        // Regularized Coulomb friction: the environment is dragged along the
        // end-effector's tangential (y) slip direction.
        let slip = (vel.vy / SLIP_EPS).clamp(-1.0, 1.0);
        let f_t = self.friction * f_n * slip;
        (Wrench::planar(f_n, f_t, 0.0), f_n)
    }

    /// Advance a pushable obstacle by one step under the pushing force and
    /// Coulomb friction with the ground (semi-implicit Euler with a stick
    /// condition).
    pub fn step_obstacle(&self, state: &mut ObstacleState, push_force: f64, dt: f64) {
        let (mass, pushable) = match self.obstacle {
            Obstacle::Box { mass, pushable, .. } => (mass, pushable),
            Obstacle::Wall { .. } => return,
        };
        if !pushable {
            return;
        }
        let friction_limit = self.friction * mass * self.gravity;
        if state.velocity.abs() < SLIP_EPS && push_force.abs() <= friction_limit {
            // Static friction holds the box.
            state.velocity = 0.0;
            return;
        }
        let v_ref = if state.velocity.abs() >= SLIP_EPS {
            state.velocity
        } else {
            push_force
        };
        let accel = (push_force - friction_limit * v_ref.signum()) / mass;
        let new_v = state.velocity + accel * dt;
        // Friction cannot reverse the motion within a step.
        state.velocity = if new_v * v_ref < 0.0 { 0.0 } else { new_v };
        state.displacement += state.velocity * dt;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn pose(x: f64, y: f64) -> EePose {
        EePose { x, y, yaw: 0.0 }
    }

    fn vel(vx: f64, vy: f64) -> EeVelocity {
        EeVelocity { vx, vy, yaw_rate: 0.0 }
    }

    fn wall(k: f64, b: f64, mu: f64) -> ContactModel {
        ContactModel::new(Obstacle::Wall { x: 1.0 }, k, b, mu, 9.81).unwrap()
    }

    #[test]
    fn no_penetration_no_wrench() {
        let c = wall(1e4, 50.0, 0.9);
        let (w, f) = c.contact_wrench(&ObstacleState::default(), &pose(0.5, 0.0), &vel(1.0, 1.0));
        assert!(w.is_zero());
        assert_eq!(f, 0.0);
    }

    #[test]
    fn normal_force_from_penetration() {
        let c = wall(1e4, 50.0, 0.0);
        let (w, f) = c.contact_wrench(&ObstacleState::default(), &pose(1.001, 0.0), &vel(0.0, 0.0));
        assert_relative_eq!(f, 10.0, epsilon = 1e-9);
        assert_relative_eq!(w.0[0], 10.0, epsilon = 1e-9);
    }

    #[test]
    fn no_adhesion_on_separation() {
        let c = wall(1e4, 50.0, 0.0);
        // Retreating fast enough that k*delta + b*delta_dot < 0.
        let (w, f) = c.contact_wrench(&ObstacleState::default(), &pose(1.0001, 0.0), &vel(-1.0, 0.0));
        assert_eq!(f, 0.0);
        assert!(w.is_zero());
    }

    #[test]
    fn coulomb_ratio_exact_during_slip() {
        let c = wall(1e4, 0.0, 0.9);
        let (w, f) = c.contact_wrench(&ObstacleState::default(), &pose(1.002, 0.0), &vel(0.0, 0.5));
        assert_relative_eq!(w.0[1].abs() / f, 0.9, epsilon = 1e-12);
        assert!(w.0[1] > 0.0, "environment is dragged along the +y slip");
    }

    #[test]
    fn static_box_holds_below_friction_limit() {
        let c = ContactModel::new(
            Obstacle::Box { face_x: 1.0, mass: 20.0, pushable: true },
            1e4,
            50.0,
            0.9,
            9.81,
        )
        .unwrap();
        let mut st = ObstacleState::default();
        // friction limit = 0.9 * 20 * 9.81 = 176.58 N
        c.step_obstacle(&mut st, 100.0, 1e-3);
        assert_eq!(st.displacement, 0.0);
        c.step_obstacle(&mut st, 300.0, 1e-3);
        assert!(st.velocity > 0.0);
    }
}
