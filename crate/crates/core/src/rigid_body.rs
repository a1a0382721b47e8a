//! Six-degree-of-freedom rigid body with a semi-implicit Euler step.

use nalgebra::{Matrix3, UnitQuaternion};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{TriMesh, Vec3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyPose {
    pub position: Vec3,
    pub orientation: UnitQuaternion<f64>,
    pub linear_velocity: Vec3,
    pub angular_velocity: Vec3,
}

impl Default for BodyPose {
    fn default() -> Self {
        Self {
            position: Vec3::zeros(),
            orientation: UnitQuaternion::identity(),
            linear_velocity: Vec3::zeros(),
            angular_velocity: Vec3::zeros(),
        }
    }
}

impl BodyPose {
    pub fn at(position: Vec3) -> Self {
        Self { position, ..Self::default() }
    }

    /// Body-frame point to world frame.
    pub fn to_world(&self, p: &Vec3) -> Vec3 {
        self.position + self.orientation * p
    }

    pub fn point_velocity(&self, world: &Vec3) -> Vec3 {
        self.linear_velocity + self.angular_velocity.cross(&(world - self.position))
    }

    /// Heading of the body +z axis about world +y.
    pub fn yaw(&self) -> f64 {
        let fwd = self.orientation * Vec3::z();
        fwd.x.atan2(fwd.z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InertiaModel {
    #[default]
    Polyhedral,
    BoundingBox,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RigidBody {
    mass: f64,
    inertia: Matrix3<f64>,
    inertia_inv: Matrix3<f64>,
    pose: BodyPose,
    angular_momentum: Vec3,
    force: Vec3,
    torque: Vec3,
    angular_damping: f64,
}

impl RigidBody {
    pub fn new(mass: f64, inertia: Matrix3<f64>, pose: BodyPose) -> Result<Self> {
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::config(format!("body mass must be > 0, got {mass}")));
        }
        if (inertia - inertia.transpose()).abs().max() > 1e-9 * inertia.abs().max() {
            return Err(Error::config("inertia tensor must be symmetric"));
        }
        if inertia.cholesky().is_none() {
            return Err(Error::config("inertia tensor must be positive definite"));
        }
        let inertia_inv = inertia.try_inverse().ok_or_else(|| Error::config("singular inertia"))?;
        let mut body = Self {
            mass,
            inertia,
            inertia_inv,
            pose,
            angular_momentum: Vec3::zeros(),
            force: Vec3::zeros(),
            torque: Vec3::zeros(),
            angular_damping: 0.0,
        };
        body.set_angular_velocity(pose.angular_velocity);
        Ok(body)
    }

    /// Body of uniform density whose frame origin is the mesh centroid.
    pub fn from_mesh(mesh: &TriMesh, mass: f64, model: InertiaModel, pose: BodyPose) -> Result<Self> {
        let inertia = match model {
            InertiaModel::Polyhedral => mesh.inertia(mass / mesh.volume()),
            InertiaModel::BoundingBox => {
                let e = mesh.extents();
                Matrix3::from_diagonal(&Vec3::new(
                    e.y * e.y + e.z * e.z,
                    e.x * e.x + e.z * e.z,
                    e.x * e.x + e.y * e.y,
                )) * (mass / 12.0)
            }
        };
        RigidBody::new(mass, inertia, pose)
    }

    pub fn with_angular_damping(mut self, rate: f64) -> Self {
        self.angular_damping = rate.max(0.0);
        self
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn inertia(&self) -> &Matrix3<f64> {
        &self.inertia
    }

    pub fn pose(&self) -> &BodyPose {
        &self.pose
    }

    pub fn set_pose(&mut self, pose: BodyPose) {
        self.pose = pose;
        self.set_angular_velocity(pose.angular_velocity);
    }

    pub fn set_angular_velocity(&mut self, w: Vec3) {
        let r = self.pose.orientation.to_rotation_matrix();
        self.angular_momentum = r * self.inertia * r.transpose() * w;
        self.pose.angular_velocity = w;
    }

    pub fn angular_momentum(&self) -> Vec3 {
        self.angular_momentum
    }

    pub fn linear_momentum(&self) -> Vec3 {
        self.pose.linear_velocity * self.mass
    }

    pub fn accumulated(&self) -> (Vec3, Vec3) {
        (self.force, self.torque)
    }

    pub fn apply_force(&mut self, force: Vec3) {
        self.force += force;
    }

    pub fn apply_torque(&mut self, torque: Vec3) {
        self.torque += torque;
    }

    pub fn apply_force_at(&mut self, force: Vec3, point: Vec3) {
        self.force += force;
        self.torque += (point - self.pose.position).cross(&force);
    }

    pub fn integrate(&mut self, gravity: Vec3, dt: f64) {
        let p = &mut self.pose;
        p.linear_velocity += (self.force / self.mass + gravity) * dt;
        self.angular_momentum += self.torque * dt;
        if self.angular_damping > 0.0 {
            self.angular_momentum *= (-self.angular_damping * dt).exp();
        }
        let r = p.orientation.to_rotation_matrix();
        p.angular_velocity = r * self.inertia_inv * r.transpose() * self.angular_momentum;
        p.position += p.linear_velocity * dt;
        let dq = UnitQuaternion::from_scaled_axis(p.angular_velocity * dt);
        p.orientation = UnitQuaternion::new_normalize((dq * p.orientation).into_inner());
        self.force = Vec3::zeros();
        self.torque = Vec3::zeros();
    }

    pub fn kinetic_energy(&self) -> f64 {
        0.5 * self.mass * self.pose.linear_velocity.norm_squared()
            + 0.5 * self.pose.angular_velocity.dot(&self.angular_momentum)
    }

    pub fn is_finite(&self) -> bool {
        let p = &self.pose;
        p.position.iter().all(|v| v.is_finite())
            && p.linear_velocity.iter().all(|v| v.is_finite())
            && p.angular_velocity.iter().all(|v| v.is_finite())
            && p.orientation.coords.iter().all(|v| v.is_finite())
    }
}
