//! Unicycle kinematics and the heading-error input transformation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Mat2, Vec2};
use crate::scalar::Real;

/// Wraps an angle into (−π, π].
pub fn wrap_angle<T: Real>(theta: T) -> T {
    let pi = T::PI();
    let two_pi = pi + pi;
    let mut w = theta - two_pi * ((theta + pi) / two_pi).floor();
    // floor lands in [−π, π); shift the lower endpoint to the closed side.
    if w <= -pi {
        w = w + two_pi;
    }
    if w > pi {
        w = w - two_pi;
    }
    w
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose<T> {
    pub x: T,
    pub y: T,
    pub theta: T,
}

impl<T: Real> Pose<T> {
    pub fn new(x: T, y: T, theta: T) -> Self {
        Self {
            x,
            y,
            theta: wrap_angle(theta),
        }
    }

    pub fn position(&self) -> Vec2<T> {
        Vec2::new(self.x, self.y)
    }

    pub fn heading(&self) -> Vec2<T> {
        Vec2::from_angle(self.theta)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.theta.is_finite()
    }

    /// Applies a world rotation about the origin followed by a translation.
    pub fn transformed(&self, angle: T, offset: Vec2<T>) -> Self {
        let p = self.position().rotate(angle) + offset;
        Self::new(p.x, p.y, self.theta + angle)
    }
}

/// η = (v, ω).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VelocityCommand<T> {
    pub v: T,
    pub omega: T,
}

impl<T: Real> VelocityCommand<T> {
    pub fn new(v: T, omega: T) -> Self {
        Self { v, omega }
    }

    pub fn stop() -> Self {
        Self::new(T::zero(), T::zero())
    }
}

/// S(θ) = [[cos θ, 0], [sin θ, 0], [0, 1]].
pub fn s_matrix<T: Real>(theta: T) -> [[T; 2]; 3] {
    let (s, c) = theta.sin_cos();
    [[c, T::zero()], [s, T::zero()], [T::zero(), T::one()]]
}

/// Explicit Euler step of q̇ = S(θ)η with θ taken at the start of the step.
pub fn step<T: Real>(pose: Pose<T>, cmd: VelocityCommand<T>, dt: T) -> Result<Pose<T>> {
    if !(dt > T::zero()) {
        return Err(Error::NonPositiveStep(dt.to_f64_lossy()));
    }
    let s = s_matrix(pose.theta);
    let eta = [cmd.v, cmd.omega];
    let rate = |row: [T; 2]| row[0] * eta[0] + row[1] * eta[1];
    Ok(Pose {
        x: pose.x + rate(s[0]) * dt,
        y: pose.y + rate(s[1]) * dt,
        theta: wrap_angle(pose.theta + rate(s[2]) * dt),
    })
}

/// B(θ̃) = cos θ̃ · Rot(θ̃): maps the virtual input u to the realized planar velocity.
pub fn b_matrix<T: Real>(theta_err: T) -> Mat2<T> {
    let c = theta_err.cos();
    let s2 = T::of(0.5) * (theta_err + theta_err).sin();
    Mat2::new(c * c, -s2, s2, c * c)
}

/// Planar velocity produced by v = ‖u‖ cos θ̃ when the heading error is θ̃.
pub fn realized_velocity<T: Real>(u: Vec2<T>, theta_err: T) -> Vec2<T> {
    b_matrix(theta_err) * u
}
