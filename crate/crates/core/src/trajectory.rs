//! Analytic reference signals: the flocking velocity v₀(t) and target paths.

use serde::{Deserialize, Serialize};

use crate::geometry::Vec2;
use crate::interception::TargetState;
use crate::scalar::Real;

fn vec<T: Real>(x: f64, y: f64) -> Vec2<T> {
    Vec2::new(T::of(x), T::of(y))
}

/// Desired flocking velocity v₀(t).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum VelocityProfile {
    Constant {
        velocity_mps: [f64; 2],
    },
    /// v₀(t) = rω [−sin(ωt + φ), cos(ωt + φ)]: the formation center traces a circle.
    Circle {
        radius_m: f64,
        omega_radps: f64,
        #[serde(default)]
        phase_rad: f64,
    },
}

impl VelocityProfile {
    pub fn velocity<T: Real>(&self, t: T) -> Vec2<T> {
        let t = t.to_f64_lossy();
        match *self {
            Self::Constant { velocity_mps } => vec(velocity_mps[0], velocity_mps[1]),
            Self::Circle {
                radius_m,
                omega_radps,
                phase_rad,
            } => {
                let (s, c) = (omega_radps * t + phase_rad).sin_cos();
                let k = radius_m * omega_radps;
                vec(-k * s, k * c)
            }
        }
    }

    pub fn acceleration<T: Real>(&self, t: T) -> Vec2<T> {
        let t = t.to_f64_lossy();
        match *self {
            Self::Constant { .. } => Vec2::zero(),
            Self::Circle {
                radius_m,
                omega_radps,
                phase_rad,
            } => {
                let (s, c) = (omega_radps * t + phase_rad).sin_cos();
                let k = radius_m * omega_radps * omega_radps;
                vec(-k * c, -k * s)
            }
        }
    }

    /// The bound γ₀ the observer gain is checked against. For the circular
    /// profile this is r·ω, the convention of the reference experiment; it
    /// dominates the true sup ‖v̇₀‖ = r·ω² whenever ω ≤ 1.
    pub fn gamma_bound(&self) -> f64 {
        match *self {
            Self::Constant { .. } => 0.0,
            Self::Circle {
                radius_m,
                omega_radps,
                ..
            } => (radius_m * omega_radps).abs(),
        }
    }

    pub fn sup_acceleration(&self) -> f64 {
        match *self {
            Self::Constant { .. } => 0.0,
            Self::Circle {
                radius_m,
                omega_radps,
                ..
            } => (radius_m * omega_radps * omega_radps).abs(),
        }
    }
}

/// Target trajectory p_T(t) with analytic velocity and acceleration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetPath {
    Circle {
        center_m: [f64; 2],
        radius_m: f64,
        omega_radps: f64,
        #[serde(default)]
        phase_rad: f64,
    },
    Line {
        start_m: [f64; 2],
        velocity_mps: [f64; 2],
    },
    /// p_T(t) = start + (v t, A sin ωt)
    Sine {
        start_m: [f64; 2],
        speed_x_mps: f64,
        amplitude_m: f64,
        omega_radps: f64,
    },
    /// Constant-speed travel along a polyline; the target stops at the last point.
    Waypoints {
        points_m: Vec<[f64; 2]>,
        speed_mps: f64,
    },
}

impl TargetPath {
    pub fn state<T: Real>(&self, t: T) -> TargetState<T> {
        let t = t.to_f64_lossy();
        let (p, v, a) = self.state_f64(t);
        TargetState {
            p: vec(p[0], p[1]),
            v: vec(v[0], v[1]),
            a: vec(a[0], a[1]),
        }
    }

    fn state_f64(&self, t: f64) -> ([f64; 2], [f64; 2], [f64; 2]) {
        match self {
            Self::Circle {
                center_m,
                radius_m,
                omega_radps,
                phase_rad,
            } => {
                let (r, w) = (*radius_m, *omega_radps);
                let (s, c) = (w * t + phase_rad).sin_cos();
                (
                    [center_m[0] + r * c, center_m[1] + r * s],
                    [-r * w * s, r * w * c],
                    [-r * w * w * c, -r * w * w * s],
                )
            }
            Self::Line {
                start_m,
                velocity_mps,
            } => (
                [
                    start_m[0] + velocity_mps[0] * t,
                    start_m[1] + velocity_mps[1] * t,
                ],
                *velocity_mps,
                [0.0, 0.0],
            ),
            Self::Sine {
                start_m,
                speed_x_mps,
                amplitude_m,
                omega_radps,
            } => {
                let (s, c) = (omega_radps * t).sin_cos();
                (
                    [start_m[0] + speed_x_mps * t, start_m[1] + amplitude_m * s],
                    [*speed_x_mps, amplitude_m * omega_radps * c],
                    [0.0, -amplitude_m * omega_radps * omega_radps * s],
                )
            }
            Self::Waypoints {
                points_m,
                speed_mps,
            } => waypoint_state(points_m, *speed_mps, t),
        }
    }

    /// γ_T1 = sup ‖p̈_T‖ (corner impulses of waypoint paths are ignored).
    pub fn sup_acceleration(&self) -> f64 {
        match self {
            Self::Circle {
                radius_m,
                omega_radps,
                ..
            } => (radius_m * omega_radps * omega_radps).abs(),
            Self::Line { .. } | Self::Waypoints { .. } => 0.0,
            Self::Sine {
                amplitude_m,
                omega_radps,
                ..
            } => (amplitude_m * omega_radps * omega_radps).abs(),
        }
    }

    /// sup ‖ṗ_T‖
    pub fn sup_speed(&self) -> f64 {
        match self {
            Self::Circle {
                radius_m,
                omega_radps,
                ..
            } => (radius_m * omega_radps).abs(),
            Self::Line { velocity_mps, .. } => velocity_mps[0].hypot(velocity_mps[1]),
            Self::Sine {
                speed_x_mps,
                amplitude_m,
                omega_radps,
                ..
            } => speed_x_mps.hypot(amplitude_m * omega_radps),
            Self::Waypoints { speed_mps, .. } => speed_mps.abs(),
        }
    }
}

fn waypoint_state(points: &[[f64; 2]], speed: f64, t: f64) -> ([f64; 2], [f64; 2], [f64; 2]) {
    let zero = [0.0, 0.0];
    let Some(&first) = points.first() else {
        return (zero, zero, zero);
    };
    let mut remaining = speed * t.max(0.0);
    for w in points.windows(2) {
        let d = [w[1][0] - w[0][0], w[1][1] - w[0][1]];
        let len = d[0].hypot(d[1]);
        if len == 0.0 {
            continue;
        }
        if remaining < len {
            let u = [d[0] / len, d[1] / len];
            return (
                [w[0][0] + u[0] * remaining, w[0][1] + u[1] * remaining],
                [u[0] * speed, u[1] * speed],
                zero,
            );
        }
        remaining -= len;
    }
    (*points.last().unwrap_or(&first), zero, zero)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_check(path: &TargetPath, t: f64) {
        let h = 1e-6;
        let s = path.state::<f64>(t);
        let p1 = path.state::<f64>(t + h).p;
        let p0 = path.state::<f64>(t - h).p;
        let v_fd = (p1 - p0) * (0.5 / h);
        assert!((v_fd - s.v).norm() < 1e-8, "{path:?}: {v_fd:?} vs {:?}", s.v);
        let v1 = path.state::<f64>(t + h).v;
        let v0 = path.state::<f64>(t - h).v;
        let a_fd = (v1 - v0) * (0.5 / h);
        assert!((a_fd - s.a).norm() < 1e-8);
    }

    #[test]
    fn target_derivatives_are_consistent() {
        let paths = [
            TargetPath::Circle {
                center_m: [0.1, -0.2],
                radius_m: 0.3,
                omega_radps: 0.2,
                phase_rad: 0.4,
            },
            TargetPath::Line {
                start_m: [1.0, 2.0],
                velocity_mps: [0.05, -0.01],
            },
            TargetPath::Sine {
                start_m: [0.0, 0.0],
                speed_x_mps: 0.04,
                amplitude_m: 0.2,
                omega_radps: 0.5,
            },
            TargetPath::Waypoints {
                points_m: vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]],
                speed_mps: 0.1,
            },
        ];
        for p in &paths {
            for t in [0.3, 4.1, 13.7] {
                fd_check(p, t);
            }
        }
    }

    #[test]
    fn waypoints_stop_at_the_end() {
        let p = TargetPath::Waypoints {
            points_m: vec![[0.0, 0.0], [1.0, 0.0]],
            speed_mps: 0.5,
        };
        let s = p.state::<f64>(10.0);
        assert_eq!((s.p.x, s.p.y, s.v.norm()), (1.0, 0.0, 0.0));
        let s = p.state::<f64>(1.0);
        assert_eq!(s.p.x, 0.5);
    }

    #[test]
    fn circular_flocking_velocity() {
        let v0 = VelocityProfile::Circle {
            radius_m: 0.15,
            omega_radps: 0.3,
            phase_rad: 0.0,
        };
        assert!((v0.gamma_bound() - 0.045).abs() < 1e-15);
        let v: Vec2<f64> = v0.velocity(0.0);
        assert!((v - Vec2::new(0.0, 0.045)).norm() < 1e-15);
        let h = 1e-6;
        let t = 2.5;
        let fd = (v0.velocity(t + h) - v0.velocity(t - h)) * (0.5 / h);
        assert!((fd - v0.acceleration(t)).norm() < 1e-9);
        assert!((v0.acceleration::<f64>(t).norm() - v0.sup_acceleration()).abs() < 1e-15);
    }
}
