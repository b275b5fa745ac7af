//! Per-agent flocking law: gradient shape control plus an estimated
//! flocking-velocity feedforward, mapped onto (v, ω) through the desired
//! heading θ_d = atan2(u_y, u_x).

use crate::error::{Error, Result};
use crate::geometry::{Mat2, Vec2};
use crate::scalar::Real;
use crate::unicycle::{wrap_angle, VelocityCommand};

/// ‖u‖ at or below this is treated as u = 0 (m/s).
pub const U_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct FlockingGains<T> {
    pub k_a: T,
    /// Heading gain c_i per agent.
    pub c: Vec<T>,
    pub alpha: T,
}

impl<T: Real> FlockingGains<T> {
    pub fn new(k_a: T, c: Vec<T>, alpha: T) -> Result<Self> {
        let positive = |x: T| x > T::zero() && x.is_finite();
        if !positive(k_a) || !positive(alpha) || !c.iter().all(|&ci| positive(ci)) {
            return Err(Error::NonFinite("flocking gains (must be positive)"));
        }
        Ok(Self { k_a, c, alpha })
    }
}

/// Everything one agent computes on the way to its (v, ω) command.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ControlIntermediates<T> {
    pub u: Vec2<T>,
    pub u_dot: Vec2<T>,
    pub theta_id: T,
    pub theta_id_dot: T,
    pub theta_err: T,
}

/// Relative position p_ij = p_i − p_j and distance error z_ij for one neighbor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeTerm<T> {
    pub rel_position: Vec2<T>,
    pub z: T,
}

impl<T: Real> EdgeTerm<T> {
    pub fn new(rel_position: Vec2<T>, desired_distance: T) -> Self {
        Self {
            rel_position,
            z: rel_position.norm_squared() - desired_distance * desired_distance,
        }
    }
}

/// Σ_j p_ij z_ij
pub fn shape_gradient<T: Real>(terms: &[EdgeTerm<T>]) -> Vec2<T> {
    terms.iter().map(|t| t.rel_position * t.z).sum()
}

/// u_i = −k_a Σ_j p_ij z_ij + v̂_fi
pub fn control_u<T: Real>(terms: &[EdgeTerm<T>], v_hat: Vec2<T>, k_a: T) -> Vec2<T> {
    v_hat - shape_gradient(terms) * k_a
}

pub fn desired_heading<T: Real>(u: Vec2<T>) -> T {
    if u.norm() <= T::of(U_EPS) {
        T::zero()
    } else {
        u.y.atan2(u.x)
    }
}

/// Σ_j (z_ij I + 2 p_ij p_ijᵀ)(ṗ_i − ṗ_j), the time derivative of the shape gradient.
pub fn shape_gradient_rate<T: Real>(
    terms: &[EdgeTerm<T>],
    own_velocity: Vec2<T>,
    neighbor_velocities: &[Vec2<T>],
) -> Vec2<T> {
    debug_assert_eq!(terms.len(), neighbor_velocities.len());
    terms
        .iter()
        .zip(neighbor_velocities)
        .map(|(t, &vj)| {
            let p = t.rel_position;
            let jac = Mat2::identity().scale(t.z) + Mat2::outer(p, p).scale(T::of(2.0));
            jac * (own_velocity - vj)
        })
        .sum()
}

/// u̇_i = −k_a Σ_j (z_ij I + 2 p_ij p_ijᵀ)(B(θ̃_i)u_i − B(θ̃_j)u_j) + feedforward rate.
///
/// `own_velocity` is B(θ̃_i)u_i and `neighbor_velocities[k]` is B(θ̃_j)u_j for the
/// neighbor described by `terms[k]`, all in one frame.
pub fn u_dot<T: Real>(
    terms: &[EdgeTerm<T>],
    own_velocity: Vec2<T>,
    neighbor_velocities: &[Vec2<T>],
    feedforward_rate: Vec2<T>,
    k_a: T,
) -> Vec2<T> {
    feedforward_rate - shape_gradient_rate(terms, own_velocity, neighbor_velocities) * k_a
}

/// θ̇_d = uᵀ H u̇ / ‖u‖² with H = [[0, 1], [−1, 0]].
pub fn desired_heading_rate<T: Real>(u: Vec2<T>, u_dot: Vec2<T>) -> T {
    let n2 = u.norm_squared();
    if u.norm() <= T::of(U_EPS) {
        return T::zero();
    }
    let h = Mat2::new(T::zero(), T::one(), -T::one(), T::zero());
    u.dot(h * u_dot) / n2
}

/// v = ‖u‖ cos θ̃ and ω = −c θ̃ + θ̇_d, with θ̃ = wrap(θ − θ_d). Returns the command and θ̃.
pub fn velocity_command<T: Real>(
    u: Vec2<T>,
    theta: T,
    theta_id: T,
    theta_id_dot: T,
    c: T,
) -> (VelocityCommand<T>, T) {
    let theta_err = wrap_angle(theta - theta_id);
    let speed = if u.norm() <= T::of(U_EPS) {
        T::zero()
    } else {
        u.norm()
    };
    let cmd = VelocityCommand::new(speed * theta_err.cos(), -c * theta_err + theta_id_dot);
    (cmd, theta_err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::unicycle::b_matrix;
    use std::f64::consts::FRAC_PI_2;

    fn v(x: f64, y: f64) -> Vec2<f64> {
        Vec2::new(x, y)
    }

    #[test]
    fn control_u_examples() {
        let exact = [
            EdgeTerm { rel_position: v(0.1, 0.2), z: 0.0 },
            EdgeTerm { rel_position: v(-0.3, 0.0), z: 0.0 },
        ];
        let v0 = v(0.03, -0.02);
        assert_eq!(control_u(&exact, v0, 6.0), v0);

        let one = [EdgeTerm { rel_position: v(1.0, 0.0), z: 3.0 }];
        assert_eq!(control_u(&one, v(0.0, 0.0), 1.0), v(-3.0, 0.0));

        let sym = [
            EdgeTerm { rel_position: v(1.0, 0.0), z: 0.5 },
            EdgeTerm { rel_position: v(-1.0, 0.0), z: 0.5 },
        ];
        assert_eq!(control_u(&sym, v(0.0, 0.0), 2.0), v(0.0, 0.0));
    }

    #[test]
    fn edge_term_from_distance() {
        let t = EdgeTerm::new(v(2.0, 0.0), 1.0);
        assert_eq!(t.z, 3.0);
    }

    #[test]
    fn desired_heading_examples() {
        assert_eq!(desired_heading(v(1.0, 0.0)), 0.0);
        assert!((desired_heading(v(0.0, -1.0)) + FRAC_PI_2).abs() < 1e-15);
        assert_eq!(desired_heading(v(0.0, 0.0)), 0.0);
        assert_eq!(desired_heading(v(1e-13, 0.0)), 0.0);
    }

    #[test]
    fn u_dot_examples() {
        let terms = [EdgeTerm { rel_position: v(0.3, 0.1), z: 0.02 }];
        assert_eq!(u_dot(&terms, v(0.0, 0.0), &[v(0.0, 0.0)], v(0.0, 0.0), 6.0), v(0.0, 0.0));

        let common = v(0.2, -0.1);
        let exact = [EdgeTerm { rel_position: v(0.3, 0.1), z: 0.0 }];
        let b = b_matrix(0.0);
        assert_eq!(u_dot(&exact, b * common, &[b * common], v(0.0, 0.0), 6.0), v(0.0, 0.0));

        // p_12 = p_1 − p_2 = (−1, 0), z = 0, u_1 = (1, 0), u_2 = 0.
        let single = [EdgeTerm { rel_position: v(-1.0, 0.0), z: 0.0 }];
        let r = u_dot(&single, v(1.0, 0.0), &[v(0.0, 0.0)], v(0.0, 0.0), 1.0);
        assert_eq!(r, v(-2.0, 0.0));
    }

    #[test]
    fn heading_rate_examples() {
        assert_eq!(desired_heading_rate(v(0.3, 0.4), v(0.6, 0.8)), 0.0);
        assert_eq!(desired_heading_rate(v(1.0, 0.0), v(0.0, 1.0)), 1.0);
        assert_eq!(desired_heading_rate(v(0.0, 0.0), v(5.0, 1.0)), 0.0);
    }

    #[test]
    fn heading_rate_matches_finite_difference_of_atan2() {
        let u = v(0.3, -0.7);
        let ud = v(-1.1, 0.4);
        let h = 1e-7;
        let fd = (desired_heading(u + ud * h) - desired_heading(u - ud * h)) / (2.0 * h);
        assert!((fd - desired_heading_rate(u, ud)).abs() < 1e-7);
    }

    #[test]
    fn velocity_command_examples() {
        let (cmd, err) = velocity_command(v(1.0, 0.0), 0.0, 0.0, 0.0, 10.0);
        assert_eq!((cmd.v, cmd.omega, err), (1.0, 0.0, 0.0));

        let (cmd, _) = velocity_command(v(1.0, 0.0), FRAC_PI_2, 0.0, 0.0, 10.0);
        assert!(cmd.v.abs() < 1e-16);

        let (cmd, err) = velocity_command(v(1.0, 0.0), -0.2, 0.0, 0.3, 10.0);
        assert_eq!(err, -0.2);
        assert!((cmd.omega - 2.3).abs() < 1e-15);
    }

    #[test]
    fn gains_must_be_positive() {
        assert!(FlockingGains::new(6.0, vec![10.0; 5], 0.05).is_ok());
        assert!(FlockingGains::new(-1.0, vec![10.0; 5], 0.05).is_err());
        assert!(FlockingGains::new(6.0, vec![10.0, 0.0], 0.05).is_err());
    }
}
