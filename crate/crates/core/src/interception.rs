//! Leader–follower target interception and the convex-hull success test.
//!
//! The leader (always agent n) steers onto the target with
//! `u_n = k_T e_T + v_T`; followers keep the shape while feeding forward
//! their observer estimates of `e_T` and `v_T`.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::flocking::{shape_gradient, u_dot, EdgeTerm};
use crate::geometry::Vec2;
use crate::scalar::Real;
use crate::unicycle::b_matrix;

/// Target position, velocity and acceleration at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TargetState<T> {
    pub p: Vec2<T>,
    pub v: Vec2<T>,
    pub a: Vec2<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterceptionGains<T> {
    pub k_a: T,
    pub k_t: T,
    /// Heading gain c_i per agent.
    pub c: Vec<T>,
    pub alpha1: T,
    pub alpha2: T,
    pub gamma_t1: T,
    pub gamma_t2: T,
}

impl<T: Real> InterceptionGains<T> {
    pub fn validate(&self) -> Result<()> {
        let positive = |x: T| x > T::zero() && x.is_finite();
        if !positive(self.k_a)
            || !positive(self.k_t)
            || !positive(self.alpha1)
            || !positive(self.alpha2)
            || !self.c.iter().all(|&c| positive(c))
        {
            return Err(Error::NonFinite("interception gains (must be positive)"));
        }
        Ok(())
    }

    /// (α₁ > γ_T1, α₂ > γ_T2)
    pub fn observer_bounds_hold(&self) -> (bool, bool) {
        (self.alpha1 > self.gamma_t1, self.alpha2 > self.gamma_t2)
    }
}

/// e_T = p_T − p_n
pub fn interception_error<T: Real>(p_target: Vec2<T>, p_leader: Vec2<T>) -> Vec2<T> {
    p_target - p_leader
}

/// u_n = k_T e_T + v_T
pub fn leader_u<T: Real>(e_t: Vec2<T>, v_t: Vec2<T>, k_t: T) -> Vec2<T> {
    e_t * k_t + v_t
}

/// ė_T = v_T − B(θ̃_n)(v_T + k_T e_T)
pub fn interception_error_rate<T: Real>(e_t: Vec2<T>, v_t: Vec2<T>, theta_err: T, k_t: T) -> Vec2<T> {
    v_t - b_matrix(theta_err) * leader_u(e_t, v_t, k_t)
}

/// u̇_n = k_T ė_T + a_T
pub fn leader_u_dot<T: Real>(e_t_dot: Vec2<T>, a_t: Vec2<T>, k_t: T) -> Vec2<T> {
    e_t_dot * k_t + a_t
}

fn check_follower(agent: usize, n: usize) -> Result<()> {
    if agent == n {
        Err(Error::NotAFollower(agent))
    } else if agent == 0 || agent > n {
        Err(Error::NodeOutOfRange { node: agent, n })
    } else {
        Ok(())
    }
}

/// u_i = −k_a Σ_j p_ij z_ij + k_T ê_Ti + v̂_Ti for a follower `agent` of an n-agent team.
pub fn follower_u<T: Real>(
    agent: usize,
    n: usize,
    terms: &[EdgeTerm<T>],
    e_t_hat: Vec2<T>,
    v_t_hat: Vec2<T>,
    k_a: T,
    k_t: T,
) -> Result<Vec2<T>> {
    check_follower(agent, n)?;
    Ok(e_t_hat * k_t + v_t_hat - shape_gradient(terms) * k_a)
}

/// Follower analogue of the flocking u̇ with feedforward rate k_T ê̇_Ti + v̂̇_Ti.
#[allow(clippy::too_many_arguments)]
pub fn follower_u_dot<T: Real>(
    agent: usize,
    n: usize,
    terms: &[EdgeTerm<T>],
    own_velocity: Vec2<T>,
    neighbor_velocities: &[Vec2<T>],
    e_t_hat_rate: Vec2<T>,
    v_t_hat_rate: Vec2<T>,
    k_a: T,
    k_t: T,
) -> Result<Vec2<T>> {
    check_follower(agent, n)?;
    let feed = e_t_hat_rate * k_t + v_t_hat_rate;
    Ok(u_dot(terms, own_velocity, neighbor_velocities, feed, k_a))
}

/// Counter-clockwise convex hull (Andrew's monotone chain), collinear points dropped.
pub fn convex_hull<T: Real>(points: &[Vec2<T>]) -> Vec<Vec2<T>> {
    let mut pts: Vec<Vec2<T>> = points.to_vec();
    pts.sort_by(|a, b| {
        a.x.partial_cmp(&b.x)
            .unwrap_or(Ordering::Equal)
            .then(a.y.partial_cmp(&b.y).unwrap_or(Ordering::Equal))
    });
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let turn = |o: Vec2<T>, a: Vec2<T>, b: Vec2<T>| (a - o).cross(b - o);
    let mut hull: Vec<Vec2<T>> = Vec::with_capacity(2 * pts.len());
    for &p in &pts {
        while hull.len() >= 2 && turn(hull[hull.len() - 2], hull[hull.len() - 1], p) <= T::zero() {
            hull.pop();
        }
        hull.push(p);
    }
    let lower = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower && turn(hull[hull.len() - 2], hull[hull.len() - 1], p) <= T::zero() {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

fn segment_distance<T: Real>(q: Vec2<T>, a: Vec2<T>, b: Vec2<T>) -> T {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == T::zero() {
        return (q - a).norm();
    }
    let t = ((q - a).dot(ab) / len2).max(T::zero()).min(T::one());
    (q - (a + ab * t)).norm()
}

/// Whether `q` lies inside the convex hull of `points` or within `tol` of it.
pub fn convex_hull_contains<T: Real>(points: &[Vec2<T>], q: Vec2<T>, tol: T) -> Result<bool> {
    if points.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    let hull = convex_hull(points);
    match hull.len() {
        1 => return Ok((q - hull[0]).norm() <= tol),
        2 => return Ok(segment_distance(q, hull[0], hull[1]) <= tol),
        _ => {}
    }
    let edges = || hull.iter().zip(hull.iter().cycle().skip(1));
    if edges().all(|(&a, &b)| (b - a).cross(q - a) >= T::zero()) {
        return Ok(true);
    }
    let d = edges()
        .map(|(&a, &b)| segment_distance(q, a, b))
        .fold(T::infinity(), T::min);
    Ok(d <= tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: f64, y: f64) -> Vec2<f64> {
        Vec2::new(x, y)
    }

    #[test]
    fn interception_error_examples() {
        assert_eq!(interception_error(v(1.0, 2.0), v(1.0, 2.0)), v(0.0, 0.0));
        assert_eq!(interception_error(v(1.0, 2.0), v(0.0, 0.0)), v(1.0, 2.0));
        let (a, b) = (v(0.3, -1.0), v(2.0, 0.5));
        assert_eq!(interception_error(a, b), -interception_error(b, a));
    }

    #[test]
    fn leader_u_examples() {
        assert_eq!(leader_u(v(0.0, 0.0), v(0.1, 0.2), 3.0), v(0.1, 0.2));
        assert_eq!(leader_u(v(1.0, 0.0), v(0.0, 0.0), 2.0), v(2.0, 0.0));
        let (e1, e2) = (v(0.5, -0.25), v(-1.0, 2.0));
        let lhs = leader_u(e1 + e2, v(0.0, 0.0), 1.5);
        let rhs = leader_u(e1, v(0.0, 0.0), 1.5) + leader_u(e2, v(0.0, 0.0), 1.5);
        assert!((lhs - rhs).norm() < 1e-15);
    }

    #[test]
    fn follower_u_examples() {
        let exact = [EdgeTerm { rel_position: v(0.1, 0.0), z: 0.0 }];
        let (e_t, v_t, k_t) = (v(0.2, -0.1), v(0.05, 0.0), 1.0);
        assert_eq!(
            follower_u(1, 5, &exact, e_t, v_t, 6.0, k_t).unwrap(),
            leader_u(e_t, v_t, k_t)
        );
        assert_eq!(
            follower_u(2, 5, &exact, v(0.0, 0.0), v(0.0, 0.0), 6.0, k_t).unwrap(),
            v(0.0, 0.0)
        );
        let one = [EdgeTerm { rel_position: v(0.0, 1.0), z: -1.0 }];
        assert_eq!(
            follower_u(1, 5, &one, v(0.0, 0.0), v(0.0, 0.0), 2.0, 1.0).unwrap(),
            v(0.0, 2.0)
        );
        assert_eq!(
            follower_u(5, 5, &one, v(0.0, 0.0), v(0.0, 0.0), 2.0, 1.0),
            Err(Error::NotAFollower(5))
        );
    }

    #[test]
    fn leader_u_dot_examples() {
        let a_t = v(0.01, -0.02);
        let e_dot = interception_error_rate(v(0.0, 0.0), v(0.3, 0.1), 0.0, 1.0);
        assert_eq!(e_dot, v(0.0, 0.0));
        assert_eq!(leader_u_dot(e_dot, a_t, 1.0), a_t);

        let v_t = v(0.3, 0.1);
        let e_dot = interception_error_rate(v(0.4, 0.2), v_t, std::f64::consts::FRAC_PI_2, 1.0);
        assert!((e_dot - v_t).norm() < 1e-16);

        let e_t = v(0.4, -0.3);
        let k_t = 2.0;
        let e_dot = interception_error_rate(e_t, v(0.0, 0.0), 0.0, k_t);
        let ud = leader_u_dot(e_dot, v(0.0, 0.0), k_t);
        assert!((ud - e_t * (-k_t * k_t)).norm() < 1e-15);
    }

    #[test]
    fn follower_u_dot_examples() {
        let terms = [EdgeTerm { rel_position: v(-1.0, 0.0), z: 0.0 }];
        let zero = v(0.0, 0.0);
        assert_eq!(
            follower_u_dot(1, 3, &terms, zero, &[zero], zero, zero, 1.0, 1.0).unwrap(),
            zero
        );
        let r = follower_u_dot(1, 3, &terms, v(1.0, 0.0), &[zero], zero, zero, 1.0, 1.0).unwrap();
        assert_eq!(r, v(-2.0, 0.0));
        let rate = v(0.1, 0.2);
        let flock = u_dot(&terms, v(1.0, 0.0), &[zero], rate, 1.0);
        let as_follower =
            follower_u_dot(1, 3, &terms, v(1.0, 0.0), &[zero], v(7.0, 7.0), rate, 1.0, 0.0).unwrap();
        assert_eq!(flock, as_follower);
        assert!(follower_u_dot(3, 3, &terms, zero, &[zero], zero, zero, 1.0, 1.0).is_err());
    }

    #[test]
    fn hull_examples() {
        let square = [v(0.0, 0.0), v(1.0, 0.0), v(1.0, 1.0), v(0.0, 1.0)];
        assert!(convex_hull_contains(&square, v(0.5, 0.5), 1e-9).unwrap());
        assert!(!convex_hull_contains(&square, v(2.0, 2.0), 1e-9).unwrap());
        assert!(convex_hull_contains(&square, v(1.0, 0.3), 1e-9).unwrap());
        assert!(convex_hull_contains(&square, v(1.0 + 5e-10, 0.3), 1e-9).unwrap());
        assert!(!convex_hull_contains(&square, v(1.0 + 1e-6, 0.3), 1e-9).unwrap());
        assert_eq!(
            convex_hull_contains::<f64>(&[], v(0.0, 0.0), 1e-9),
            Err(Error::EmptyPointSet)
        );
    }

    #[test]
    fn degenerate_hulls() {
        let line = [v(0.0, 0.0), v(1.0, 1.0), v(2.0, 2.0)];
        assert!(convex_hull_contains(&line, v(1.5, 1.5), 1e-9).unwrap());
        assert!(!convex_hull_contains(&line, v(1.5, 1.4), 1e-9).unwrap());
        assert!(convex_hull_contains(&[v(1.0, 1.0)], v(1.0, 1.0), 0.0).unwrap());
        assert!(!convex_hull_contains(&[v(1.0, 1.0)], v(1.0, 1.1), 0.05).unwrap());
    }

    #[test]
    fn hull_of_scattered_points() {
        let pts = [v(0.0, 0.0), v(2.0, 0.0), v(1.0, 0.5), v(2.0, 2.0), v(0.0, 2.0), v(1.0, 1.0)];
        let hull = convex_hull(&pts);
        assert_eq!(hull.len(), 4);
        assert!(!hull.contains(&v(1.0, 0.5)));
    }
}
