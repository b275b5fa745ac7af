//! Distributed variable-structure consensus observers.
//!
//! Every agent integrates
//!
//! ```text
//! x̂̇_i = −α · sgn( Σ_{j∈N_i} (x̂_i − x̂_j) + s · b_i · (x̂_anchor − r) )
//! ```
//!
//! where `r` is the reference signal only agents with `b_i = 1` can see.
//! The flocking observer anchors on the agent's own estimate; the
//! interception observers anchor on the leader's estimate x̂_n.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::graph::Graph;
use crate::linalg::Matrix;
use crate::scalar::Real;

/// Scalar signum with sgn(0) = 0.
pub fn sgn<T: Real>(x: T) -> T {
    if x > T::zero() {
        T::one()
    } else if x < T::zero() {
        -T::one()
    } else {
        T::zero()
    }
}

/// Componentwise signum with sgn(0) = 0.
pub fn sgn_vec<T: Real>(v: Vec2<T>) -> Vec2<T> {
    v.map(sgn)
}

/// Switching nonlinearity used by the observers.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Switching<T> {
    /// Discontinuous signum.
    #[default]
    Signum,
    /// Boundary layer: clamp(x/ε, −1, 1).
    Saturated(T),
}

impl<T: Real> Switching<T> {
    pub fn from_epsilon(eps: Option<T>) -> Self {
        match eps {
            Some(e) if e > T::zero() => Self::Saturated(e),
            _ => Self::Signum,
        }
    }

    pub fn apply(self, v: Vec2<T>) -> Vec2<T> {
        match self {
            Self::Signum => sgn_vec(v),
            Self::Saturated(eps) => v.map(|x| (x / eps).max(-T::one()).min(T::one())),
        }
    }
}

/// Sign applied to the pinning term of the flocking observer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnchorSign {
    /// `+b_i (x̂_i − r)`: informed agents are pulled toward the reference.
    #[default]
    Attract,
    /// `−b_i (x̂_i − r)`: the sign as originally printed for the flocking observer.
    Literal,
}

impl AnchorSign {
    pub fn factor<T: Real>(self) -> T {
        match self {
            Self::Attract => T::one(),
            Self::Literal => -T::one(),
        }
    }
}

/// Which estimate the informed agents compare against the reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Anchor {
    /// Each informed agent uses its own estimate, with the given sign.
    Own(AnchorSign),
    /// Informed agents use the leader's (agent n) estimate with a plus sign.
    Leader,
}

/// Rate of one agent's estimate. `pinning` is the already signed term
/// `s·(x̂_anchor − r)` for informed agents and `None` otherwise.
pub fn local_rate<T: Real>(
    alpha: T,
    own: Vec2<T>,
    neighbor_estimates: impl IntoIterator<Item = Vec2<T>>,
    pinning: Option<Vec2<T>>,
    switching: Switching<T>,
) -> Vec2<T> {
    let mut arg: Vec2<T> = neighbor_estimates.into_iter().map(|xj| own - xj).sum();
    if let Some(p) = pinning {
        arg += p;
    }
    -switching.apply(arg) * alpha
}

/// Observer state for a whole team, expressed in one common frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ObserverBank<T> {
    pub estimates: Vec<Vec2<T>>,
    pub alpha: T,
    pub access: Vec<bool>,
}

impl<T: Real> ObserverBank<T> {
    pub fn new(estimates: Vec<Vec2<T>>, alpha: T, access: Vec<bool>) -> Result<Self> {
        if estimates.len() != access.len() {
            return Err(Error::LengthMismatch {
                what: "observer access flags",
                expected: estimates.len(),
                found: access.len(),
            });
        }
        if !(alpha > T::zero()) || !alpha.is_finite() {
            return Err(Error::NonFinite("observer gain (must be positive)"));
        }
        if estimates.iter().any(|e| !e.is_finite()) {
            return Err(Error::NonFinite("observer estimates"));
        }
        Ok(Self {
            estimates,
            alpha,
            access,
        })
    }

    /// Per-agent estimate rates. `references[i]` must be `Some` exactly where `b_i = 1`
    /// (extra references for uninformed agents are ignored).
    pub fn consensus_rates(
        &self,
        graph: &Graph,
        references: &[Option<Vec2<T>>],
        anchor: Anchor,
        switching: Switching<T>,
    ) -> Result<Vec<Vec2<T>>> {
        let n = self.estimates.len();
        if graph.node_count() != n || references.len() != n {
            return Err(Error::LengthMismatch {
                what: "observer references",
                expected: n,
                found: references.len().min(graph.node_count()),
            });
        }
        (0..n)
            .map(|i| {
                let own = self.estimates[i];
                let pinning = if self.access[i] {
                    let r = references[i].ok_or(Error::MissingReference(i + 1))?;
                    Some(match anchor {
                        Anchor::Own(sign) => (own - r) * sign.factor(),
                        Anchor::Leader => self.estimates[n - 1] - r,
                    })
                } else {
                    None
                };
                let neighbors = graph.neighbors(i + 1)?;
                Ok(local_rate(
                    self.alpha,
                    own,
                    neighbors.iter().map(|&j| self.estimates[j - 1]),
                    pinning,
                    switching,
                ))
            })
            .collect()
    }

    /// Euler update with the supplied rates.
    pub fn advance(&mut self, rates: &[Vec2<T>], dt: T) {
        for (x, &r) in self.estimates.iter_mut().zip(rates) {
            *x += r * dt;
        }
    }
}

/// 𝓜 = L + diag(b).
pub fn m_matrix<T: Real>(graph: &Graph, access: &[bool]) -> Matrix<T> {
    let mut m = graph.laplacian::<T>();
    for (i, &b) in access.iter().enumerate().take(graph.node_count()) {
        if b {
            m[(i, i)] = m[(i, i)] + T::one();
        }
    }
    m
}

/// Sliding-mode gain condition α > γ.
pub fn gain_check<T: Real>(alpha: T, gamma: T) -> bool {
    alpha > gamma
}
