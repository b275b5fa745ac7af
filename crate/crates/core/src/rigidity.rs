//! Planar frameworks: edge function, rigidity matrix, rank-based rigidity
//! certification, distance errors and shape diagnostics.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::graph::Graph;
use crate::linalg::Matrix;
use crate::scalar::Real;

/// Tolerance used when cross-checking stated target distances against positions.
pub const DISTANCE_CONSISTENCY_TOL: f64 = 1e-9;

/// A graph together with a planar position for each node.
#[derive(Debug, Clone, PartialEq)]
pub struct Framework<T> {
    graph: Graph,
    positions: Vec<Vec2<T>>,
}

impl<T: Real> Framework<T> {
    pub fn new(graph: Graph, positions: Vec<Vec2<T>>) -> Result<Self> {
        if positions.len() != graph.node_count() {
            return Err(Error::LengthMismatch {
                what: "framework positions",
                expected: graph.node_count(),
                found: positions.len(),
            });
        }
        if positions.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("framework positions"));
        }
        Ok(Self { graph, positions })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn positions(&self) -> &[Vec2<T>] {
        &self.positions
    }

    /// 1-based position lookup.
    pub fn position(&self, node: usize) -> Vec2<T> {
        self.positions[node - 1]
    }

    pub fn with_positions(&self, positions: Vec<Vec2<T>>) -> Result<Self> {
        Self::new(self.graph.clone(), positions)
    }

    pub fn translated(&self, offset: Vec2<T>) -> Self {
        Self {
            graph: self.graph.clone(),
            positions: self.positions.iter().map(|&p| p + offset).collect(),
        }
    }

    /// Rotation about the origin followed by a translation.
    pub fn transformed(&self, angle: T, offset: Vec2<T>) -> Self {
        Self {
            graph: self.graph.clone(),
            positions: self
                .positions
                .iter()
                .map(|&p| p.rotate(angle) + offset)
                .collect(),
        }
    }

    /// Squared edge lengths in canonical edge order.
    pub fn edge_function(&self) -> Vec<T> {
        self.graph
            .edges()
            .iter()
            .map(|e| (self.position(e.0) - self.position(e.1)).norm_squared())
            .collect()
    }

    /// The a × 2n rigidity matrix: half the Jacobian of the edge function.
    pub fn rigidity_matrix(&self) -> Matrix<T> {
        let n = self.graph.node_count();
        let mut r = Matrix::zeros(self.graph.edge_count(), 2 * n);
        for (k, e) in self.graph.edges().iter().enumerate() {
            let d = self.position(e.0) - self.position(e.1);
            let (ci, cj) = (2 * (e.0 - 1), 2 * (e.1 - 1));
            r[(k, ci)] = d.x;
            r[(k, ci + 1)] = d.y;
            r[(k, cj)] = -d.x;
            r[(k, cj + 1)] = -d.y;
        }
        r
    }

    /// Rigidity matrix with the leader's two columns zeroed. The leader must be node n.
    pub fn reduced_rigidity_matrix(&self, leader: usize) -> Result<Matrix<T>> {
        let n = self.graph.node_count();
        if leader != n {
            return Err(Error::LeaderNotLast { leader, n });
        }
        let mut r = self.rigidity_matrix();
        for k in 0..r.nrows() {
            r[(k, 2 * n - 2)] = T::zero();
            r[(k, 2 * n - 1)] = T::zero();
        }
        Ok(r)
    }

    pub fn rigidity_rank(&self, rel_tol: T) -> usize {
        self.rigidity_matrix().rank(rel_tol)
    }

    fn check_size(&self) -> Result<()> {
        let n = self.graph.node_count();
        if n < 3 {
            Err(Error::UnsupportedSize { n, min: 3 })
        } else {
            Ok(())
        }
    }

    /// Rank of the rigidity matrix equals 2n − 3.
    pub fn is_infinitesimally_rigid(&self, rel_tol: T) -> Result<bool> {
        self.check_size()?;
        Ok(self.rigidity_rank(rel_tol) == 2 * self.graph.node_count() - 3)
    }

    /// Infinitesimally rigid with exactly 2n − 3 edges.
    pub fn is_minimally_rigid(&self, rel_tol: T) -> Result<bool> {
        let rigid = self.is_infinitesimally_rigid(rel_tol)?;
        Ok(rigid && self.graph.edge_count() == 2 * self.graph.node_count() - 3)
    }

    pub fn rigidity_report(&self, rel_tol: T) -> Result<RigidityReport> {
        self.check_size()?;
        let n = self.graph.node_count();
        let a = self.graph.edge_count();
        let rank = self.rigidity_rank(rel_tol);
        let infinitesimally_rigid = rank == 2 * n - 3;
        Ok(RigidityReport {
            n,
            a,
            rank,
            infinitesimally_rigid,
            minimally_rigid: infinitesimally_rigid && a == 2 * n - 3,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RigidityReport {
    pub n: usize,
    pub a: usize,
    pub rank: usize,
    pub infinitesimally_rigid: bool,
    pub minimally_rigid: bool,
}

impl RigidityReport {
    pub fn passes(&self) -> bool {
        self.infinitesimally_rigid && self.minimally_rigid
    }
}

/// Desired framework F* plus its per-edge target distances.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetFormation<T> {
    framework: Framework<T>,
    distances: Vec<T>,
}

impl<T: Real> TargetFormation<T> {
    /// Takes distances from the positions and requires infinitesimal and minimal rigidity.
    pub fn new(framework: Framework<T>, rel_tol: T) -> Result<Self> {
        let distances = framework.edge_function().into_iter().map(T::sqrt).collect();
        Self::with_distances(framework, distances, rel_tol)
    }

    /// As [`TargetFormation::new`] but also cross-checks explicitly stated distances.
    pub fn with_distances(framework: Framework<T>, distances: Vec<T>, rel_tol: T) -> Result<Self> {
        let target = Self::unchecked(framework, distances)?;
        let report = target.framework.rigidity_report(rel_tol)?;
        if !report.infinitesimally_rigid || !report.minimally_rigid {
            return Err(Error::NotRigid(report));
        }
        Ok(target)
    }

    /// Skips the rigidity requirement; distances are still checked for consistency.
    pub fn unchecked(framework: Framework<T>, distances: Vec<T>) -> Result<Self> {
        let edges = framework.graph().edges();
        if distances.len() != edges.len() {
            return Err(Error::LengthMismatch {
                what: "target distances",
                expected: edges.len(),
                found: distances.len(),
            });
        }
        let actual = framework.edge_function();
        for ((e, &d), &sq) in edges.iter().zip(&distances).zip(&actual) {
            if !(d > T::zero()) {
                return Err(Error::NonPositiveDistance(e.0, e.1));
            }
            if (d - sq.sqrt()).abs() > T::of(DISTANCE_CONSISTENCY_TOL).max(T::epsilon() * T::of(16.0)) {
                return Err(Error::InconsistentDistance {
                    i: e.0,
                    j: e.1,
                    stated: d.to_f64_lossy(),
                    actual: sq.sqrt().to_f64_lossy(),
                });
            }
        }
        Ok(Self {
            framework,
            distances,
        })
    }

    pub fn framework(&self) -> &Framework<T> {
        &self.framework
    }

    pub fn graph(&self) -> &Graph {
        self.framework.graph()
    }

    pub fn distances(&self) -> &[T] {
        &self.distances
    }

    pub fn distance(&self, i: usize, j: usize) -> Option<T> {
        self.graph().edge_index(i, j).map(|k| self.distances[k])
    }

    /// z_k = ‖p_i − p_j‖² − d_k² for the given framework.
    pub fn distance_errors(&self, f: &Framework<T>) -> Result<Vec<T>> {
        if f.graph() != self.graph() {
            return Err(Error::GraphMismatch);
        }
        Ok(f
            .edge_function()
            .into_iter()
            .zip(&self.distances)
            .map(|(sq, &d)| sq - d * d)
            .collect())
    }

    /// Signed length errors e_k = ‖p_i − p_j‖ − d_k for raw positions.
    pub fn edge_length_errors(&self, positions: &[Vec2<T>]) -> Vec<T> {
        self.graph()
            .edges()
            .iter()
            .zip(&self.distances)
            .map(|(e, &d)| (positions[e.0 - 1] - positions[e.1 - 1]).norm() - d)
            .collect()
    }

    /// Root-mean-square distance from `positions` to the closest
    /// rotated and translated copy of the target positions.
    pub fn shape_distance(&self, positions: &[Vec2<T>]) -> Result<T> {
        let target = self.framework.positions();
        if positions.len() != target.len() {
            return Err(Error::LengthMismatch {
                what: "positions",
                expected: target.len(),
                found: positions.len(),
            });
        }
        Ok(aligned_rms(positions, target))
    }
}

/// Best proper rigid alignment of `model` onto `points`, returning the residual RMS.
pub(crate) fn aligned_rms<T: Real>(points: &[Vec2<T>], model: &[Vec2<T>]) -> T {
    let n = points.len();
    if n == 0 {
        return T::zero();
    }
    let nt = T::of(n as f64);
    let cp = points.iter().copied().sum::<Vec2<T>>() * (T::one() / nt);
    let cm = model.iter().copied().sum::<Vec2<T>>() * (T::one() / nt);
    let (mut dot, mut cross) = (T::zero(), T::zero());
    for (&p, &m) in points.iter().zip(model) {
        let (p, m) = (p - cp, m - cm);
        dot = dot + m.dot(p);
        cross = cross + m.cross(p);
    }
    let angle = cross.atan2(dot);
    let sum_sq = points
        .iter()
        .zip(model)
        .map(|(&p, &m)| ((p - cp) - (m - cm).rotate(angle)).norm_squared())
        .fold(T::zero(), |a, b| a + b);
    (sum_sq / nt).sqrt()
}
