#![allow(dead_code)]

use std::f64::consts::PI;
use std::path::PathBuf;

use nalgebra::DMatrix;
use rigidflock::scenario::Scenario;
use rigidflock::{load_scenario, Framework, Graph, Matrix, Vec2};

pub const PENTAGON_EDGES: [(usize, usize); 7] = [(1, 2), (1, 3), (1, 4), (1, 5), (2, 3), (3, 4), (4, 5)];

/// Circumradius-0.1 pentagon, vertex k at angle π/2 + 2π(k−1)/5.
pub fn pentagon_positions() -> Vec<Vec2> {
    (0..5)
        .map(|k| Vec2::from_angle(PI / 2.0 + 2.0 * PI * k as f64 / 5.0) * 0.1)
        .collect()
}

pub fn pentagon() -> Framework {
    Framework::new(Graph::new(5, PENTAGON_EDGES).unwrap(), pentagon_positions()).unwrap()
}

pub fn to_na(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

pub fn eigenvalues(m: &Matrix) -> Vec<f64> {
    let mut ev: Vec<f64> = to_na(m).symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Reference singular values, descending.
pub fn oracle_singular_values(m: &Matrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut sv: Vec<f64> = to_na(m).svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

pub fn oracle_rank(m: &Matrix, rel_tol: f64) -> usize {
    let sv = oracle_singular_values(m);
    let top = sv.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * top).count()
}

/// Graph from an edge mask over all pairs (i < j) in lexicographic order.
pub fn graph_from_mask(n: usize, mask: &[bool]) -> Graph {
    let pairs = (1..=n)
        .flat_map(|i| (i + 1..=n).map(move |j| (i, j)))
        .zip(mask)
        .filter(|(_, &keep)| keep)
        .map(|(p, _)| p);
    Graph::new(n, pairs).unwrap()
}

pub fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

pub fn bundled(name: &str) -> Scenario {
    load_scenario(scenario_path(name)).unwrap()
}
