//! Scenario files: JSON schema, loading and load-time validation.
//!
//! Field names carry their SI unit (`dt_s`, `radius_m`, ...). Hard
//! violations are reported with a JSON pointer to the offending field;
//! observer-gain bound violations are warnings only.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Vec2;
use crate::graph::Graph;
use crate::interception::{convex_hull_contains, InterceptionGains};
use crate::flocking::FlockingGains;
use crate::observers::{gain_check, AnchorSign, Switching};
use crate::rigidity::{Framework, RigidityReport, TargetFormation};
use crate::scalar::Real;
use crate::simulator::{AccelSource, Estimates, SimConfig, Simulation, Task, WorldState};
use crate::trajectory::{TargetPath, VelocityProfile};
use crate::unicycle::Pose;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed scenario: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid scenario at {pointer}: {message}")]
    Invalid { pointer: String, message: String },
}

fn invalid(pointer: &str, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid {
        pointer: pointer.to_owned(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Flock,
    Intercept,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    pub n: usize,
    pub edges: Vec<[usize; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormationSpec {
    pub graph: GraphSpec,
    pub positions: Vec<[f64; 2]>,
    /// Per-edge target distances in canonical edge order; recomputed from
    /// the positions and cross-checked when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distances: Option<Vec<f64>>,
}

impl FormationSpec {
    pub fn graph(&self) -> Result<Graph, ScenarioError> {
        Graph::new(self.graph.n, self.graph.edges.iter().map(|e| (e[0], e[1])))
            .map_err(|e| invalid("/formation/graph/edges", e.to_string()))
    }

    pub fn framework<T: Real>(&self) -> Result<Framework<T>, ScenarioError> {
        let positions = self
            .positions
            .iter()
            .map(|p| Vec2::new(T::of(p[0]), T::of(p[1])))
            .collect();
        Framework::new(self.graph()?, positions)
            .map_err(|e| invalid("/formation/positions", e.to_string()))
    }

    pub fn rigidity_report(&self, rel_tol: f64) -> Result<RigidityReport, ScenarioError> {
        self.framework::<f64>()?
            .rigidity_report(rel_tol)
            .map_err(|e| invalid("/formation/graph/n", e.to_string()))
    }
}

/// Either one value for every agent or one per agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerAgent {
    Uniform(f64),
    Each(Vec<f64>),
}

impl PerAgent {
    pub fn expand(&self, n: usize) -> Option<Vec<f64>> {
        match self {
            Self::Uniform(x) => Some(vec![*x; n]),
            Self::Each(v) if v.len() == n => Some(v.clone()),
            Self::Each(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainSpec {
    pub k_a: f64,
    pub c: PerAgent,
    /// Flocking observer gain α.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, rename = "k_T", skip_serializing_if = "Option::is_none")]
    pub k_t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha2: Option<f64>,
    /// Overrides the bound derived from the flocking-velocity profile.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_0: Option<f64>,
    #[serde(default, rename = "gamma_T1", skip_serializing_if = "Option::is_none")]
    pub gamma_t1: Option<f64>,
    #[serde(default, rename = "gamma_T2", skip_serializing_if = "Option::is_none")]
    pub gamma_t2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    /// Poses as [x_m, y_m, theta_rad].
    Explicit { poses: Vec<[f64; 3]> },
    /// Target positions plus an offset and a uniform random displacement in a
    /// disk of the given radius; headings uniform on (−π, π].
    Perturbed {
        seed: u64,
        perturbation_radius_m: f64,
        #[serde(default)]
        offset_m: [f64; 2],
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeaderAccel {
    #[default]
    Analytic,
    FiniteDifference,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObserverSpec {
    /// v̂_f (flocking) or v̂_T (interception) at t = 0, world frame; zeros when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_velocity_estimates_mps: Option<Vec<[f64; 2]>>,
    /// ê_T at t = 0 (interception only); zeros when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_error_estimates_m: Option<Vec<[f64; 2]>>,
    /// Boundary-layer width replacing sgn(x) by clamp(x/ε, −1, 1). Off when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub smoothing_epsilon: Option<f64>,
    #[serde(default)]
    pub flocking_anchor_sign: AnchorSign,
    #[serde(default)]
    pub leader_accel: LeaderAccel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegrationSpec {
    #[serde(default = "default_dt")]
    pub dt_s: f64,
    pub duration_s: f64,
    #[serde(default = "default_sample_every")]
    pub sample_every: usize,
    /// Metrics are also reported over t ≥ settle_time_s.
    #[serde(default = "default_settle")]
    pub settle_time_s: f64,
}

fn default_dt() -> f64 {
    1e-3
}

fn default_sample_every() -> usize {
    10
}

fn default_settle() -> f64 {
    20.0
}

/// The on-disk scenario document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Free text copied into summary.json.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
    pub mode: Mode,
    pub formation: FormationSpec,
    pub initial: InitialSpec,
    pub gains: GainSpec,
    /// Agents with access to v₀ (flocking), 1-based.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub informed_agents: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flocking_velocity: Option<VelocityProfile>,
    /// Interception leader; must be the last agent when given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leader: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<TargetPath>,
    #[serde(default)]
    pub observer: ObserverSpec,
    pub integration: IntegrationSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank_tol: Option<f64>,
}

/// Observer gains next to the bounds they are checked against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GainBound {
    pub name: &'static str,
    pub gain: f64,
    pub bound: f64,
    pub satisfied: bool,
}

/// A validated scenario with resolved initial conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub file: ScenarioFile,
    pub formation: TargetFormation<f64>,
    pub initial_poses: Vec<Pose<f64>>,
    pub initial_estimates: Vec<Estimates<f64>>,
    pub heading_gains: Vec<f64>,
    pub gain_bounds: Vec<GainBound>,
    pub warnings: Vec<String>,
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.to_owned(),
        source,
    })?;
    Scenario::from_json(&text)
}

fn require_positive(pointer: &str, x: f64) -> Result<f64, ScenarioError> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(invalid(pointer, format!("must be a positive finite number, got {x}")))
    }
}

fn require<T: Clone>(pointer: &str, x: &Option<T>) -> Result<T, ScenarioError> {
    x.clone()
        .ok_or_else(|| invalid(pointer, "required for this mode"))
}

fn vec2(a: [f64; 2]) -> Vec2<f64> {
    Vec2::new(a[0], a[1])
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let file: ScenarioFile = serde_json::from_str(text)?;
        Self::validate(file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.file).expect("scenario serializes")
    }

    pub fn n(&self) -> usize {
        self.file.formation.graph.n
    }

    pub fn rank_tol(&self) -> f64 {
        self.file.rank_tol.unwrap_or(f64::RANK_TOL)
    }

    pub fn seed(&self) -> Option<u64> {
        match self.file.initial {
            InitialSpec::Perturbed { seed, .. } => Some(seed),
            InitialSpec::Explicit { .. } => None,
        }
    }

    pub fn validate(file: ScenarioFile) -> Result<Self, ScenarioError> {
        let mut warnings = Vec::new();
        let n = file.formation.graph.n;
        if n < 3 {
            return Err(invalid("/formation/graph/n", "formations need at least 3 agents"));
        }
        let rank_tol = match file.rank_tol {
            Some(t) => require_positive("/rank_tol", t)?,
            None => f64::RANK_TOL,
        };

        let framework = file.formation.framework::<f64>()?;
        if file.formation.positions.len() != n {
            return Err(invalid(
                "/formation/positions",
                format!("expected {n} positions, got {}", file.formation.positions.len()),
            ));
        }
        let distances = match &file.formation.distances {
            Some(d) => d.clone(),
            None => framework.edge_function().into_iter().map(f64::sqrt).collect(),
        };
        let formation = TargetFormation::unchecked(framework.clone(), distances)
            .map_err(|e| invalid("/formation/distances", e.to_string()))?;
        let report = framework
            .rigidity_report(rank_tol)
            .map_err(|e| invalid("/formation", e.to_string()))?;
        if !report.passes() {
            return Err(invalid(
                "/formation",
                format!(
                    "target framework must be infinitesimally and minimally rigid \
                     (n = {}, a = {}, rank = {}, required rank = {})",
                    report.n,
                    report.a,
                    report.rank,
                    2 * n - 3
                ),
            ));
        }
        if !framework.graph().is_connected() {
            return Err(invalid("/formation/graph", "graph must be connected"));
        }

        let g = &file.gains;
        require_positive("/gains/k_a", g.k_a)?;
        let heading_gains = g
            .c
            .expand(n)
            .ok_or_else(|| invalid("/gains/c", format!("expected a scalar or {n} values")))?;
        for (k, &c) in heading_gains.iter().enumerate() {
            let ptr = match g.c {
                PerAgent::Uniform(_) => "/gains/c".to_owned(),
                PerAgent::Each(_) => format!("/gains/c/{k}"),
            };
            require_positive(&ptr, c)?;
        }

        let it = &file.integration;
        require_positive("/integration/dt_s", it.dt_s)?;
        if !(it.duration_s >= 0.0) || !it.duration_s.is_finite() {
            return Err(invalid("/integration/duration_s", "must be finite and non-negative"));
        }
        if it.sample_every == 0 {
            return Err(invalid("/integration/sample_every", "must be at least 1"));
        }
        if !(it.settle_time_s >= 0.0) {
            return Err(invalid("/integration/settle_time_s", "must be non-negative"));
        }
        let c_max = heading_gains.iter().copied().fold(0.0, f64::max);
        if it.dt_s * c_max >= 1.0 {
            return Err(invalid(
                "/integration/dt_s",
                format!("dt_s * max(c) = {} must be below 1", it.dt_s * c_max),
            ));
        }
        if let Some(eps) = file.observer.smoothing_epsilon {
            require_positive("/observer/smoothing_epsilon", eps)?;
        }

        let initial_poses = resolve_initial(&file.initial, &formation, n)?;

        let mut gain_bounds = Vec::new();
        let mut velocity_estimates = match &file.observer.initial_velocity_estimates_mps {
            Some(v) if v.len() != n => {
                return Err(invalid(
                    "/observer/initial_velocity_estimates_mps",
                    format!("expected {n} entries"),
                ))
            }
            Some(v) => v.iter().copied().map(vec2).collect(),
            None => vec![Vec2::zero(); n],
        };
        let error_estimates: Vec<Vec2<f64>> = match &file.observer.initial_error_estimates_m {
            Some(v) if v.len() != n => {
                return Err(invalid(
                    "/observer/initial_error_estimates_m",
                    format!("expected {n} entries"),
                ))
            }
            Some(v) => v.iter().copied().map(vec2).collect(),
            None => vec![Vec2::zero(); n],
        };

        match file.mode {
            Mode::Flock => {
                let alpha = require_positive("/gains/alpha", require("/gains/alpha", &g.alpha)?)?;
                let profile = require("/flocking_velocity", &file.flocking_velocity)?;
                let informed = require("/informed_agents", &file.informed_agents)?;
                if informed.is_empty() {
                    return Err(invalid(
                        "/informed_agents",
                        "at least one agent must know the flocking velocity",
                    ));
                }
                if let Some((k, &a)) = informed.iter().enumerate().find(|(_, &a)| a == 0 || a > n) {
                    return Err(invalid(
                        &format!("/informed_agents/{k}"),
                        format!("agent {a} out of range 1..={n}"),
                    ));
                }
                let gamma = match g.gamma_0 {
                    Some(x) => x,
                    None => profile.gamma_bound(),
                };
                gain_bounds.push(GainBound {
                    name: "alpha > gamma_0",
                    gain: alpha,
                    bound: gamma,
                    satisfied: gain_check(alpha, gamma),
                });
            }
            Mode::Intercept => {
                if let Some(l) = file.leader {
                    if l != n {
                        return Err(invalid(
                            "/leader",
                            format!("the leader must be agent {n} (the last agent), got {l}"),
                        ));
                    }
                }
                let k_t = require_positive("/gains/k_T", require("/gains/k_T", &g.k_t)?)?;
                let alpha1 = require_positive("/gains/alpha1", require("/gains/alpha1", &g.alpha1)?)?;
                let alpha2 = require_positive("/gains/alpha2", require("/gains/alpha2", &g.alpha2)?)?;
                let target = require("/target", &file.target)?;
                if let TargetPath::Waypoints { points_m, .. } = &target {
                    if points_m.is_empty() {
                        return Err(invalid("/target/points_m", "needs at least one point"));
                    }
                }
                let desired = formation.framework().positions();
                let inside = convex_hull_contains(&desired[..n - 1], desired[n - 1], 1e-9)
                    .map_err(|e| invalid("/formation/positions", e.to_string()))?;
                if !inside {
                    return Err(invalid(
                        "/formation/positions",
                        format!("leader (agent {n}) must lie in the convex hull of the followers' desired positions"),
                    ));
                }
                let t0 = target.state::<f64>(0.0);
                let leader_v = t0.v;
                match &file.observer.initial_velocity_estimates_mps {
                    Some(v) if (vec2(v[n - 1]) - leader_v).norm() > 1e-12 => {
                        return Err(invalid(
                            &format!("/observer/initial_velocity_estimates_mps/{}", n - 1),
                            "the leader's target-velocity estimate must start at v_T(0)",
                        ));
                    }
                    _ => velocity_estimates[n - 1] = leader_v,
                }
                let gamma_t1 = g.gamma_t1.unwrap_or_else(|| target.sup_acceleration());
                let e0 = (t0.p - initial_poses[n - 1].position()).norm();
                let gamma_t2 = g
                    .gamma_t2
                    .unwrap_or_else(|| 2.0 * target.sup_speed() + k_t * e0);
                gain_bounds.push(GainBound {
                    name: "alpha1 > gamma_T1",
                    gain: alpha1,
                    bound: gamma_t1,
                    satisfied: gain_check(alpha1, gamma_t1),
                });
                gain_bounds.push(GainBound {
                    name: "alpha2 > gamma_T2",
                    gain: alpha2,
                    bound: gamma_t2,
                    satisfied: gain_check(alpha2, gamma_t2),
                });
            }
        }
        for b in gain_bounds.iter().filter(|b| !b.satisfied) {
            warnings.push(format!(
                "observer gain condition {} violated ({} <= {})",
                b.name, b.gain, b.bound
            ));
        }
        let initial_estimates = velocity_estimates
            .into_iter()
            .zip(error_estimates)
            .map(|(velocity, error)| Estimates { velocity, error })
            .collect();

        Ok(Self {
            file,
            formation,
            initial_poses,
            initial_estimates,
            heading_gains,
            gain_bounds,
            warnings,
        })
    }

    /// Re-validates with command-line overrides applied.
    pub fn with_overrides(
        &self,
        duration_s: Option<f64>,
        dt_s: Option<f64>,
        seed: Option<u64>,
    ) -> Result<Self, ScenarioError> {
        let mut file = self.file.clone();
        if let Some(d) = duration_s {
            file.integration.duration_s = d;
        }
        if let Some(dt) = dt_s {
            file.integration.dt_s = dt;
        }
        if let Some(s) = seed {
            match &mut file.initial {
                InitialSpec::Perturbed { seed, .. } => *seed = s,
                InitialSpec::Explicit { .. } => {
                    return Err(invalid("/initial", "--seed needs a perturbed initial condition"))
                }
            }
        }
        Self::validate(file)
    }

    pub fn config<T: Real>(&self) -> SimConfig<T> {
        let f = &self.file;
        let n = self.n();
        let c: Vec<T> = self.heading_gains.iter().map(|&x| T::of(x)).collect();
        let formation = TargetFormation::unchecked(
            f.formation.framework::<T>().expect("validated formation"),
            self.formation.distances().iter().map(|&d| T::of(d)).collect(),
        )
        .expect("validated formation");
        let task = match f.mode {
            Mode::Flock => {
                let mut informed = vec![false; n];
                for &a in f.informed_agents.as_deref().unwrap_or_default() {
                    informed[a - 1] = true;
                }
                Task::Flock {
                    gains: FlockingGains::new(T::of(f.gains.k_a), c, T::of(f.gains.alpha.unwrap_or(0.0)))
                        .expect("validated gains"),
                    reference: f.flocking_velocity.clone().expect("validated"),
                    informed,
                    anchor: f.observer.flocking_anchor_sign,
                }
            }
            Mode::Intercept => {
                let bound = |name: &str| {
                    self.gain_bounds
                        .iter()
                        .find(|b| b.name.starts_with(name))
                        .map_or(0.0, |b| b.bound)
                };
                Task::Intercept {
                    gains: InterceptionGains {
                        k_a: T::of(f.gains.k_a),
                        k_t: T::of(f.gains.k_t.unwrap_or(0.0)),
                        c,
                        alpha1: T::of(f.gains.alpha1.unwrap_or(0.0)),
                        alpha2: T::of(f.gains.alpha2.unwrap_or(0.0)),
                        gamma_t1: T::of(bound("alpha1")),
                        gamma_t2: T::of(bound("alpha2")),
                    },
                    target: f.target.clone().expect("validated"),
                    accel: match f.observer.leader_accel {
                        LeaderAccel::Analytic => AccelSource::Analytic,
                        LeaderAccel::FiniteDifference => AccelSource::FiniteDifference,
                    },
                }
            }
        };
        SimConfig {
            formation,
            task,
            switching: Switching::from_epsilon(f.observer.smoothing_epsilon.map(T::of)),
            dt: T::of(f.integration.dt_s),
            duration: T::of(f.integration.duration_s),
            sample_every: f.integration.sample_every,
        }
    }

    pub fn initial_world<T: Real>(&self) -> WorldState<T> {
        let poses = self
            .initial_poses
            .iter()
            .map(|p| Pose::new(T::of(p.x), T::of(p.y), T::of(p.theta)))
            .collect();
        let estimates = self
            .initial_estimates
            .iter()
            .map(|e| Estimates {
                velocity: e.velocity.cast(),
                error: e.error.cast(),
            })
            .collect();
        WorldState::new(poses, estimates).expect("validated initial conditions")
    }

    pub fn simulation<T: Real>(&self) -> Simulation<T> {
        Simulation::new(self.config(), self.initial_world())
            .expect("validated scenario")
            .with_seed(self.seed())
    }
}

fn resolve_initial(
    spec: &InitialSpec,
    formation: &TargetFormation<f64>,
    n: usize,
) -> Result<Vec<Pose<f64>>, ScenarioError> {
    match spec {
        InitialSpec::Explicit { poses } => {
            if poses.len() != n {
                return Err(invalid("/initial/poses", format!("expected {n} poses")));
            }
            if let Some(k) = poses.iter().position(|p| p.iter().any(|x| !x.is_finite())) {
                return Err(invalid(&format!("/initial/poses/{k}"), "non-finite pose"));
            }
            Ok(poses.iter().map(|p| Pose::new(p[0], p[1], p[2])).collect())
        }
        InitialSpec::Perturbed {
            seed,
            perturbation_radius_m,
            offset_m,
        } => {
            if !(*perturbation_radius_m >= 0.0) || !perturbation_radius_m.is_finite() {
                return Err(invalid(
                    "/initial/perturbation_radius_m",
                    "must be finite and non-negative",
                ));
            }
            Ok(perturbed_poses(formation, *seed, *perturbation_radius_m, vec2(*offset_m)))
        }
    }
}

/// Seeded random initial poses around the target formation.
pub fn perturbed_poses(
    formation: &TargetFormation<f64>,
    seed: u64,
    radius: f64,
    offset: Vec2<f64>,
) -> Vec<Pose<f64>> {
    use std::f64::consts::PI;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    formation
        .framework()
        .positions()
        .iter()
        .map(|&p| {
            let r = radius * rng.random::<f64>().sqrt();
            let phi = 2.0 * PI * rng.random::<f64>();
            let theta = PI - 2.0 * PI * rng.random::<f64>();
            let q = p + offset + Vec2::from_angle(phi) * r;
            Pose::new(q.x, q.y, theta)
        })
        .collect()
}
