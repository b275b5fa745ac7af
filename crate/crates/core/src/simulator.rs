//! Synchronous, deterministic closed-loop simulation.
//!
//! Each step freezes the world, builds every agent's [`Measurement`] from
//! ground truth, and evaluates the controllers in two passes:
//!
//! 1. every agent computes its observer rates, virtual input `u_i`, desired
//!    heading and heading error from its own measurement;
//! 2. every agent receives `B(θ̃_j)u_j` from its neighbors over the
//!    communication channel and finishes `u̇_i`, `θ̇_d` and `(v_i, ω_i)`.
//!
//! Agents work in their own body frame throughout. Poses and observer states
//! are then advanced with explicit Euler.

use log::debug;

use crate::error::{Error, Result};
use crate::flocking::{
    control_u, desired_heading, desired_heading_rate, u_dot, velocity_command, ControlIntermediates,
    EdgeTerm, FlockingGains,
};
use crate::geometry::Vec2;
use crate::interception::{
    convex_hull_contains, follower_u, follower_u_dot, interception_error, interception_error_rate,
    leader_u, leader_u_dot, InterceptionGains, TargetState,
};
use crate::observers::{local_rate, AnchorSign, Switching};
use crate::rigidity::TargetFormation;
use crate::scalar::Real;
use crate::trajectory::{TargetPath, VelocityProfile};
use crate::unicycle::{self, b_matrix, wrap_angle, Pose, VelocityCommand};

/// Coordinates beyond this magnitude (m) count as divergence.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

/// Tolerance (m) of the target-in-hull test recorded in the metrics.
pub const HULL_TOL: f64 = 1e-9;

/// How the leader obtains the target acceleration a_T.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AccelSource {
    #[default]
    Analytic,
    /// Backward difference of v_T over one step.
    FiniteDifference,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Task<T> {
    Flock {
        gains: FlockingGains<T>,
        reference: VelocityProfile,
        /// b_i per agent.
        informed: Vec<bool>,
        anchor: AnchorSign,
    },
    Intercept {
        gains: InterceptionGains<T>,
        target: TargetPath,
        accel: AccelSource,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskKind {
    Flock,
    Intercept,
}

impl<T> Task<T> {
    pub fn kind(&self) -> TaskKind {
        match self {
            Self::Flock { .. } => TaskKind::Flock,
            Self::Intercept { .. } => TaskKind::Intercept,
        }
    }
}

impl<T: Real> Task<T> {
    fn heading_gain(&self, agent: usize) -> T {
        match self {
            Self::Flock { gains, .. } => gains.c[agent - 1],
            Self::Intercept { gains, .. } => gains.c[agent - 1],
        }
    }

    /// v₀(t) when flocking, v_T(t) when intercepting.
    pub fn reference_velocity(&self, t: T) -> Vec2<T> {
        match self {
            Self::Flock { reference, .. } => reference.velocity(t),
            Self::Intercept { target, .. } => target.state(t).v,
        }
    }

    pub fn target_state(&self, t: T) -> Option<TargetState<T>> {
        match self {
            Self::Flock { .. } => None,
            Self::Intercept { target, .. } => Some(target.state(t)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig<T> {
    pub formation: TargetFormation<T>,
    pub task: Task<T>,
    pub switching: Switching<T>,
    pub dt: T,
    pub duration: T,
    pub sample_every: usize,
}

impl<T: Real> SimConfig<T> {
    pub fn n(&self) -> usize {
        self.formation.graph().node_count()
    }

    pub fn step_count(&self) -> usize {
        (self.duration / self.dt).round().to_usize().unwrap_or(0)
    }
}

/// Observer estimates held by one agent. In flocking mode `velocity` is v̂_f
/// and `error` is unused; when intercepting they are v̂_T and ê_T.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Estimates<T> {
    pub velocity: Vec2<T>,
    pub error: Vec2<T>,
}

impl<T: Real> Estimates<T> {
    fn rotated(self, angle: T) -> Self {
        Self {
            velocity: self.velocity.rotate(angle),
            error: self.error.rotate(angle),
        }
    }

    fn is_finite(&self) -> bool {
        self.velocity.is_finite() && self.error.is_finite()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorldState<T> {
    pub step: u64,
    pub time: T,
    pub poses: Vec<Pose<T>>,
    /// World-frame observer states.
    pub estimates: Vec<Estimates<T>>,
}

impl<T: Real> WorldState<T> {
    pub fn new(poses: Vec<Pose<T>>, estimates: Vec<Estimates<T>>) -> Result<Self> {
        if poses.len() != estimates.len() {
            return Err(Error::LengthMismatch {
                what: "initial estimates",
                expected: poses.len(),
                found: estimates.len(),
            });
        }
        if poses.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("initial poses"));
        }
        Ok(Self {
            step: 0,
            time: T::zero(),
            poses,
            estimates,
        })
    }

    pub fn positions(&self) -> Vec<Vec2<T>> {
        self.poses.iter().map(Pose::position).collect()
    }
}

/// What one neighbor looks like from agent i, in agent i's body frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighborReading<T> {
    pub id: usize,
    /// p_i − p_j
    pub rel_position: Vec2<T>,
    /// θ_i − θ_j
    pub rel_heading: T,
    pub desired_distance: T,
    /// Communicated estimates of agent j.
    pub estimates: Estimates<T>,
}

/// Signals only informed agents see, in the agent's body frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Privileged<T> {
    FlockingVelocity(Vec2<T>),
    Target {
        e_t: Vec2<T>,
        v_t: Vec2<T>,
        a_t: Vec2<T>,
    },
}

/// All information agent i may use in one step.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement<T> {
    pub agent: usize,
    /// Team size; the leader of an interception team is agent `n`.
    pub n: usize,
    pub own: Estimates<T>,
    pub neighbors: Vec<NeighborReading<T>>,
    pub privileged: Option<Privileged<T>>,
}

/// First-pass result of one agent, in its body frame.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalPlan<T> {
    pub u: Vec2<T>,
    pub theta_id: T,
    pub theta_err: T,
    /// B(θ̃_i)u_i: the planar velocity this agent is about to realize.
    pub realized_velocity: Vec2<T>,
    pub observer_rates: Estimates<T>,
    /// Feedforward part of u̇_i.
    feed_rate: Vec2<T>,
    /// Leader only: u̇_n is fully determined in the first pass.
    u_dot_override: Option<Vec2<T>>,
    terms: Vec<EdgeTerm<T>>,
}

/// Per-agent output of one evaluation, world frame.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AgentOutput<T> {
    pub command: VelocityCommand<T>,
    pub control: ControlIntermediates<T>,
    pub observer_rates: Estimates<T>,
}

pub fn measure<T: Real>(world: &WorldState<T>, agent: usize, config: &SimConfig<T>) -> Measurement<T> {
    let graph = config.formation.graph();
    let pose = world.poses[agent - 1];
    let to_body = -pose.theta;
    let neighbors = graph
        .neighbors(agent)
        .expect("agent index validated by caller")
        .into_iter()
        .map(|j| {
            let other = world.poses[j - 1];
            NeighborReading {
                id: j,
                rel_position: (pose.position() - other.position()).rotate(to_body),
                rel_heading: wrap_angle(pose.theta - other.theta),
                desired_distance: config
                    .formation
                    .distance(agent, j)
                    .expect("neighbors share an edge"),
                estimates: world.estimates[j - 1].rotated(to_body),
            }
        })
        .collect();
    let privileged = match &config.task {
        Task::Flock {
            reference, informed, ..
        } => informed[agent - 1]
            .then(|| Privileged::FlockingVelocity(reference.velocity(world.time).rotate(to_body))),
        Task::Intercept { target, accel, .. } => (agent == config.n()).then(|| {
            let s = target.state(world.time);
            let a_t = match accel {
                AccelSource::Analytic => s.a,
                AccelSource::FiniteDifference => {
                    let prev = target.state(world.time - config.dt).v;
                    (s.v - prev) * (T::one() / config.dt)
                }
            };
            Privileged::Target {
                e_t: interception_error(s.p, pose.position()).rotate(to_body),
                v_t: s.v.rotate(to_body),
                a_t: a_t.rotate(to_body),
            }
        }),
    };
    Measurement {
        agent,
        n: config.n(),
        own: world.estimates[agent - 1].rotated(to_body),
        neighbors,
        privileged,
    }
}

fn heading_pair<T: Real>(u: Vec2<T>) -> (T, T) {
    let theta_id = desired_heading(u);
    // In the body frame the agent's own heading is zero.
    (theta_id, wrap_angle(-theta_id))
}

/// Pass 1: observer rates, u_i, θ_d and θ̃ from the agent's own measurement.
pub fn plan<T: Real>(m: &Measurement<T>, task: &Task<T>, switching: Switching<T>) -> LocalPlan<T> {
    let terms: Vec<EdgeTerm<T>> = m
        .neighbors
        .iter()
        .map(|nb| EdgeTerm::new(nb.rel_position, nb.desired_distance))
        .collect();
    match task {
        Task::Flock { gains, anchor, .. } => {
            let pinning = match m.privileged {
                Some(Privileged::FlockingVelocity(v0)) => Some((m.own.velocity - v0) * anchor.factor()),
                _ => None,
            };
            let rate = local_rate(
                gains.alpha,
                m.own.velocity,
                m.neighbors.iter().map(|nb| nb.estimates.velocity),
                pinning,
                switching,
            );
            let u = control_u(&terms, m.own.velocity, gains.k_a);
            let (theta_id, theta_err) = heading_pair(u);
            LocalPlan {
                u,
                theta_id,
                theta_err,
                realized_velocity: b_matrix(theta_err) * u,
                observer_rates: Estimates {
                    velocity: rate,
                    error: Vec2::zero(),
                },
                feed_rate: rate,
                u_dot_override: None,
                terms,
            }
        }
        Task::Intercept { gains, .. } => {
            let target = match m.privileged {
                Some(Privileged::Target { e_t, v_t, a_t }) => Some((e_t, v_t, a_t)),
                _ => None,
            };
            let v_rate = local_rate(
                gains.alpha1,
                m.own.velocity,
                m.neighbors.iter().map(|nb| nb.estimates.velocity),
                target.map(|(_, v_t, _)| m.own.velocity - v_t),
                switching,
            );
            let e_rate = local_rate(
                gains.alpha2,
                m.own.error,
                m.neighbors.iter().map(|nb| nb.estimates.error),
                target.map(|(e_t, _, _)| m.own.error - e_t),
                switching,
            );
            let observer_rates = Estimates {
                velocity: v_rate,
                error: e_rate,
            };
            match target {
                Some((e_t, v_t, a_t)) => {
                    let u = leader_u(e_t, v_t, gains.k_t);
                    let (theta_id, theta_err) = heading_pair(u);
                    let e_dot = interception_error_rate(e_t, v_t, theta_err, gains.k_t);
                    LocalPlan {
                        u,
                        theta_id,
                        theta_err,
                        realized_velocity: b_matrix(theta_err) * u,
                        observer_rates,
                        feed_rate: Vec2::zero(),
                        u_dot_override: Some(leader_u_dot(e_dot, a_t, gains.k_t)),
                        terms,
                    }
                }
                None => {
                    let u = follower_u(
                        m.agent,
                        m.n,
                        &terms,
                        m.own.error,
                        m.own.velocity,
                        gains.k_a,
                        gains.k_t,
                    )
                    .expect("follower index below leader");
                    let (theta_id, theta_err) = heading_pair(u);
                    LocalPlan {
                        u,
                        theta_id,
                        theta_err,
                        realized_velocity: b_matrix(theta_err) * u,
                        observer_rates,
                        feed_rate: e_rate * gains.k_t + v_rate,
                        u_dot_override: None,
                        terms,
                    }
                }
            }
        }
    }
}

/// Pass 2: completes u̇_i, θ̇_d and the command. `neighbor_velocities[k]` is
/// B(θ̃_j)u_j as sent by neighbor `m.neighbors[k]`, in that neighbor's own frame.
pub fn finish<T: Real>(
    m: &Measurement<T>,
    plan: &LocalPlan<T>,
    neighbor_velocities: &[Vec2<T>],
    task: &Task<T>,
) -> (VelocityCommand<T>, ControlIntermediates<T>) {
    let k_a = match task {
        Task::Flock { gains, .. } => gains.k_a,
        Task::Intercept { gains, .. } => gains.k_a,
    };
    let u_dot_i = match plan.u_dot_override {
        Some(ud) => ud,
        None => {
            let in_own_frame: Vec<Vec2<T>> = m
                .neighbors
                .iter()
                .zip(neighbor_velocities)
                .map(|(nb, &w)| w.rotate(-nb.rel_heading))
                .collect();
            match task {
                Task::Flock { .. } => u_dot(&plan.terms, plan.realized_velocity, &in_own_frame, plan.feed_rate, k_a),
                Task::Intercept { gains, .. } => {
                    follower_u_dot(
                        m.agent,
                        m.n,
                        &plan.terms,
                        plan.realized_velocity,
                        &in_own_frame,
                        plan.observer_rates.error,
                        plan.observer_rates.velocity,
                        k_a,
                        gains.k_t,
                    )
                    .expect("follower index below leader")
                }
            }
        }
    };
    let theta_id_dot = desired_heading_rate(plan.u, u_dot_i);
    let c = task.heading_gain(m.agent);
    let (cmd, theta_err) = velocity_command(plan.u, T::zero(), plan.theta_id, theta_id_dot, c);
    (
        cmd,
        ControlIntermediates {
            u: plan.u,
            u_dot: u_dot_i,
            theta_id: plan.theta_id,
            theta_id_dot,
            theta_err,
        },
    )
}

/// Runs both control passes on a frozen world and returns world-frame outputs.
pub fn evaluate<T: Real>(world: &WorldState<T>, config: &SimConfig<T>) -> Vec<AgentOutput<T>> {
    let n = config.n();
    let measurements: Vec<Measurement<T>> = (1..=n).map(|i| measure(world, i, config)).collect();
    let plans: Vec<LocalPlan<T>> = measurements
        .iter()
        .map(|m| plan(m, &config.task, config.switching))
        .collect();
    measurements
        .iter()
        .zip(&plans)
        .map(|(m, p)| {
            let inbox: Vec<Vec2<T>> = m
                .neighbors
                .iter()
                .map(|nb| plans[nb.id - 1].realized_velocity)
                .collect();
            let (command, body) = finish(m, p, &inbox, &config.task);
            let theta = world.poses[m.agent - 1].theta;
            AgentOutput {
                command,
                control: ControlIntermediates {
                    u: body.u.rotate(theta),
                    u_dot: body.u_dot.rotate(theta),
                    theta_id: wrap_angle(body.theta_id + theta),
                    theta_id_dot: body.theta_id_dot,
                    theta_err: body.theta_err,
                },
                observer_rates: p.observer_rates.rotated(theta),
            }
        })
        .collect()
}

/// Euler update of poses and observer states with precomputed outputs.
pub fn integrate<T: Real>(
    world: &WorldState<T>,
    outputs: &[AgentOutput<T>],
    dt: T,
) -> Result<WorldState<T>> {
    let mut next = world.clone();
    for (k, out) in outputs.iter().enumerate() {
        next.poses[k] = unicycle::step(world.poses[k], out.command, dt)?;
        let e = &mut next.estimates[k];
        e.velocity += out.observer_rates.velocity * dt;
        e.error += out.observer_rates.error * dt;
    }
    next.step = world.step + 1;
    next.time = T::of(next.step as f64) * dt;
    let limit = T::of(DIVERGENCE_LIMIT);
    for (k, (p, e)) in next.poses.iter().zip(&next.estimates).enumerate() {
        let bounded = p.x.abs() <= limit && p.y.abs() <= limit;
        if !p.is_finite() || !e.is_finite() || !bounded {
            return Err(Error::SimulationDiverged {
                agent: k + 1,
                time: next.time.to_f64_lossy(),
            });
        }
    }
    Ok(next)
}

pub fn step_world<T: Real>(world: &WorldState<T>, config: &SimConfig<T>) -> Result<WorldState<T>> {
    let outputs = evaluate(world, config);
    integrate(world, &outputs, config.dt)
}

/// One agent's logged state at a sample instant (world frame).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentSample<T> {
    pub pose: Pose<T>,
    pub command: VelocityCommand<T>,
    pub u: Vec2<T>,
    pub theta_id: T,
    pub theta_err: T,
    pub estimates: Estimates<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricSample<T> {
    /// ‖p_ij‖ − d_ij per edge.
    pub edge_errors: Vec<T>,
    pub heading_errors: Vec<T>,
    /// ‖v̂_i − v_ref‖ per agent.
    pub velocity_estimate_errors: Vec<T>,
    /// ‖ê_Ti − e_T‖ per agent (interception only).
    pub error_estimate_errors: Option<Vec<T>>,
    pub e_t_norm: Option<T>,
    pub shape_distance: T,
    pub target_in_hull: Option<bool>,
}

impl<T: Real> MetricSample<T> {
    pub fn max_edge_error(&self) -> T {
        max_abs(&self.edge_errors)
    }

    pub fn max_heading_error(&self) -> T {
        max_abs(&self.heading_errors)
    }

    pub fn max_velocity_estimate_error(&self) -> T {
        max_abs(&self.velocity_estimate_errors)
    }
}

pub(crate) fn max_abs<T: Real>(xs: &[T]) -> T {
    xs.iter().fold(T::zero(), |m, x| m.max(x.abs()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogRow<T> {
    pub time: T,
    pub agents: Vec<AgentSample<T>>,
    /// v₀ (flocking) or v_T (interception) at this instant.
    pub reference_velocity: Vec2<T>,
    pub target: Option<TargetState<T>>,
    pub metrics: MetricSample<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryLog<T> {
    pub kind: TaskKind,
    pub n: usize,
    pub edges: Vec<crate::graph::Edge>,
    pub dt: T,
    pub sample_every: usize,
    pub seed: Option<u64>,
    pub rows: Vec<LogRow<T>>,
    /// Steps where some agent's desired heading moved by more than π/2.
    pub heading_jumps: usize,
}

fn sample<T: Real>(world: &WorldState<T>, outputs: &[AgentOutput<T>], config: &SimConfig<T>) -> LogRow<T> {
    let positions = world.positions();
    let reference = config.task.reference_velocity(world.time);
    let target = config.task.target_state(world.time);
    let e_t = target.map(|s| interception_error(s.p, positions[config.n() - 1]));
    let agents: Vec<AgentSample<T>> = world
        .poses
        .iter()
        .zip(outputs)
        .zip(&world.estimates)
        .map(|((&pose, out), &estimates)| AgentSample {
            pose,
            command: out.command,
            u: out.control.u,
            theta_id: out.control.theta_id,
            theta_err: out.control.theta_err,
            estimates,
        })
        .collect();
    let target_in_hull = target.map(|s| {
        let followers = &positions[..config.n() - 1];
        convex_hull_contains(followers, s.p, T::of(HULL_TOL)).unwrap_or(false)
    });
    let metrics = MetricSample {
        edge_errors: config.formation.edge_length_errors(&positions),
        heading_errors: agents.iter().map(|a| a.theta_err).collect(),
        velocity_estimate_errors: agents
            .iter()
            .map(|a| (a.estimates.velocity - reference).norm())
            .collect(),
        error_estimate_errors: e_t.map(|e| agents.iter().map(|a| (a.estimates.error - e).norm()).collect()),
        e_t_norm: e_t.map(Vec2::norm),
        shape_distance: config
            .formation
            .shape_distance(&positions)
            .expect("position count matches formation"),
        target_in_hull,
    };
    LogRow {
        time: world.time,
        agents,
        reference_velocity: reference,
        target,
        metrics,
    }
}

/// Owns the configuration and the evolving world.
#[derive(Debug, Clone)]
pub struct Simulation<T> {
    config: SimConfig<T>,
    world: WorldState<T>,
    seed: Option<u64>,
    last_theta_id: Option<Vec<T>>,
    heading_jumps: usize,
}

impl<T: Real> Simulation<T> {
    pub fn new(config: SimConfig<T>, world: WorldState<T>) -> Result<Self> {
        if world.poses.len() != config.n() {
            return Err(Error::LengthMismatch {
                what: "initial poses",
                expected: config.n(),
                found: world.poses.len(),
            });
        }
        if !(config.dt > T::zero()) {
            return Err(Error::NonPositiveStep(config.dt.to_f64_lossy()));
        }
        Ok(Self {
            config,
            world,
            seed: None,
            last_theta_id: None,
            heading_jumps: 0,
        })
    }

    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        self.seed = seed;
        self
    }

    pub fn config(&self) -> &SimConfig<T> {
        &self.config
    }

    pub fn world(&self) -> &WorldState<T> {
        &self.world
    }

    fn track_heading_jumps(&mut self, outputs: &[AgentOutput<T>]) {
        let now: Vec<T> = outputs.iter().map(|o| o.control.theta_id).collect();
        if let Some(prev) = &self.last_theta_id {
            for (k, (&a, &b)) in prev.iter().zip(&now).enumerate() {
                if wrap_angle(b - a).abs() > T::FRAC_PI_2() {
                    self.heading_jumps += 1;
                    debug!(
                        "agent {}: desired heading jumped by {:.3} rad at t = {}",
                        k + 1,
                        wrap_angle(b - a).to_f64_lossy(),
                        self.world.time
                    );
                }
            }
        }
        self.last_theta_id = Some(now);
    }

    /// Advances one step and returns the outputs that were applied.
    pub fn step(&mut self) -> Result<Vec<AgentOutput<T>>> {
        let outputs = evaluate(&self.world, &self.config);
        self.track_heading_jumps(&outputs);
        self.world = integrate(&self.world, &outputs, self.config.dt)?;
        Ok(outputs)
    }

    /// Runs to the configured duration, sampling every `sample_every` steps.
    pub fn run(mut self) -> Result<TrajectoryLog<T>> {
        let steps = self.config.step_count();
        let every = self.config.sample_every.max(1);
        let mut rows = Vec::with_capacity(steps / every + 1);
        for k in 0..=steps {
            let outputs = evaluate(&self.world, &self.config);
            if k % every == 0 {
                rows.push(sample(&self.world, &outputs, &self.config));
            }
            if k == steps {
                break;
            }
            self.track_heading_jumps(&outputs);
            self.world = integrate(&self.world, &outputs, self.config.dt)?;
        }
        Ok(TrajectoryLog {
            kind: self.config.task.kind(),
            n: self.config.n(),
            edges: self.config.formation.graph().edges().to_vec(),
            dt: self.config.dt,
            sample_every: every,
            seed: self.seed,
            rows,
            heading_jumps: self.heading_jumps,
        })
    }
}
