use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("node {node} is out of range 1..={n}")]
    NodeOutOfRange { node: usize, n: usize },

    #[error("self-loop on node {0}")]
    SelfLoop(usize),

    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),

    #[error("operation needs at least {min} nodes, got {n}")]
    UnsupportedSize { n: usize, min: usize },

    #[error("{what}: expected {expected} entries, found {found}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("framework is not minimally and infinitesimally rigid: {0:?}")]
    NotRigid(crate::rigidity::RigidityReport),

    #[error("frameworks are defined on different graphs")]
    GraphMismatch,

    #[error("target distance for edge ({0}, {1}) must be positive")]
    NonPositiveDistance(usize, usize),

    #[error("edge ({i}, {j}): stated distance {stated} disagrees with positions ({actual})")]
    InconsistentDistance {
        i: usize,
        j: usize,
        stated: f64,
        actual: f64,
    },

    #[error("leader must be agent {n}, got {leader}")]
    LeaderNotLast { leader: usize, n: usize },

    #[error("agent {0} is the leader; follower law does not apply")]
    NotAFollower(usize),

    #[error("agent {0} has b_i = 1 but no reference signal was supplied")]
    MissingReference(usize),

    #[error("time step must be positive, got {0}")]
    NonPositiveStep(f64),

    #[error("point set is empty")]
    EmptyPointSet,

    #[error("simulation diverged: agent {agent} at t = {time} s")]
    SimulationDiverged { agent: usize, time: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
