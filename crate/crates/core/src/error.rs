use alloc::string::String;

use crate::grid::Group;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("curves are defined on different grids")]
    GridMismatch,

    #[error("insufficient sample{}: need at least {needed} curves, found {found}", group_suffix(.group))]
    InsufficientSample {
        needed: usize,
        found: usize,
        group: Option<Group>,
    },

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("degenerate direction: the mean difference vanishes on the search space")]
    DegenerateDirection,

    #[error("degenerate operator: every eigenvalue is zero")]
    DegenerateOperator,

    #[error("singular system: {0} (increase the penalty or reduce the dimension)")]
    SingularSystem(String),

    #[error("singular score covariance in the {group} group (try a positive ridge)")]
    SingularCovariance { group: Group },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("range violation: {0}")]
    RangeViolation(String),

    #[error("simulation degeneracy: {0}")]
    SimulationDegeneracy(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
}

fn group_suffix(group: &Option<Group>) -> String {
    match group {
        Some(g) => alloc::format!(" in the {g} group"),
        None => String::new(),
    }
}

impl Error {
    /// True for failures caused by the numbers rather than by the caller's
    /// arguments or configuration.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DegenerateDirection
                | Error::DegenerateOperator
                | Error::SingularSystem(_)
                | Error::SingularCovariance { .. }
                | Error::InsufficientSample { .. }
                | Error::RangeViolation(_)
                | Error::SimulationDegeneracy(_)
        )
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
