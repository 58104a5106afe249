use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degenerate segment: endpoints coincide")]
    DegenerateSegment,

    #[error("point lies on the wall's supporting line")]
    PointOnWallLine,

    #[error("source and receiver are not on the same side of the wall")]
    OppositeSidesOfWall,

    #[error("invalid value for `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("time must be strictly increasing (previous {previous} s, got {got} s)")]
    NonMonotoneTime { previous: f64, got: f64 },

    #[error("empty candidate list for beam sweep")]
    EmptyCandidates,

    #[error("protocol state is already terminated")]
    Terminated,

    #[error("scenario parse error at {path}: {message}")]
    ScenarioParse { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        field,
        reason: reason.into(),
    }
}
