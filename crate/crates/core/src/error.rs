use thiserror::Error;

/// Errors raised by the surface, profile and flow machinery.
///
/// Variants split into two families: structural problems with the input
/// geometry (bad mesh, bad profile, malformed files) and domain outcomes
/// that are well-formed but not usable for the requested computation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("open mesh: {0} boundary edges")]
    OpenMesh(usize),
    #[error("non-manifold mesh: {0}")]
    NonManifold(String),
    #[error("degenerate face {face}: area {area:e} below threshold {threshold:e}")]
    DegenerateFace { face: usize, area: f64, threshold: f64 },
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("non-positive enclosed volume {0:e}; the orientation is probably inverted (flip faces)")]
    Orientation(f64),
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("pinched profile: interior radius vanishes at sample {0}")]
    PinchedProfile(usize),
    #[error("self-intersecting profile: segments {0} and {1} cross")]
    SelfIntersecting(usize, usize),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("no neck: {0}")]
    NoNeck(String),
    #[error("degenerate multiplier: the isoperimetric gradient vanishes (round sphere)")]
    DegenerateMultiplier,
    #[error("constraint projection failed: {0}")]
    Projection(String),
    #[error("scales not separated: {0}")]
    ScalesNotSeparated(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("non-conformal parametrization: {0}")]
    NonConformal(String),
    #[error("inversion center too close to the surface (distance {0:e})")]
    CenterOnSurface(f64),
    #[error("flow failure: {0}")]
    Flow(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Coarse classification used by the command line front end for exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Structural,
    Domain,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::NoNeck(_)
            | Error::DegenerateMultiplier
            | Error::Projection(_)
            | Error::ScalesNotSeparated(_)
            | Error::InsufficientData(_)
            | Error::Flow(_)
            | Error::Orientation(_) => ErrorKind::Domain,
            _ => ErrorKind::Structural,
        }
    }

    /// Short machine-readable tag for JSON diagnostics.
    pub fn code(&self) -> &'static str {
        match self {
            Error::OpenMesh(_) => "open_mesh",
            Error::NonManifold(_) => "non_manifold",
            Error::DegenerateFace { .. } => "degenerate_face",
            Error::InvalidMesh(_) => "invalid_mesh",
            Error::Orientation(_) => "orientation",
            Error::InvalidProfile(_) => "invalid_profile",
            Error::PinchedProfile(_) => "pinched_profile",
            Error::SelfIntersecting(..) => "self_intersecting",
            Error::Parse { .. } => "parse",
            Error::Config(_) => "config",
            Error::NoNeck(_) => "no_neck",
            Error::DegenerateMultiplier => "degenerate_multiplier",
            Error::Projection(_) => "projection",
            Error::ScalesNotSeparated(_) => "scales_not_separated",
            Error::InsufficientData(_) => "insufficient_data",
            Error::NonConformal(_) => "non_conformal",
            Error::CenterOnSurface(_) => "center_on_surface",
            Error::Flow(_) => "flow",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
