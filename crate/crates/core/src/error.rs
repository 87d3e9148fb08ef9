use thiserror::Error;

pub type Result<T> = std::result::Result<T, HenonError>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum HenonError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("eps = {eps} is outside the admissible range (0, {bound})")]
    InadmissibleEps { eps: f64, bound: f64 },

    #[error("alpha = {alpha} is not the critical exponent alpha({k}) = {critical}")]
    NotCritical { k: u32, alpha: f64, critical: f64 },

    #[error("alpha = {alpha} is degenerate: it coincides with alpha({k})")]
    Degenerate { k: u32, alpha: f64 },

    #[error("eigenvalue bisection failed: {0}")]
    NoConvergence(String),

    #[error("grid too coarse: Sturm value {sturm} and Pruefer value {prufer} differ beyond {tolerance}")]
    GridTooCoarse { sturm: f64, prufer: f64, tolerance: f64 },

    #[error("fit window holds {points} points, at least {required} needed")]
    WindowTooSmall { points: usize, required: usize },

    #[error("no sign change of u(R) over the initial-value bracket [{lo}, {hi}]")]
    ShootBracketFailed { lo: f64, hi: f64 },

    #[error("profile exceeded the overflow guard at r = {r}")]
    Blowup { r: f64 },

    #[error("profile is not a solution: scaled residual {residual} exceeds {gate}")]
    NotASolution { residual: f64, gate: f64 },

    #[error("g(alpha) has no sign change over the bracket; samples {samples:?}")]
    BracketFailed { samples: Vec<(f64, f64)> },

    #[error("first eigenvalue is not decreasing in alpha; samples {samples:?}")]
    Nonmonotone { samples: Vec<(f64, f64)> },

    #[error("angular quadrature exact to degree {available}, nonlinearity needs {required}")]
    Aliasing { required: usize, available: usize },

    #[error("corrector diverged after {halvings} step halvings (last ds = {ds})")]
    CorrectorDiverged { halvings: u32, ds: f64 },

    #[error("u + beta became non-positive ({min_value}) at r = {r}")]
    PositivityLost { r: f64, min_value: f64 },

    #[error("sector refused: {0}")]
    SectorRefused(String),

    #[error("singular linear system at row {0}")]
    Singular(usize),
}

impl HenonError {
    /// Whether the failure comes from bad input rather than from a numerical method.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            HenonError::InvalidParams(_)
                | HenonError::InadmissibleEps { .. }
                | HenonError::NotCritical { .. }
                | HenonError::Degenerate { .. }
                | HenonError::SectorRefused(_)
        )
    }
}
