use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid dimension must be 2 or 3, got {0}")]
    Dimension(usize),
    #[error("origin has {got} coordinates for a {ndim}-dimensional grid")]
    OriginLength { ndim: usize, got: usize },
    #[error("every axis needs at least 8 cells, got {0}")]
    TooFewCells(usize),
    #[error("grid spacing must be positive and finite, got {0}")]
    Spacing(f64),
    #[error("grid origin must be finite")]
    NonFiniteOrigin,
    #[error("eps must be positive and finite, got {0}")]
    Eps(f64),
    #[error("eps = {eps} is below {cells_per_eps} cells of width h = {h}")]
    Resolution { eps: f64, h: f64, cells_per_eps: f64 },
    #[error("expected {expected} values, got {got}")]
    Length { expected: usize, got: usize },
    #[error("non-finite value at cell {0}")]
    NonFinite(usize),
}

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed header: {0}")]
    Header(String),
    #[error("unsupported snapshot version {0}")]
    Version(String),
    #[error("invalid shape: {0}")]
    Shape(String),
    #[error("truncated payload: expected {expected} bytes, got {got}")]
    Truncated { expected: usize, got: usize },
    #[error("{0} trailing bytes after payload")]
    TrailingBytes(usize),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("invalid penalty configuration: {0}")]
    Penalty(String),
    #[error("invalid topological configuration: {0}")]
    Topo(String),
    #[error("invalid flow parameters: {0}")]
    Flow(String),
    #[error("invalid level interval [{lo}, {hi}]: need -1 < lo <= hi < 1")]
    Interval { lo: f64, hi: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ShapeError {
    #[error("radius must be positive, got {0}")]
    Radius(f64),
    #[error("shape does not fit in the domain: margin {margin} < required {required}")]
    Margin { margin: f64, required: f64 },
    #[error("shape dimension {shape} does not match grid dimension {grid}")]
    Dimension { shape: usize, grid: usize },
    #[error("bump support violates its placement contract: {0}")]
    BumpSupport(String),
    #[error("sphere radius {r_eps} outside the schedule ({lower}, {upper}) for eps = {eps}")]
    Schedule { r_eps: f64, lower: f64, upper: f64, eps: f64 },
    #[error("field is not constant on the insertion ball (deviation {0})")]
    Splice(f64),
    #[error(transparent)]
    Grid(#[from] GridError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticError {
    #[error("ball B_{r}({x:?}) is not inside the domain")]
    BallOutside { x: [f64; 3], r: f64 },
    #[error("radius contract violated: need eps <= r < R <= 1, got eps={eps}, r={r}, R={big_r}")]
    Radii { eps: f64, r: f64, big_r: f64 },
    #[error("point set `{0}` is empty")]
    EmptySet(String),
    #[error("{0}")]
    Input(String),
}
