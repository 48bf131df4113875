use alloc::boxed::Box;
use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("invalid mesh: {0}")]
    Mesh(String),

    #[error("point ({x}, {y}) lies outside the mesh")]
    PointOutside { x: f64, y: f64 },

    #[error("material law: {0}")]
    Material(String),

    #[error("expression error at offset {offset}: {message}")]
    Expression { offset: usize, message: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("linear solver stopped after {iterations} iterations at relative residual {residual:e}")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("cell problem {problem}: {source}")]
    CellProblem {
        problem: String,
        #[source]
        source: Box<Error>,
    },

    #[error("cell problem {problem} has incompatible data: |integral| = {integral:e}, norm = {norm:e}")]
    Incompatible {
        problem: String,
        integral: f64,
        norm: f64,
    },

    #[error("time step {step}: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("zero reference norm")]
    ZeroReference,
}

impl Error {
    pub(crate) fn in_cell_problem(self, problem: &str) -> Error {
        Error::CellProblem {
            problem: problem.into(),
            source: Box::new(self),
        }
    }

    pub(crate) fn at_step(self, step: usize) -> Error {
        Error::Step {
            step,
            source: Box::new(self),
        }
    }
}
