use crate::geometry::{GeometryError, Point};
use crate::moebius::MoebiusError;
use crate::series::{SeriesError, ValGrad};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Moebius(#[from] MoebiusError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error("evaluation at the source point {0}")]
    Singular(Point),
    #[error("log singularity of the auxiliary function at the disk center {0}")]
    CenterSingularity(Point),
    #[error("contour crosses an interface or a disk center")]
    InvalidContour,
    #[error("quadrature did not converge (partial {partial:?}, error estimate {estimate:e})")]
    Quadrature { partial: ValGrad, estimate: f64 },
    #[error("point too close to an interface for the finite-difference stencil")]
    TooCloseToInterface,
    #[error("invalid source: {0}")]
    InvalidSource(String),
    #[error("mismatched grids: {0}")]
    Shape(String),
    #[error(
        "iterative solver stopped after {iterations} iterations at relative residual {residual:e}"
    )]
    SolverFailure { iterations: usize, residual: f64 },
    #[error("grid resolution: {0}")]
    Resolution(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
