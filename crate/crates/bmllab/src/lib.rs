//! Exact-norm laboratory for Lorentz and Bourgain-Morrey-Lorentz function
//! spaces on dyadic meshes.
//!
//! Everything operates on [`mesh::MeshFunction`], a real piecewise-constant
//! function on a uniform dyadic mesh over `[-2^L, 2^L)^n`. Geometry (cube
//! corners, overlap measures, rearrangement breakpoints) is exact rational
//! arithmetic with denominators of the form `3·2^k`; only final powers and
//! sums are evaluated in floating point.
//!
//! Module map:
//! - [`mesh`]: dyadic cubes, thirds-shifted grids, regions, mesh functions.
//! - [`lorentz`]: decreasing rearrangement and closed-form Lorentz norms.
//! - [`bml`]: the Bourgain-Morrey-Lorentz norm over the full infinite
//!   dyadic lattice via a three-zone (coarse/middle/fine) exact summation,
//!   plus translation, dilation, convolution and separation experiments.
//! - [`ops`]: maximal family, sharp maximal, fractional integral, Hilbert
//!   transform with exact quadrature, commutators, BMO/CMO diagnostics.
//! - [`blocks`]: block validation, block-space norm intervals, and the
//!   explicit decompositions of `M(b)` and `T(a)`.
//! - [`hardy`]: atoms, envelope certificates and the constructive weak
//!   Hardy factorization driven by the Hilbert transform.
//! - [`report`]: seeded corpora and the verification suites behind the
//!   `verify` CLI subcommand.

pub mod bml;
pub mod blocks;
pub mod cli;
pub mod hardy;
pub mod lorentz;
pub mod mesh;
pub mod ops;
pub mod rat;
pub mod report;

use std::fmt;

/// Error type shared across the crate.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Malformed mesh parameters or value payloads.
    InvalidMesh(String),
    /// A region or generator falls outside the domain box.
    OutsideDomain(String),
    /// Requested support does not fit; the reported exponent would.
    SupportEscapes { required_l: i32 },
    /// Exponents outside the supported range for this operation.
    UnsupportedExponents(String),
    /// Operation restricted to a lower dimension.
    DimensionUnsupported(&'static str),
    /// Two mesh functions do not share a mesh.
    MismatchedMesh,
    /// Singular-integral evaluation exactly on a value jump.
    JumpPoint(String),
    /// Region with empty interior where positive measure is required.
    EmptyRegion,
    /// An operation needing a non-empty test family got none.
    EmptyFamily,
    /// Atom validation failed where a valid atom is required.
    InvalidAtom(String),
    /// Separation parameter below the two-bump hypothesis `M > 10`.
    MTooSmall(f64),
    /// Homogeneity denominator under the positivity floor.
    PositivityFloor { value: f64, floor: f64 },
    /// Residual re-atomization failed (mean beyond tolerance).
    Reatomization(String),
    /// Parse or I/O problems on external files.
    Input(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidMesh(m) => write!(f, "invalid mesh: {m}"),
            Error::OutsideDomain(m) => write!(f, "outside domain: {m}"),
            Error::SupportEscapes { required_l } => {
                write!(f, "support escapes domain; requires L >= {required_l}")
            }
            Error::UnsupportedExponents(m) => write!(f, "unsupported exponents: {m}"),
            Error::DimensionUnsupported(op) => write!(f, "{op}: dimension not supported"),
            Error::MismatchedMesh => write!(f, "mesh functions live on different meshes"),
            Error::JumpPoint(m) => write!(f, "evaluation at a value jump: {m}"),
            Error::EmptyRegion => write!(f, "region has empty interior"),
            Error::EmptyFamily => write!(f, "empty test family"),
            Error::InvalidAtom(m) => write!(f, "invalid atom: {m}"),
            Error::MTooSmall(m) => write!(f, "M must exceed 10 (got {m})"),
            Error::PositivityFloor { value, floor } => {
                write!(f, "|T(g)(c_Q)| = {value:.3e} below positivity floor {floor:.3e}")
            }
            Error::Reatomization(m) => write!(f, "re-atomization failure: {m}"),
            Error::Input(m) => write!(f, "input error: {m}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
