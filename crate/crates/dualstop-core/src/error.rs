//! Error type shared by all modules of the crate.

use alloc::string::String;
use core::fmt;

/// Errors reported by model construction, estimation and solving.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A model parameter is outside its admissible range.
    InvalidParameter(String),
    /// A path bundle of one model was passed to a routine for another.
    ModelMismatch { expected: &'static str, got: &'static str },
    /// An operation that needs Snell data did not receive any.
    MissingSnell,
    /// Vector or matrix sizes do not line up.
    DimensionMismatch { expected: usize, got: usize },
    /// The tree is structurally invalid (orphan nodes, bad probabilities, ...).
    InvalidTree(String),
    /// Enumerating the tree would produce more paths than the stated bound.
    TreeTooLarge { paths: u64, bound: u64 },
    /// Adaptive quadrature stopped above the requested tolerance.
    QuadratureNoConvergence { achieved: f64, requested: f64 },
    /// A process that must be a martingale is not one, up to tolerance.
    NonMartingale { node: usize, mean_increment: f64 },
    /// A martingale required to be weakly optimal at date zero is not.
    NotWeaklyOptimal,
    /// Expression parsing failed.
    ExprParse(String),
    /// Expression evaluation failed (unknown variable, bad arity, ...).
    ExprEval(String),
    /// Any other invalid argument.
    InvalidArgument(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::ModelMismatch { expected, got } => {
                write!(f, "model mismatch: expected {expected}, got {got}")
            }
            Error::MissingSnell => write!(f, "operation requires Snell data"),
            Error::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Error::InvalidTree(msg) => write!(f, "invalid tree: {msg}"),
            Error::TreeTooLarge { paths, bound } => {
                write!(f, "tree has {paths} paths, more than the bound {bound}")
            }
            Error::QuadratureNoConvergence { achieved, requested } => write!(
                f,
                "quadrature error {achieved:e} above requested tolerance {requested:e}"
            ),
            Error::NonMartingale { node, mean_increment } => write!(
                f,
                "process is not a martingale: conditional mean increment {mean_increment:e} at node {node}"
            ),
            Error::NotWeaklyOptimal => {
                write!(f, "martingale is not weakly optimal at date zero")
            }
            Error::ExprParse(msg) => write!(f, "expression parse error: {msg}"),
            Error::ExprEval(msg) => write!(f, "expression evaluation error: {msg}"),
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
