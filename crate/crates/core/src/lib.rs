//! Direct and inverse spectral computations for the Sturm–Liouville operator
//! `-y'' + q y = λ y` on a lasso graph: a boundary edge with a Neumann end
//! attached to a loop, with Kirchhoff conditions at the junction.
//!
//! The crate covers the forward problem (transfer-matrix propagation, the
//! characteristic function and its zeros), a finite-difference oracle for
//! cross-checking, the Hadamard product representation of the characteristic
//! function, and trace recovery plus a uniqueness test for the zero potential.

pub mod ambarzumyan;
pub mod charfn;
pub mod error;
pub mod graph_model;
pub mod hadamard;
pub mod oracle_fd;
pub mod propagator;

pub use ambarzumyan::{
    ambarzumyan_verdict, extract_traces_lsq, extract_traces_sequences, rayleigh_quotient_test,
    TraceEstimates, Verdict,
};
pub use charfn::{delta, delta0, find_spectrum, spectral_shift_residual, Eigenvalue, Spectrum};
pub use error::{LassoError, Result};
pub use graph_model::{classify_ratio, load_problem, EdgePotential, LassoProblem, LengthRatio, RatioKind};
pub use hadamard::{compute_c0, evaluate_product, fix_constant, verify_corollary, HadamardFactorization};
pub use oracle_fd::{assemble, eigenvalues_lowest};
pub use propagator::{propagate, verify_asymptotics, FundamentalValues, SpectralParameter};
