//! Holomorphic and modular Siegel theta series for even lattices of
//! signature (m−1, 1).
//!
//! The holomorphic series sums the locally constant cone function `f` over a
//! shifted lattice; the modular one replaces `f` by `g`, a Gaussian integral
//! over a curved simplex spanned by negative vectors. As Im Z grows, `g`
//! tends to `f` almost everywhere.

pub mod cone;
pub mod exact;
pub mod modular;
pub mod problem;
pub mod quadspace;
pub mod simplex;
pub mod theta;
pub mod summation;

pub use cone::{validate_frame, ConeError, ConeFrame, FValue, FrameViolation, XData};
pub use exact::{Rat, RatMatrix};
pub use quadspace::{signature, PairForm, QuadError, QuadraticSpace, SplitData};
pub use modular::{verify_invert, verify_limit, verify_limit_along, verify_translate, Law, Tolerances, TransformReport, VerifyError};
pub use problem::{Problem, ProblemError};
pub use simplex::{erf_like, g_n1, g_value, GResult, Rule, SimplexChart, SimplexError};
pub use theta::{
    cosets, enumerate, fourier_coefficient, fourier_expansion, theta_f, theta_g, Characteristics, CosetSet, Kernel, SiegelPoint,
    ThetaError, ThetaOptions, ThetaValue,
};
