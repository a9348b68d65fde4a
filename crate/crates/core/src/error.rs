//! Error type shared by all toolkit modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// The requested integral diverges (e.g. `w = 0` with an atom at the origin).
    #[error("divergent integral: {0}")]
    DivergentIntegral(&'static str),

    /// Fuglede-Kadison log-determinant is -infinity.
    #[error("log Fuglede-Kadison determinant is -infinity")]
    NegativeInfinity,

    /// Cauchy transform evaluated at a pole of the measure.
    #[error("evaluation point lies on the support of the measure")]
    PoleOnContour,

    /// Measure-based evaluation is not defined for this operator; a closed form applies.
    #[error("operator variant dispatches to closed forms; no singular-value measure is materialized")]
    DispatchToClosedForm,

    /// Root bracketing failed; the input measure violates the monotonicity contract.
    #[error("bracket failure while solving {context}: f({lo}) = {flo}, f({hi}) = {fhi}")]
    BracketFailure {
        context: &'static str,
        lo: f64,
        hi: f64,
        flo: f64,
        fhi: f64,
    },

    /// Fixed-point iteration did not converge.
    #[error("fixed-point iteration did not converge after {0} iterations")]
    NonConvergence(usize),

    /// A finite-difference stencil point left the admissible domain.
    #[error("finite-difference stencil leaves the domain at lambda = {re} + {im}i")]
    StencilOutsideDomain { re: f64, im: f64 },

    /// The pushforward map is singular at this point; density transport refused.
    #[error("pushforward map is singular (|jac| = {jac:.3e} <= floor {floor:.1e})")]
    SingularPushforward { jac: f64, floor: f64 },

    /// Rejection sampler acceptance rate collapsed.
    #[error("rejection sampling acceptance rate {0:.2e} below 1e-4; grid envelope too coarse")]
    EnvelopeFailure(f64),

    /// QR eigensolver stopped making progress.
    #[error("QR iteration stagnated after {0} sweeps without deflation")]
    QrStagnation(usize),

    /// Recomputed eigenpair failed the residual check.
    #[error("eigenpair residual {residual:.3e} exceeds {bound:.3e}")]
    ResidualCheckFailed { residual: f64, bound: f64 },

    /// Closed-form Haar evaluation requested outside the annulus.
    #[error("radius {0} outside the admissible annulus")]
    OutsideAnnulus(f64),

    /// Selfadjoint profile evaluation outside `U_t`.
    #[error("point {0} lies outside U_t")]
    OutsideUt(f64),

    /// Elliptic density requested outside the image of the pushforward map.
    #[error("point outside the image of the pushforward map")]
    OutsideImage,

    /// The elliptic closed forms degenerate at `gamma = t`.
    #[error("gamma = t is the semicircular degeneration; use the semicircle pushforward instead")]
    GammaEqualsT,

    /// A w = 0 trace functional diverges outside the admissible set.
    #[error("trace functional diverges at w = 0 for lambda = {re} + {im}i")]
    DivergentFunctional { re: f64, im: f64 },

    /// Malformed operator/measure specification.
    #[error("invalid model: {0}")]
    InvalidModel(String),
}
