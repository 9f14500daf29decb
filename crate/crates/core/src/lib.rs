//! Convex `C^{1,ω}` extensions of 1-jets.
//!
//! Given values `f` and gradients `G` on a finite set `E ⊂ ℝᵈ`, this crate
//! decides whether some convex differentiable function with an
//! `ω`-continuous gradient restricts to `(f, G)`, computes the natural
//! seminorm `A` of the jet, and builds the extension as the convex envelope
//! of `g(x) = min_y f(y) + ⟨G(y), x - y⟩ + M·φ_ω(|x - y|)`.
//!
//! ```
//! use jetconv::{jet, samples, Modulus};
//!
//! let m = Modulus::holder(0.5)?;
//! let a = jet::compute_a_intrinsic(&samples::symmetric_power(0.5), &m)?.value;
//! assert!((a - 2.0 / 3f64.sqrt()).abs() < 1e-12);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod c1;
pub mod envelope;
pub mod extension;
pub mod jet;
pub mod modulus;
pub mod numeric;
pub mod samples;

pub use jet::{FeasibilityReport, Jet, JetError};
pub use modulus::{ConjugatePair, Modulus, ModulusError, ValidationReport};

/// Chapters of the guide in `book/`, compiled so their snippets run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/moduli.md")]
    mod moduli {}
    #[doc = include_str!("../../../book/src/jets.md")]
    mod jets {}
    #[doc = include_str!("../../../book/src/envelopes.md")]
    mod envelopes {}
    #[doc = include_str!("../../../book/src/extensions.md")]
    mod extensions {}
    #[doc = include_str!("../../../book/src/c1.md")]
    mod c1 {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
