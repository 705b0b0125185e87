//! Multilevel polar codes over finite Abelian group input alphabets.
//!
//! Channels with a composite input alphabet do not polarize into just
//! perfect and useless extremes: for every subgroup H of the input group
//! the ⁻/⁺ transform chain can converge to a "partially perfect" channel
//! that resolves the coset of H and nothing inside it. This crate provides
//! exact channel synthesis under the two Arikan transforms, the
//! subgroup-indexed polarization functionals (I⁰, I_H, Z_d, Z^H), the
//! closed-form recursions for the two reference erasure channels, and a
//! transversal-restricted successive-cancellation codec built on the
//! {0,1} generator-matrix convention for group alphabets.
//!
//! Data-parallel inner loops (path spectra, Monte Carlo simulation,
//! ensemble checks) run on rayon when the default `parallel` feature is
//! enabled and fall back to sequential iteration without it.

pub mod analytic;
pub mod channel;
pub mod codec;
pub mod group;
pub(crate) mod par;
pub mod polarize;
pub mod sim;

pub use channel::{Channel, ChannelError, ChannelParams1, ChannelParams2};
pub use codec::{CodeConfig, CodecError, GeneratorMatrix};
pub use group::{Group, GroupError, GroupSpec, Subgroup, Transversal};
pub use polarize::{PathBit, PolarPath, PolarizeError, SpectrumRow};
