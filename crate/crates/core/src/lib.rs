//! Random operator-valued frames generated by i.i.d. positive contractions.
//!
//! Each step draws `Ψ_k` with `0 ≤ Ψ_k ≤ I` and sets `t_k = Ψ_k r_{k-1}`,
//! `r_k = r_{k-1} - t_k`. The modules provide the linear algebra and
//! dilation primitives, samplers, the iteration itself, exact expectation
//! oracles, Monte Carlo checks, randomized Kaczmarz and the config-driven
//! experiment runner behind the `opframe` binary.

pub mod analysis;
pub mod dilation;
pub mod error;
pub mod iteration;
pub mod linalg;
pub mod oracle;
pub mod random;
pub mod rng;
pub mod samplers;
pub mod kaczmarz;
pub mod mtx;
pub mod experiment;
