//! Micro-support of quantum states on the circle.
//!
//! Periodic Gaussian wavepackets and Lagrangian states are evolved by
//! `φ ↦ φ(f(z)) e^{iντ(z)}` for circle maps `f`, and their micro-support is
//! estimated by scanning the decay of coherent-state pairings across a ladder
//! of `ħ` values. The classical side (discounted Bellman subactions, cocycle
//! series, twist, rotation coboundaries) supplies the predicted supports.

pub mod circle;
pub mod cli;
pub mod cohomology;
pub mod ergodic;
pub mod error;
pub mod microsupport;
pub mod oracle;
pub mod pipeline;
pub mod quadrature;
pub mod states;

pub use error::{Error, Result};
pub use num_complex::Complex64;
