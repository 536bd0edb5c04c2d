//! Exact models of structured Hilbert-space operators: spectra, minimum
//! moduli, pseudoinverses, and absolutely minimum attaining classification.

pub mod classify;
pub mod exact;
pub mod generate;
pub mod multiplication;
pub mod operators;
pub mod oracle;
pub mod spectra;
