pub mod fields;
pub mod materials;
pub mod operators;
pub mod cgo;
pub mod scattering;
pub mod cli;
