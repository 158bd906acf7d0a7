pub mod config;
pub mod dd;
pub mod functionals;
pub mod geometry;
pub mod harmonic;
pub mod kernels;
pub mod quad;
pub mod specfun;
pub mod verify;
