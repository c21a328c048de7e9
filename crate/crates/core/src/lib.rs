//! Front tracking, Lagrangian kinetic representations and dissipation diagnostics
//! for one-dimensional scalar conservation laws and γ=3 isentropic gas dynamics.

pub mod besov;
pub mod collapse;
pub mod current;
pub mod diagnostics;
pub mod error;
pub mod euler;
pub mod fixtures;
pub mod flux;
pub mod front;
pub mod godunov;
pub mod lagrangian;
pub mod measure;
pub mod oleinik;
pub mod pl;
pub mod pwc;
pub mod quad;
pub mod report;
pub mod riemann;
pub mod run;
pub mod scenario;
pub mod testfn;

pub use error::{Error, Result};
