//! Numerical laboratory for non-linear regularizations of planar
//! piecewise-smooth vector fields with invisible fold-fold points.

pub mod error;
pub mod scalar;
pub mod poly;
pub mod quad;
pub mod roots;
pub mod ode;
pub mod linfit;

pub mod transition;
pub mod psvf;
pub mod slowfast;
pub mod sdi;
pub mod cycles;

pub mod models;
pub mod config;

pub use error::{Error, ErrorClass, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/transition.md")]
    mod transition {}
    #[doc = include_str!("../../../book/src/psvf.md")]
    mod psvf {}
    #[doc = include_str!("../../../book/src/regularization.md")]
    mod regularization {}
    #[doc = include_str!("../../../book/src/sdi.md")]
    mod sdi {}
    #[doc = include_str!("../../../book/src/cycles.md")]
    mod cycles {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
