//! Invariant densities and linear response for analytic full-branch Markov
//! maps of the interval.

pub mod branch;
pub mod conjugacy;
pub mod error;
pub mod map;
pub mod oracles;
pub mod pade;
pub mod pipeline;
pub mod poly;
pub mod spectral;
pub mod susceptibility;
pub mod transfer;

pub use error::{Error, Result};
pub use pipeline::{Pipeline, Response};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/maps.md")]
    pub mod maps {}
    #[doc = include_str!("../../../book/src/conjugacy.md")]
    pub mod conjugacy {}
    #[doc = include_str!("../../../book/src/density.md")]
    pub mod density {}
    #[doc = include_str!("../../../book/src/response.md")]
    pub mod response {}
    #[doc = include_str!("../../../book/src/pade.md")]
    pub mod pade {}
    #[doc = include_str!("../../../book/src/oracles.md")]
    pub mod oracles {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}
