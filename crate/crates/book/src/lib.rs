//! Compiles the guide's Rust snippets as doctests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/model.md")]
pub mod model {}
#[doc = include_str!("../../../book/src/penalties.md")]
pub mod penalties {}
#[doc = include_str!("../../../book/src/admm.md")]
pub mod admm {}
#[doc = include_str!("../../../book/src/palm.md")]
pub mod palm {}
#[doc = include_str!("../../../book/src/benchmarks.md")]
pub mod benchmarks {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
