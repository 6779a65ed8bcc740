//! The guide in `book/src` as doctests.
//!
//! mdbook cannot run examples that depend on workspace crates, so each
//! chapter is attached to an empty module here and `cargo test --doc`
//! compiles and runs its code blocks.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/kernels.md")]
pub mod kernels {}
#[doc = include_str!("../../../book/src/flows.md")]
pub mod flows {}
#[doc = include_str!("../../../book/src/slicing.md")]
pub mod slicing {}
#[doc = include_str!("../../../book/src/metrics.md")]
pub mod metrics {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
