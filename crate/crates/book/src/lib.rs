//! Runs the guide's code listings as doc-tests. Each chapter becomes the doc
//! comment of an empty module, so a failing listing is reported under the
//! chapter it comes from.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/operators.md")]
pub mod operators {}

#[doc = include_str!("../../../book/src/behaviors.md")]
pub mod behaviors {}

#[doc = include_str!("../../../book/src/inequality.md")]
pub mod inequality {}

#[doc = include_str!("../../../book/src/certification.md")]
pub mod certification {}

#[doc = include_str!("../../../book/src/adversaries.md")]
pub mod adversaries {}

#[doc = include_str!("../../../book/src/seesaw.md")]
pub mod seesaw {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
