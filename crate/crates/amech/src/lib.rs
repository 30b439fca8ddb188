//! File formats, the builtin model registry and the command
//! implementations behind the `amech` binary.

pub mod commands;
pub mod formats;
pub mod registry;
pub mod scenario;

pub use amech_core as core;
