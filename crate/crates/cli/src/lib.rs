//! Document formats, report verification and benchmarking behind the
//! `bbspan` command.

pub mod bench;
pub mod commands;
pub mod doc;
pub mod verify;
