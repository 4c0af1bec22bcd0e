//! HTTP session service and command-line front end for visbench.

pub mod api;
pub mod cli;
