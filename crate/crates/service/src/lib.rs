//! Command-line and HTTP front ends for contrafact sessions.

pub mod http;
pub mod regions;
pub mod script;
