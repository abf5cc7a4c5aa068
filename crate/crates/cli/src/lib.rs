//! Scenario files, the `lienard` command line and the acceptance suite.

pub mod acceptance;
pub mod commands;
pub mod oracle;
pub mod report;
pub mod scenario;
pub mod shipped;
