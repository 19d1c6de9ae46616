//! Command line and HTTP/JSON front ends of the semfeat engine, with
//! on-disk session persistence.

pub mod cli;
pub mod config;
pub mod error;
pub mod ops;
pub mod service;
pub mod store;

pub use config::{Defaults, ServiceConfig, Workspace};
pub use error::{AppError, Result};
pub use store::Store;
