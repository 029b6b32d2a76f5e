//! File formats, command line tool and error reporting for `wallscatter-core`.

pub mod cli;
pub mod error;
pub mod io;

pub use error::{AppError, Result};
