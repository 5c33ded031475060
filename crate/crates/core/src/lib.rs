pub mod bench;
pub mod cardinality;
pub mod cli;
pub mod db;
pub mod error;
pub mod exec;
pub mod optimizer;
pub mod reopt;
pub mod sql;
pub mod stats;
pub mod storage;
pub mod value;
pub mod workload;

pub use db::Database;
pub use error::{Error, Result};
