//! Edge-computing task offloading: radio and latency model, demand-supply
//! matching, and a double auction with truthful payments.

pub mod auction;
pub mod error;
pub mod harness;
pub mod market;
pub mod model;
pub mod radio;
pub mod rng;

pub use error::{AuctionError, ConfigError, HarnessError, RadioError};
pub use model::{validate_config, EdgeServer, SystemConfig, Task, UserEquipment};
