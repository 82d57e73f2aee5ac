//! Assignment of electric vehicles to charging stations.
//!
//! Each vehicle broadcasts its position, energy request and preference
//! weights over charging time, grid price and distance. Stations price the
//! request from their own state. A centralized solver takes the cheapest
//! station; a decentralized one lets stations answer with a random green
//! signal whose probability falls with cost. A token bond, escrowed on a
//! transaction DAG and returned only on attested arrival, keeps drivers
//! honest, with a PI controller regulating the bond.
//!
//! Modules follow the data flow: [`domain`] types, [`cost`], [`mobility`],
//! [`assignment`], the [`engine`], the [`ledger`], [`compliance`], and
//! [`metrics`]. [`config`] and [`cli`] wire them into experiments.

pub mod assignment;
pub mod cli;
pub mod compliance;
pub mod config;
pub mod cost;
pub mod domain;
pub mod engine;
pub mod ledger;
pub mod metrics;
pub mod mobility;
pub mod rng;

pub use config::ScenarioConfig;
pub use engine::{run_monte_carlo, run_scenario, Scenario};
pub use metrics::RunResult;
