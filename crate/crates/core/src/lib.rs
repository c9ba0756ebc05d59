//! Averaged-model simulator of a PV + battery microgrid behind a grid-forming
//! converter with frequency-droop damping.
//!
//! The crate is organised bottom-up:
//!
//! - [`pv`]: single-diode array fitted to a datasheet, P&O tracker
//! - [`battery`]: generic lithium-ion pack, DC-link regulator
//! - [`droop`]: damping law and averaged VSC chain
//! - [`ac_system`]: optional synchronous equivalent sharing the load bus
//! - [`engine`]: coupled plant, equilibrium, fixed-step RK4 runs
//! - [`metrics`]: frequency, RoCoF, battery and DC-link figures of a run
//! - [`sizing`]: damping sweep, constraint screening, battery rating
//! - [`config`], [`report`], [`cli`]: TOML configuration, CSV and table output, commands
//! - [`fixtures`]: golden regression fixtures
//!
//! ```no_run
//! use droopsim::engine::{run, Models, Scenario};
//!
//! let result = run(&Scenario::default(), &Models::default()).unwrap();
//! println!("{} records, {}", result.records.len(), result.status);
//! ```

pub mod ac_system;
pub mod battery;
pub mod cli;
pub mod config;
pub mod droop;
pub mod engine;
pub mod error;
pub mod fixtures;
pub mod metrics;
pub mod ode;
pub mod pv;
pub mod report;
pub mod sizing;

pub use error::{Error, Result};
