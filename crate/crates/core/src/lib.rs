//! Evolutionary naming game on a periodic square lattice.
//!
//! Agents carry weighted word inventories and a heritable learning ability.
//! They talk to their neighbours, die according to age and linguistic
//! performance, and breed into empty neighbouring sites.

pub mod experiment;
pub mod lattice;
pub mod model;
pub mod observables;

pub use lattice::{run, ModelParams, Observer, Outcome, RunStatus, Schedule, SimState, Site};
pub use model::{Agent, Inventory, SurvivalParams, WordId};
pub use observables::{ClusterLabeling, LanguageMap, TimeSeriesRow, WindowCounters};
