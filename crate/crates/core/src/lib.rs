//! Model checking knowledge in distributed systems.

pub mod pointset;
pub mod protocol;
pub mod runs;
pub mod scenarios;
pub mod random;
pub mod schema;
pub mod eval;
pub mod logic;
pub mod views;

pub use pointset::PointSet;
pub use runs::{AgentId, Event, EventKind, LocalHistory, Point, Run, System, Time};
pub use views::{build_index, AgentSet, IndistIndex, ViewPolicy};
