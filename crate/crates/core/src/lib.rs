//! Solver for the electric integrated dial-a-ride problem: electric buses
//! carry customers door to door or to and from timetabled transit lines, and
//! recharge at shared chargers. Routes are built by a large neighbourhood
//! search with deterministic-annealing acceptance.

// negated comparisons reject NaN; index loops walk parallel schedule arrays
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod charging;
pub mod error;
pub mod feasibility;
pub mod insertion;
pub mod model;
pub mod oracle;
pub mod problem;
pub mod search;
pub mod solution;
pub mod toolkit;
pub mod transit;

pub use error::{Error, Result};
pub use model::{Bus, Charger, Instance, Params, Point, Request, TransitLine, Window};
pub use problem::Problem;
pub use solution::{KpiReport, Plan, Route, Solution, Stop};
