//! Planning toolkit for tabletop rearrangement with overhand pick-and-place.
//!
//! Non-overlapping instances reduce to a traveling-salesman tour over start
//! and goal poses ([`routing`], [`planner::toro_no_tsp`]). Overlapping
//! instances go through the dependency graph ([`depgraph`]): a minimum
//! feedback vertex set ([`fvs`]) fixes which objects visit a buffer, and an
//! exact search orders the resulting actions by travel distance
//! ([`planner::min_dist_plan`]).

pub mod bench;
pub mod bip;
pub mod depgraph;
pub mod error;
pub mod fvs;
pub mod generators;
pub mod geometry;
pub mod model;
pub mod planner;
pub mod routing;

pub use error::{Result, ToroError};
pub use geometry::{dist, discs_overlap, Point2, Rect};
pub use model::{Action, CostModel, Instance, PlaceKind, Plan};
