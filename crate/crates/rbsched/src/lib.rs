//! Simulator for a flexible flow shop with a routing buffer between two
//! stages.
//!
//! The routing buffer is a small grid of parking spaces with parallel lanes:
//! buses move forward within a lane or laterally between lanes, and every
//! departure triggers a cascade of follow-up moves (a linkage chain). The
//! crate implements two movement policies for those cascades: picking the
//! chain that minimizes the buffer's total adjacency setup cost, and picking
//! moves at random. It also ships a discrete-event simulator of the whole
//! shop (blocking, sequence-dependent setup times, per-workstation metrics),
//! a batch harness for repeated seeded comparisons of the two policies, and
//! the bundled 22-bus reference instance.

pub mod buffer;
pub mod harness;
pub mod model;
pub mod rng;
pub mod setup;
pub mod sim;

pub use buffer::{BufferGrid, Cell, LinkageChain, Move};
pub use model::{Bus, BusId, BusType, Instance, Minutes, SetupModel};
pub use sim::{ScheduleResult, SchemeConfig};
