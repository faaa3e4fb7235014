//! Exact desk-scale experiments on Cayley graphs: quasi-geodesics, Morse
//! gauges, translation lengths and free-product projections.

pub mod cli;
pub mod error;
pub mod fixtures;
pub mod groups;
pub mod morse;
pub mod paths;
pub mod rat;
pub mod relhyp;
pub mod verify;

pub use error::{LabError, Result};
pub use groups::{parse_group, Ball, GroupDescriptor, Letter, MarkedGroup, Word};
