//! Argument-based fairness assurance: assurance cases, group fairness
//! metrics, transparency artifacts, evidence binding and RAID export.

pub mod artifacts;
pub mod cli;
pub mod assurance;
pub mod doc;
pub mod evidence;
pub mod metrics;
pub mod risk;
