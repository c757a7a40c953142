//! Energy consumption of IEEE 802.11ah stations under the TIM and page
//! segmentation scheme with RAW slots.
//!
//! [`analytic`] is the closed-form per-DTIM model, [`sim`] a discrete-event
//! simulator of the same MAC, and [`optimize`] searches the N_TIM and DTIM
//! period settings with either backend.

pub mod analytic;
pub mod cli;
pub mod error;
pub mod link_budget;
pub mod optimize;
pub mod report;
pub mod scenario;
pub mod sim;
pub mod timing;

pub use error::{Error, Result};
pub use scenario::Scenario;
