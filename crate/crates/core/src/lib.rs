//! Quantifies how much each observed data channel reveals about a protected
//! intersectional profile, and converts that leakage into a price.
//!
//! The pipeline: a [`schema::AttributeSchema`] declares protected dimensions
//! and feature channels; records become a [`batch::RecordBatch`]; each
//! channel is tabulated into a [`joint::JointTable`] whose mutual
//! information with the profile space is the leakage measure; the
//! [`pricing`] module applies the surcharge rule V(X) = c_p + λ·I(X;S) and
//! [`report`] serializes deterministic audit artifacts.
//!
//! All types are immutable after construction and all operations are pure;
//! everything here is safe for unrestricted concurrent use.

pub mod batch;
pub mod bins;
pub mod error;
pub mod estimate;
pub mod info;
pub mod joint;
pub mod pricing;
pub mod report;
pub mod schema;

pub use error::{Error, Result};
