//! Storage, backends, batch runs and the HTTP service around
//! `crashviz-core`.

pub mod client;
pub mod corpus;
pub mod pipeline;
pub mod ratings;
pub mod record_io;
pub mod serve;
pub mod sheets;
pub mod store;
pub mod template_io;

pub use crashviz_core as core;
