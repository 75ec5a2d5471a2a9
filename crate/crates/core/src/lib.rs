pub mod cli;
pub mod corpus;
pub mod metrics;
pub mod scaling;
pub mod synthcollab;
