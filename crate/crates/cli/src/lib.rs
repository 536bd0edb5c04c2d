pub mod description;
pub mod pipeline;
pub mod suites;
