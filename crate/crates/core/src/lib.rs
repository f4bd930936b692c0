pub mod dsm;
pub mod model;
pub mod capacity;
pub mod grid;
pub mod thermal;
pub mod planner;
pub mod fixture;
pub mod scenario;
pub mod synth;
pub mod pipeline;
pub mod reports;
