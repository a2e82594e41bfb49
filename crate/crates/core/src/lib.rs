pub mod closed_forms;
pub mod dual;
pub mod error;
pub mod estimation;
pub mod fixation_line;
pub mod lambda;
pub mod lookdown;
pub mod parallel;
pub mod quadrature;
pub mod rng;
pub mod special;
