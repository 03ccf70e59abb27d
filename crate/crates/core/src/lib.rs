pub mod format;
pub mod grid;
pub mod lp;
pub mod models;
pub mod parametric;
pub mod risk;
pub mod surface;
pub mod tolerance;
