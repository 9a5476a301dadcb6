pub mod cgm;
pub mod chart;
pub mod energy;
pub mod error;
pub mod jet;
pub mod geometry;
pub mod minkowski;
pub mod moebius;
pub mod suite;
pub mod surfaces;
pub mod traceless;
pub mod variational;
