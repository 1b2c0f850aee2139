pub mod classify;
pub mod complex;
pub mod eisenstein;
pub mod hecke;
pub mod linalg;
pub mod sharbly;
pub mod voronoi;
