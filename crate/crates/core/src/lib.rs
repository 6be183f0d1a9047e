pub mod error;
pub mod io;
pub mod lattice;
pub mod layout;
pub mod patch;
pub mod quasiharm;
pub mod solver;
pub mod sparse;
pub mod svg;
pub mod trigeom;
