pub mod boolfun;
pub mod census;
pub mod compile;
pub mod lattice;
pub mod niceness;
pub mod perm;
pub mod sat;
