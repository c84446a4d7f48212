//! Integer linear programming feasibility through three lenses: solution
//! graphs, path decompositions of bounded width, and a finite automaton whose
//! Parikh image is the solution set. A brute-force oracle cross-checks all of
//! them on small instances.

pub mod automaton;
pub mod corpus;
pub mod decomposition;
pub mod instance;
pub mod oracle;
pub mod solution_graph;

pub use instance::{parse_instance, IlpInstance, Solution};
