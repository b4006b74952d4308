pub mod calculus;
pub mod implicit;
pub mod ode;
pub mod problems;
pub mod solver;
pub mod spaces;
pub mod verify;
