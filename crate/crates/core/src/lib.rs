pub mod formulation;
pub mod milp;
pub mod network;
pub mod pipeline;
pub mod scenario;
pub mod solver;
pub mod validator;
