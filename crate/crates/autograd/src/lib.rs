//! Reverse-mode automatic differentiation over dense `f64` matrices.
//!
//! A [`Graph`] records one forward pass; [`Graph::backward`] walks it in
//! reverse. Parameters live outside the graph and are registered per pass
//! with [`Graph::param`], so gradients come back indexed by parameter.

pub mod gradcheck;
pub mod graph;
pub mod mat;
pub mod optim;

pub use gradcheck::{check_gradients, relative_error, GradCheckOptions, GradCheckReport};
pub use graph::{sigmoid, softmax_in_place, Fault, Gradients, Graph, Var};
pub use mat::{gemm, matmul, Mat};
pub use optim::{clip_global_norm, Adam};
