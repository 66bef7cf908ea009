//! Contrastive explanations for decision trees via linear constraint reasoning.

pub mod constraint;
pub mod rational;
pub mod reasoner;
pub mod schema;
pub mod session;
pub mod tree;
