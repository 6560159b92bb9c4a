//! Controller synthesis for partially observable Markov decision processes
//! under temporal-logic safety constraints over belief distributions.

pub mod ldba;
pub mod learner;
pub mod logic;
pub mod pomdp;
pub mod product;
pub mod value;
