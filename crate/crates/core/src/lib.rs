//! Second-order asymptotics of a double, non-semisimple, unit-circle
//! multiplier of a 4×4 linear Hamiltonian system under perturbation.

// `!(x > tol)` style guards are used on purpose so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bifurcation;
pub mod cli;
pub mod expr;
pub mod flow;
pub mod matrix;
pub mod pipeline;
pub mod spectral;
pub mod verify;
