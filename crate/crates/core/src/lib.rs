// Negated float comparisons are deliberate: they send NaN down the error path.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod delay_solver;
pub mod report_cli;
pub mod special_functions;
pub mod stability_criteria;
pub mod system_model;
pub mod tempered_operators;
