#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod bellman_harris;
pub mod cli;
pub mod contour;
pub mod luria_delbruck;
pub mod mellin;
pub mod quad;
pub mod rng;
pub mod specfun;
pub mod stable;
