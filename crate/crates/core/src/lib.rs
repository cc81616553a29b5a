#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cubical;
pub mod execution;
pub mod expr;
pub mod field;
pub mod guard;
pub mod guard_index;
pub mod hybrid;
pub mod index;
pub mod region;
pub mod report;
pub mod scenario;
pub mod semiflow;
mod vecmath;
pub mod verify;
pub mod winding;
pub mod zoo;
