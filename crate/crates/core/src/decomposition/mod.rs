//! Width-bounded path decompositions of solution graphs.
//!
//! [`schedule`] orders the unary vertices of a solution, [`build_special_form`]
//! turns that order into vertex and edge blocks, and [`decompose`] reads the
//! bags off the blocks. Every bag holds at most two vertices per variable
//! label (plus the right-hand-side vertex when `b ≠ 0`), so the width is at
//! most `2n`, and at most `2n - 1` for homogeneous systems.

mod path;
mod schedule;
mod special_form;

pub use path::{
    decompose, validate_decomposition, DecompositionVerdict, DecompositionViolation,
    PathDecomposition,
};
pub use schedule::{schedule, ScheduleError, ScheduleTrace, Step};
pub use special_form::{build_special_form, SpecialFormError, SpecialFormGraph};

/// The width guarantee for an instance with `n` variables.
pub fn width_bound(n: usize, rhs_is_zero: bool) -> usize {
    if rhs_is_zero {
        2 * n - 1
    } else {
        2 * n
    }
}
