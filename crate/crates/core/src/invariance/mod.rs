//! Implicit and explicit robust controlled invariant sets from lasso input
//! generators, the level-`q` hierarchy, safe hyper-boxes and a sampled
//! invariance test.

mod check;
mod hierarchy;
mod implicit;
mod lasso;
mod safe_box;

pub use check::{admits_input, invariance_check, invariance_check_points, InvarianceReport};
pub use hierarchy::{hierarchy, lasso_pairs, member_bigm, BigMUnion, Hierarchy};
pub use implicit::{closed_form_rows, explicit_rcis, fingerprint, implicit_rcis, ImplicitRcis};
pub use lasso::{lasso_matrices, verify_eventually_periodic, LassoSpec, PeriodicCheck};
pub use safe_box::{is_safe_box, safe_box, BoxMode, BoxProgram, SafeBox};
