//! Critical values for Student's t test that stay valid when the errors are
//! only known to be Gaussian scale mixtures or symmetric.
//!
//! ```
//! use robust_t::gmix::g_critical_value;
//!
//! let x = g_critical_value(11, 0.025).unwrap();
//! assert!((x - 2.228).abs() < 1e-3);
//! ```

pub mod error;
pub mod gmix;
pub mod mcsim;
pub mod specfun;
pub mod symt;
pub mod transform;

pub use error::{Error, Result};
pub use gmix::{g_critical_value, g_tail, generate_table, phi_g, CriticalTable};
pub use mcsim::{type_one_error, MixtureSpec, Model};
pub use specfun::{DegreesOfFreedom, Probability};
pub use symt::{s_critical_value, s_tail_exact};
pub use transform::{a_from_x, x_from_a};
