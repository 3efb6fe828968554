//! Shapley attribution of a unit's output change to the change in its
//! mechanism and the change in its inputs.
//!
//! A unit produces `y⁽¹⁾ = f⁽¹⁾(x⁽¹⁾)` in a background scenario and
//! `y⁽²⁾ = f⁽²⁾(x⁽²⁾)` in a foreground scenario. The crate splits
//! `Δy = y⁽²⁾ − y⁽¹⁾` among the mechanism and the inputs by averaging the
//! effect of switching each cause from its background to its foreground
//! value over all switching orders.
//!
//! ```
//! use delta_attrib::{attribution, ChangeInstance, LinearMechanism, Player};
//!
//! let inst = ChangeInstance::new(
//!     vec![1.0],
//!     vec![2.0],
//!     LinearMechanism::new(vec![2.0]).into_ref(),
//!     LinearMechanism::new(vec![3.0]).into_ref(),
//! )?;
//! let r = attribution::coarse_attrib(&inst)?;
//! assert_eq!(r.credit(Player::Mechanism), 1.5);
//! assert_eq!(r.credit(Player::InputBundle), 2.5);
//! # Ok::<(), delta_attrib::Error>(())
//! ```

pub mod attribution;
pub mod casestudy;
pub mod error;
pub mod experiments;
pub mod fcm;
pub mod format;
pub mod instance;
pub mod mechanism;
pub mod model_file;
pub mod models;

pub use error::{Error, Result};
pub use instance::{AttributionResult, ChangeInstance, Method, Player};
pub use mechanism::{FnMechanism, LinearMechanism, Mechanism, MechanismRef, ScaledMechanism};
