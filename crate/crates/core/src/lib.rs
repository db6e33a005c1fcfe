//! Simulation and device-independent randomness certification for the
//! elegant Bell inequality.
//!
//! The pipeline: build a [`scenario::Strategy`], compute its
//! [`scenario::Behavior`] (or estimate one from counts), evaluate the
//! functional with [`ebi::ebi_value`], and run both certification tests with
//! [`certifier::certify`]. The [`adversary`] module builds explicit
//! eavesdropper models to check that whenever both tests pass, Eve's
//! guessing probability is `1/4`. [`optimizer`] runs seesaw maximization.
//!
//! ```
//! use ebicert::certifier::{certify, CertTolerances};
//! use ebicert::ebi::reference_strategy;
//! use ebicert::scenario::behavior_of;
//!
//! let behavior = behavior_of(&reference_strategy()).unwrap();
//! let verdict = certify(&behavior, &CertTolerances::default()).unwrap();
//! assert_eq!(verdict.certified_bits, 2.0);
//! ```

pub mod adversary;
pub mod certifier;
pub mod ebi;
pub mod optimizer;
pub mod qlin;
pub mod random;
pub mod report;
pub mod scenario;
