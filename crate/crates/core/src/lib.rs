//! IEEE 802.11ax spatial reuse toolkit.
//!
//! - [`srcore`]: frame classification, thresholds, power restriction, SRPS and PSR rules.
//! - [`propagation`]: path loss, SINR, MCS selection and frame timing.
//! - [`ctmn`]: continuous-time Markov network throughput model.
//! - [`desim`]: discrete-event CSMA/CA simulator with OBSS/PD and two NAVs.
//! - [`scenario`]: toy and random-grid deployments, scenario file parsing.

pub mod ctmn;
pub mod desim;
pub mod propagation;
pub mod scenario;
pub mod srcore;
