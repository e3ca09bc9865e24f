//! Desk-scale O-RAN slicing testbed.
//!
//! * [`sim`] - one base station, three slices, TTI-level MAC scheduling.
//! * [`kpm`] - KPM windows, the autoencoder state encoder, trace ingestion.
//! * [`agent`] - reward, action catalogs and a PPO actor-critic.
//! * [`metrics`] - the per-run KPM and action log.
//! * [`ric`] - subscriptions, the line-delimited E2-style protocol, xApp
//!   hosting and the lockstep control loop.
//! * [`bench`] - experiment configs, the 12-xApp matrix, statistics and reports.

pub mod nn;
pub mod sim;
pub mod kpm;
pub mod agent;
pub mod metrics;
pub mod ric;
pub mod bench;
