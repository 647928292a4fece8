//! Strong-converse and error exponents of discrete memoryless channels,
//! computed both in Gallager's δ-parametrized form and in divergence
//! (Dueck–Körner / sphere-packing) form, with brute-force oracles and a
//! verifier that checks the two forms against each other.
//!
//! All information quantities are in nats.

pub mod channel;
pub mod channel_file;
pub mod curve;
pub mod error;
pub mod ext_real;
pub mod gallager;
pub mod kl;
pub mod optim;
pub mod oracle;
pub mod params;
pub mod support;
pub mod verifier;

pub use channel::{
    conditional_divergence, make_channel, mutual_information, output_distribution, Channel,
    Distribution,
};
pub use error::{Error, Result};
pub use ext_real::ExtReal;
pub use params::{DeltaParam, RatePoint};
