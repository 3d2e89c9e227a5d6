//! Desk-scale hybrid post-quantum cryptography suite.

pub mod primitives;
pub mod codec;
pub mod lattice;
pub mod code;
pub mod mq;
pub mod hashsig;
pub mod legacy;
pub mod hybrid;
pub mod handshake;
pub mod audit;
pub mod netsim;
pub mod keyfile;
pub mod bench;
