//! Interoperable 802.15.4 broadcasting across four sensor platforms
//! (Arduino + XBee, SunSPOT, TelosB, iSense) and a discrete-event model of
//! the rate/range testbed built on top of it.

#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::len_without_is_empty)]

pub mod device;
pub mod error;
pub mod frame;
pub mod harness;
pub mod platform;
pub mod rssi;
pub mod sim;

pub use error::CodecError;
pub use platform::PlatformId;
