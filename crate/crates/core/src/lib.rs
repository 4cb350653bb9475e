//! Switched-antenna web radio gateway.
//!
//! At boot the gateway scans through each antenna of a (simulated) RF
//! front end, keeps the one with the strongest RSSI toward the configured
//! access point, and then runs an internet radio: a station preset store
//! driven by request-path commands, an ICY stream client that feeds audio
//! bytes to a sink, and an emulated three-line scrolling display.

pub mod display;
pub mod gateway;
pub mod preset;
pub mod rf;
pub mod selector;
pub mod stream;
pub mod sweep;
