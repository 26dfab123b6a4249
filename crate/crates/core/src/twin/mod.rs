//! Two-channel instrument twin: state machine, line protocol, persistence
//! and TCP service.
//!
//! Wire grammar (UTF-8, `\n`-terminated, at most 256 bytes per line, one
//! reply per request):
//!
//! ```text
//! *IDN?                      -> QPOWER-TWIN,2CH,<version>
//! SET <ch> <volts>           -> OK <applied>
//! GET <ch>                   -> <applied, 9 significant digits>
//! RAMP <ch> <volts> <rate>   -> OK
//! MEAS <ch> <fs> <n>         -> OK <n>, n sample lines, END
//! STAT <ch>                  -> CV|CC <applied> <amps>
//! RLOAD <ch> <ohms|INF>      -> OK
//! SAVE <path> / LOAD <path>  -> OK | ERR IO
//! ```
//!
//! Errors are `ERR SYNTAX`, `ERR RANGE`, `ERR CHAN` and `ERR IO`.

mod channel;
mod client;
mod config;
mod instrument;
mod persist;
mod protocol;
mod server;
mod state;

pub use channel::{current_limit, Channel, ChannelState, ChannelStatus, Mode, RampPlan};
pub use client::TwinClient;
pub use config::TwinConfig;
pub use instrument::{Instrument, LocalTwin, WireReply};
pub use persist::{Snapshot, SCHEMA_VERSION};
pub use protocol::{format_sig, parse_command, Command, ProtocolError};
pub use server::{JournalEntry, TwinServer};
pub use state::{Clock, InstrumentState, MeasureJob, Outcome, RampCompletion};

/// Identity reported by `*IDN?`.
pub const IDN: &str = concat!("QPOWER-TWIN,2CH,", env!("CARGO_PKG_VERSION"));
pub const DEFAULT_PORT: u16 = 5025;
/// Longest accepted command line, excluding the newline.
pub const MAX_LINE_BYTES: usize = 256;
/// Ramp update interval, s.
pub const UPDATE_INTERVAL_S: f64 = 1e-3;
/// Largest record a single MEAS may request.
pub const MAX_MEAS_SAMPLES: usize = 1 << 24;
