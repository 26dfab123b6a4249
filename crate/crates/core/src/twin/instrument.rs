use std::path::Path;

use super::channel::{Channel, ChannelStatus, Mode};
use super::protocol::format_sig;
use super::state::InstrumentState;
use crate::noise::Trace;
use crate::{Error, Result};

/// Raw reply to one request: the status line plus, for `MEAS`, the
/// samples.
#[derive(Debug, Clone, PartialEq)]
pub struct WireReply {
    pub line: String,
    pub samples: Vec<f64>,
}

impl WireReply {
    fn ok(self) -> Result<Self> {
        if self.line.starts_with("ERR") {
            Err(Error::Instrument(self.line))
        } else {
            Ok(self)
        }
    }
}

fn field<T: std::str::FromStr>(tok: Option<&str>, line: &str) -> Result<T> {
    tok.and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::Instrument(format!("unexpected reply {line:?}")))
}

/// A handle that speaks the line protocol. Typed helpers are provided on
/// top of [`Instrument::exchange`]; implementations may override them.
pub trait Instrument {
    /// Sends one request line and returns its reply.
    fn exchange(&mut self, line: &str) -> Result<WireReply>;

    fn identify(&mut self) -> Result<String> {
        Ok(self.exchange("*IDN?")?.ok()?.line)
    }

    /// Returns the applied output at the reply's 1 uV resolution.
    fn set_voltage(&mut self, ch: Channel, v: f64) -> Result<f64> {
        let r = self.exchange(&format!("SET {ch} {v}"))?.ok()?;
        field(r.line.strip_prefix("OK "), &r.line)
    }

    fn get_voltage(&mut self, ch: Channel) -> Result<f64> {
        let r = self.exchange(&format!("GET {ch}"))?.ok()?;
        field(Some(r.line.as_str()), &r.line)
    }

    fn ramp(&mut self, ch: Channel, target: f64, rate: f64) -> Result<()> {
        self.exchange(&format!("RAMP {ch} {target} {rate}"))?.ok()?;
        Ok(())
    }

    fn measure(&mut self, ch: Channel, fs: f64, n: usize) -> Result<Trace> {
        let r = self.exchange(&format!("MEAS {ch} {fs} {n}"))?.ok()?;
        Trace::new(fs, 0.0, r.samples)
    }

    fn status(&mut self, ch: Channel) -> Result<ChannelStatus> {
        let r = self.exchange(&format!("STAT {ch}"))?.ok()?;
        let mut it = r.line.split_whitespace();
        let mode = match it.next() {
            Some("CV") => Mode::CV,
            Some("CC") => Mode::CC,
            _ => return Err(Error::Instrument(format!("unexpected reply {:?}", r.line))),
        };
        Ok(ChannelStatus {
            mode,
            applied_v: field(it.next(), &r.line)?,
            current_a: field(it.next(), &r.line)?,
        })
    }

    fn set_load(&mut self, ch: Channel, ohms: Option<f64>) -> Result<()> {
        let arg = ohms.map_or("INF".to_string(), |r| r.to_string());
        self.exchange(&format!("RLOAD {ch} {arg}"))?.ok()?;
        Ok(())
    }

    fn save(&mut self, path: &Path) -> Result<()> {
        self.exchange(&format!("SAVE {}", path.display()))?.ok()?;
        Ok(())
    }

    fn load(&mut self, path: &Path) -> Result<()> {
        self.exchange(&format!("LOAD {}", path.display()))?.ok()?;
        Ok(())
    }
}

/// In-process twin. Typed calls go straight to the state machine and keep
/// full precision; `exchange` runs the text protocol.
#[derive(Debug, Clone)]
pub struct LocalTwin {
    pub state: InstrumentState,
}

impl LocalTwin {
    pub fn new(state: InstrumentState) -> Self {
        Self { state }
    }
}

impl Instrument for LocalTwin {
    fn exchange(&mut self, line: &str) -> Result<WireReply> {
        let lines = self.state.apply_command(line).into_lines();
        let mut it = lines.into_iter();
        let head = it.next().unwrap_or_default();
        let samples = it
            .filter(|l| l != "END")
            .map(|l| {
                l.parse()
                    .map_err(|_| Error::Instrument(format!("bad sample {l:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(WireReply {
            line: head,
            samples,
        })
    }

    fn set_voltage(&mut self, ch: Channel, v: f64) -> Result<f64> {
        self.state.set_voltage(ch, v)
    }

    fn get_voltage(&mut self, ch: Channel) -> Result<f64> {
        Ok(self.state.get_voltage(ch))
    }

    fn ramp(&mut self, ch: Channel, target: f64, rate: f64) -> Result<()> {
        self.state.ramp(ch, target, rate).map(|_| ())
    }

    fn measure(&mut self, ch: Channel, fs: f64, n: usize) -> Result<Trace> {
        self.state.measure_trace(ch, fs, n)
    }

    fn status(&mut self, ch: Channel) -> Result<ChannelStatus> {
        Ok(self.state.status(ch))
    }

    fn set_load(&mut self, ch: Channel, ohms: Option<f64>) -> Result<()> {
        self.state.set_load(ch, ohms)
    }

    fn save(&mut self, path: &Path) -> Result<()> {
        self.state.save(path)
    }

    fn load(&mut self, path: &Path) -> Result<()> {
        self.state.load(path)
    }
}

impl std::fmt::Display for ChannelStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} {} {}",
            self.mode,
            format_sig(self.applied_v, 9),
            format_sig(self.current_a, 9)
        )
    }
}
