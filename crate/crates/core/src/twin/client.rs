use std::io::{BufRead, BufReader, BufWriter, Write};
use std::net::{TcpStream, ToSocketAddrs};

use super::instrument::{Instrument, WireReply};
use crate::{Error, Result};

/// Protocol client over TCP.
pub struct TwinClient {
    reader: BufReader<TcpStream>,
    writer: BufWriter<TcpStream>,
}

impl TwinClient {
    pub fn connect<A: ToSocketAddrs>(addr: A) -> Result<Self> {
        let stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        Ok(Self {
            reader: BufReader::new(stream.try_clone()?),
            writer: BufWriter::new(stream),
        })
    }

    fn read_line(&mut self) -> Result<String> {
        let mut s = String::new();
        if self.reader.read_line(&mut s)? == 0 {
            return Err(Error::Instrument("connection closed".into()));
        }
        Ok(s.trim_end_matches(['\n', '\r']).to_string())
    }
}

impl Instrument for TwinClient {
    fn exchange(&mut self, line: &str) -> Result<WireReply> {
        writeln!(self.writer, "{line}")?;
        self.writer.flush()?;
        let head = self.read_line()?;
        let is_meas = line
            .split_whitespace()
            .next()
            .is_some_and(|v| v.eq_ignore_ascii_case("MEAS"));
        let mut samples = Vec::new();
        if is_meas {
            if let Some(n) = head.strip_prefix("OK ") {
                let n: usize = n
                    .trim()
                    .parse()
                    .map_err(|_| Error::Instrument(format!("bad MEAS header {head:?}")))?;
                samples.reserve(n);
                for _ in 0..n {
                    let l = self.read_line()?;
                    samples.push(
                        l.parse()
                            .map_err(|_| Error::Instrument(format!("bad sample {l:?}")))?,
                    );
                }
                let end = self.read_line()?;
                if end != "END" {
                    return Err(Error::Instrument(format!("expected END, got {end:?}")));
                }
            }
        }
        Ok(WireReply {
            line: head,
            samples,
        })
    }
}
