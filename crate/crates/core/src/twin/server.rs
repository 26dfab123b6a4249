use std::io::{BufRead, BufReader, BufWriter, Write};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{mpsc, Arc, Mutex};
use std::thread::JoinHandle;

use super::state::{InstrumentState, Outcome};
use super::{protocol::ProtocolError, MAX_LINE_BYTES};
use crate::noise::trace::format_sample;
use crate::Result;

/// One accepted request, in the order the state machine applied it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JournalEntry {
    pub client: u64,
    /// Request index within that client's connection.
    pub seq: u64,
    pub line: String,
}

enum Request {
    Line {
        client: u64,
        seq: u64,
        line: String,
        reply: mpsc::Sender<Outcome>,
    },
    Stop(mpsc::Sender<InstrumentState>),
}

/// TCP front end. One actor thread owns the state and applies requests in
/// arrival order; each connection gets its own thread, which also runs
/// the synthesis for its `MEAS` requests.
pub struct TwinServer {
    addr: SocketAddr,
    tx: mpsc::Sender<Request>,
    stop: Arc<AtomicBool>,
    acceptor: Option<JoinHandle<()>>,
    actor: Option<JoinHandle<()>>,
    journal: Option<Arc<Mutex<Vec<JournalEntry>>>>,
    conns: Arc<Mutex<Vec<TcpStream>>>,
}

impl TwinServer {
    /// Binds `addr` (port 0 picks a free port) and starts serving.
    /// With `journal` set, every applied request is recorded.
    pub fn spawn<A: ToSocketAddrs>(state: InstrumentState, addr: A, journal: bool) -> Result<Self> {
        let listener = TcpListener::bind(addr)?;
        let addr = listener.local_addr()?;
        let (tx, rx) = mpsc::channel::<Request>();
        let journal = journal.then(|| Arc::new(Mutex::new(Vec::new())));

        let actor_journal = journal.clone();
        let actor = std::thread::spawn(move || {
            let mut state = state;
            for req in rx {
                match req {
                    Request::Line {
                        client,
                        seq,
                        line,
                        reply,
                    } => {
                        if let Some(j) = &actor_journal {
                            j.lock().unwrap().push(JournalEntry {
                                client,
                                seq,
                                line: line.clone(),
                            });
                        }
                        let _ = reply.send(state.apply_command(&line));
                    }
                    Request::Stop(back) => {
                        let _ = back.send(state);
                        return;
                    }
                }
            }
        });

        let stop = Arc::new(AtomicBool::new(false));
        let conns = Arc::new(Mutex::new(Vec::new()));
        let acceptor = {
            let (stop, conns, tx) = (stop.clone(), conns.clone(), tx.clone());
            std::thread::spawn(move || {
                let mut next_id = 0u64;
                for stream in listener.incoming() {
                    if stop.load(Ordering::SeqCst) {
                        break;
                    }
                    let Ok(stream) = stream else { continue };
                    let _ = stream.set_nodelay(true);
                    if let Ok(c) = stream.try_clone() {
                        conns.lock().unwrap().push(c);
                    }
                    let tx = tx.clone();
                    let id = next_id;
                    next_id += 1;
                    std::thread::spawn(move || {
                        if let Err(e) = handle_client(stream, tx, id) {
                            log::debug!("client {id}: {e}");
                        }
                    });
                }
            })
        };
        log::info!("twin listening on {addr}");
        Ok(Self {
            addr,
            tx,
            stop,
            acceptor: Some(acceptor),
            actor: Some(actor),
            journal,
            conns,
        })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    /// Requests applied so far, in application order (empty without a
    /// journal).
    pub fn journal(&self) -> Vec<JournalEntry> {
        self.journal
            .as_ref()
            .map(|j| j.lock().unwrap().clone())
            .unwrap_or_default()
    }

    /// Blocks until the acceptor exits (i.e. forever, for the CLI).
    pub fn wait(mut self) {
        if let Some(h) = self.acceptor.take() {
            let _ = h.join();
        }
    }

    /// Stops accepting, drops open connections and returns the final state.
    pub fn shutdown(mut self) -> Option<InstrumentState> {
        self.stop_inner()
    }

    fn stop_inner(&mut self) -> Option<InstrumentState> {
        let acceptor = self.acceptor.take()?;
        self.stop.store(true, Ordering::SeqCst);
        // Wake the blocking accept.
        let _ = TcpStream::connect(self.addr);
        let _ = acceptor.join();
        for c in self.conns.lock().unwrap().drain(..) {
            let _ = c.shutdown(Shutdown::Both);
        }
        let (back_tx, back_rx) = mpsc::channel();
        let _ = self.tx.send(Request::Stop(back_tx));
        let state = back_rx.recv().ok();
        if let Some(h) = self.actor.take() {
            let _ = h.join();
        }
        state
    }
}

impl Drop for TwinServer {
    fn drop(&mut self) {
        self.stop_inner();
    }
}

/// Reads one `\n`-terminated line, keeping at most `MAX_LINE_BYTES + 1`
/// bytes. Returns `None` at EOF and flags lines that were too long.
fn read_bounded_line<R: BufRead>(r: &mut R, buf: &mut Vec<u8>) -> std::io::Result<Option<bool>> {
    buf.clear();
    let mut overflow = false;
    let mut seen_any = false;
    loop {
        let chunk = r.fill_buf()?;
        if chunk.is_empty() {
            return Ok(if seen_any { Some(overflow) } else { None });
        }
        seen_any = true;
        let (take, done) = match chunk.iter().position(|&b| b == b'\n') {
            Some(i) => (i + 1, true),
            None => (chunk.len(), false),
        };
        let room = (MAX_LINE_BYTES + 2).saturating_sub(buf.len());
        buf.extend_from_slice(&chunk[..take.min(room)]);
        r.consume(take);
        if done {
            break;
        }
    }
    while matches!(buf.last(), Some(b'\n' | b'\r')) {
        buf.pop();
    }
    overflow |= buf.len() > MAX_LINE_BYTES;
    Ok(Some(overflow))
}

fn handle_client(stream: TcpStream, tx: mpsc::Sender<Request>, client: u64) -> std::io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut writer = BufWriter::new(stream);
    let mut buf = Vec::new();
    let mut seq = 0u64;
    while let Some(overflow) = read_bounded_line(&mut reader, &mut buf)? {
        let line = match (overflow, std::str::from_utf8(&buf)) {
            (false, Ok(s)) => s.to_string(),
            _ => {
                writeln!(writer, "{}", ProtocolError::Syntax)?;
                writer.flush()?;
                continue;
            }
        };
        let (reply_tx, reply_rx) = mpsc::channel();
        let req = Request::Line {
            client,
            seq,
            line,
            reply: reply_tx,
        };
        seq += 1;
        if tx.send(req).is_err() {
            break;
        }
        let Ok(outcome) = reply_rx.recv() else { break };
        write_outcome(&mut writer, outcome)?;
        writer.flush()?;
    }
    Ok(())
}

fn write_outcome<W: Write>(w: &mut W, outcome: Outcome) -> std::io::Result<()> {
    match outcome {
        Outcome::Reply(line) => writeln!(w, "{line}"),
        Outcome::Measure(job) => match job.run() {
            Ok(trace) => {
                writeln!(w, "OK {}", trace.len())?;
                for s in &trace.samples {
                    writeln!(w, "{}", format_sample(*s))?;
                }
                writeln!(w, "END")
            }
            Err(_) => writeln!(w, "{}", ProtocolError::Range),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounded_lines() {
        let long = "x".repeat(400);
        let text = format!("SET 1 2\r\n{long}\nGET 1");
        let mut r = BufReader::with_capacity(16, text.as_bytes());
        let mut buf = Vec::new();
        assert_eq!(read_bounded_line(&mut r, &mut buf).unwrap(), Some(false));
        assert_eq!(buf, b"SET 1 2");
        assert_eq!(read_bounded_line(&mut r, &mut buf).unwrap(), Some(true));
        assert_eq!(read_bounded_line(&mut r, &mut buf).unwrap(), Some(false));
        assert_eq!(buf, b"GET 1");
        assert_eq!(read_bounded_line(&mut r, &mut buf).unwrap(), None);
    }
}
