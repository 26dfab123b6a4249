#![allow(dead_code)]

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpStream};

use qpower_twin::twin::{InstrumentState, JournalEntry};

/// Sends `lines` over one connection and returns each request with its full
/// reply (status line, samples and END for MEAS).
pub fn scripted_client(addr: SocketAddr, lines: &[String]) -> Vec<(String, Vec<String>)> {
    let stream = TcpStream::connect(addr).unwrap();
    stream.set_nodelay(true).unwrap();
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut writer = stream;
    let mut out = Vec::new();
    for line in lines {
        writeln!(writer, "{line}").unwrap();
        writer.flush().unwrap();
        let mut reply = Vec::new();
        let mut s = String::new();
        reader.read_line(&mut s).unwrap();
        let head = s.trim_end().to_string();
        reply.push(head.clone());
        if line.starts_with("MEAS") && head.starts_with("OK ") {
            let n: usize = head[3..].parse().unwrap();
            for _ in 0..=n {
                s.clear();
                reader.read_line(&mut s).unwrap();
                reply.push(s.trim_end().to_string());
            }
        }
        out.push((line.clone(), reply));
    }
    out
}

/// Script for client `id`: interleaves mutations of both channels with
/// reads and short measurements.
pub fn client_script(id: usize, steps: usize) -> Vec<String> {
    (0..steps)
        .map(|k| {
            let ch = 1 + (id + k) % 2;
            let v = ((id * 31 + k * 7) % 140) as f64 / 10.0 - 7.0;
            match k % 5 {
                0 => format!("SET {ch} {v}"),
                1 => format!("GET {ch}"),
                2 => format!("MEAS {ch} 1000000 16"),
                3 => format!("STAT {ch}"),
                _ => format!("RAMP {ch} {v} 1000"),
            }
        })
        .collect()
}

/// Replays the journal serially on `fresh` and checks that every client saw
/// exactly the replies of that serial order.
pub fn consistent_with_journal(
    fresh: InstrumentState,
    journal: &[JournalEntry],
    seen: &[Vec<(String, Vec<String>)>],
) -> bool {
    let mut st = fresh;
    let mut replay: HashMap<(u64, u64), Vec<String>> = HashMap::new();
    for e in journal {
        replay.insert((e.client, e.seq), st.apply_command(&e.line).into_lines());
    }
    // Client ids are assigned in accept order, which need not match the
    // script index, so match each script to the client id whose requests
    // it sent.
    let mut by_client: HashMap<u64, Vec<&JournalEntry>> = HashMap::new();
    for e in journal {
        by_client.entry(e.client).or_default().push(e);
    }
    let total: usize = seen.iter().map(|s| s.len()).sum();
    if total != journal.len() {
        return false;
    }
    seen.iter().all(|script| {
        by_client.iter().any(|(&cid, entries)| {
            entries.len() == script.len()
                && script.iter().enumerate().all(|(i, (line, reply))| {
                    entries[i].line == *line && replay.get(&(cid, i as u64)) == Some(reply)
                })
        })
    })
}
