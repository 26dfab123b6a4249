use super::{Channel, MAX_LINE_BYTES};
use crate::noise::trace::format_sample;
use crate::noise::Trace;
use crate::Error;

/// Parsed request.
#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Idn,
    Set {
        ch: Channel,
        volts: f64,
    },
    Get {
        ch: Channel,
    },
    Ramp {
        ch: Channel,
        volts: f64,
        rate: f64,
    },
    Meas {
        ch: Channel,
        fs: f64,
        n: usize,
    },
    Stat {
        ch: Channel,
    },
    /// Test-harness load, `None` for open circuit.
    RLoad {
        ch: Channel,
        ohms: Option<f64>,
    },
    Save {
        path: String,
    },
    Load {
        path: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProtocolError {
    Syntax,
    Range,
    Chan,
    Io,
}

impl std::fmt::Display for ProtocolError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ProtocolError::Syntax => "ERR SYNTAX",
            ProtocolError::Range => "ERR RANGE",
            ProtocolError::Chan => "ERR CHAN",
            ProtocolError::Io => "ERR IO",
        })
    }
}

impl From<&Error> for ProtocolError {
    fn from(e: &Error) -> Self {
        match e {
            Error::Io(_) | Error::Schema(_) => ProtocolError::Io,
            _ => ProtocolError::Range,
        }
    }
}

fn channel(tok: &str) -> Result<Channel, ProtocolError> {
    let n: i64 = tok.parse().map_err(|_| ProtocolError::Syntax)?;
    u8::try_from(n)
        .ok()
        .and_then(|n| Channel::new(n).ok())
        .ok_or(ProtocolError::Chan)
}

fn number(tok: &str) -> Result<f64, ProtocolError> {
    let v: f64 = tok.parse().map_err(|_| ProtocolError::Syntax)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ProtocolError::Range)
    }
}

/// Parses one request line (trailing `\r`/`\n` ignored).
pub fn parse_command(line: &str) -> Result<Command, ProtocolError> {
    let line = line.trim_end_matches(['\n', '\r']);
    if line.len() > MAX_LINE_BYTES {
        return Err(ProtocolError::Syntax);
    }
    let line = line.trim();
    let (verb, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
    let rest = rest.trim();
    let args: Vec<&str> = rest.split_whitespace().collect();
    let verb = verb.to_ascii_uppercase();
    let want = |n: usize| {
        if args.len() == n {
            Ok(())
        } else {
            Err(ProtocolError::Syntax)
        }
    };
    match verb.as_str() {
        "*IDN?" => {
            want(0)?;
            Ok(Command::Idn)
        }
        "SET" => {
            want(2)?;
            Ok(Command::Set {
                ch: channel(args[0])?,
                volts: number(args[1])?,
            })
        }
        "GET" => {
            want(1)?;
            Ok(Command::Get {
                ch: channel(args[0])?,
            })
        }
        "RAMP" => {
            want(3)?;
            Ok(Command::Ramp {
                ch: channel(args[0])?,
                volts: number(args[1])?,
                rate: number(args[2])?,
            })
        }
        "MEAS" => {
            want(3)?;
            let ch = channel(args[0])?;
            let fs = number(args[1])?;
            let n: usize = args[2].parse().map_err(|_| ProtocolError::Syntax)?;
            Ok(Command::Meas { ch, fs, n })
        }
        "STAT" => {
            want(1)?;
            Ok(Command::Stat {
                ch: channel(args[0])?,
            })
        }
        "RLOAD" => {
            want(2)?;
            let ch = channel(args[0])?;
            let ohms = if args[1].eq_ignore_ascii_case("INF") {
                None
            } else {
                Some(number(args[1])?)
            };
            Ok(Command::RLoad { ch, ohms })
        }
        "SAVE" | "LOAD" => {
            if rest.is_empty() {
                return Err(ProtocolError::Syntax);
            }
            let path = rest.to_string();
            Ok(if verb == "SAVE" {
                Command::Save { path }
            } else {
                Command::Load { path }
            })
        }
        _ => Err(ProtocolError::Syntax),
    }
}

/// `OK n`, the samples, `END`.
pub(crate) fn measurement_lines(trace: &Trace) -> Vec<String> {
    let mut out = Vec::with_capacity(trace.len() + 2);
    out.push(format!("OK {}", trace.len()));
    out.extend(trace.samples.iter().map(|&s| format_sample(s)));
    out.push("END".into());
    out
}

/// `%g`-style formatting with `digits` significant digits.
pub fn format_sig(v: f64, digits: usize) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let sci = format!("{:.*e}", digits - 1, v);
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if exp < -5 || exp >= digits as i32 {
        let m = mantissa.trim_end_matches('0').trim_end_matches('.');
        return format!("{m}e{exp}");
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    let fixed = format!("{v:.decimals$}");
    if fixed.contains('.') {
        fixed
            .trim_end_matches('0')
            .trim_end_matches('.')
            .to_string()
    } else {
        fixed
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_grammar() {
        assert_eq!(parse_command("*IDN?\n"), Ok(Command::Idn));
        assert_eq!(
            parse_command("set 2 -1.5"),
            Ok(Command::Set {
                ch: Channel::TWO,
                volts: -1.5
            })
        );
        assert_eq!(
            parse_command("MEAS 1 1e6 1000"),
            Ok(Command::Meas {
                ch: Channel::ONE,
                fs: 1e6,
                n: 1000
            })
        );
        assert_eq!(
            parse_command("SAVE /tmp/a b.json"),
            Ok(Command::Save {
                path: "/tmp/a b.json".into()
            })
        );
        assert_eq!(
            parse_command("RLOAD 1 inf"),
            Ok(Command::RLoad {
                ch: Channel::ONE,
                ohms: None
            })
        );
    }

    #[test]
    fn error_codes() {
        assert_eq!(parse_command("SET 1"), Err(ProtocolError::Syntax));
        assert_eq!(parse_command("SET 1 abc"), Err(ProtocolError::Syntax));
        assert_eq!(parse_command("SET 0 1"), Err(ProtocolError::Chan));
        assert_eq!(parse_command("SET 300 1"), Err(ProtocolError::Chan));
        assert_eq!(parse_command("SET x 1"), Err(ProtocolError::Syntax));
        assert_eq!(parse_command("SET 1 inf"), Err(ProtocolError::Range));
        assert_eq!(parse_command("MEAS 1 1e6 -3"), Err(ProtocolError::Syntax));
        assert_eq!(parse_command("SAVE"), Err(ProtocolError::Syntax));
        assert_eq!(parse_command(""), Err(ProtocolError::Syntax));
        let long = format!("SET 1 {}", "1".repeat(300));
        assert_eq!(parse_command(&long), Err(ProtocolError::Syntax));
    }

    #[test]
    fn significant_digits() {
        assert_eq!(format_sig(3.299_993_324_279_11, 9), "3.29999332");
        assert_eq!(format_sig(7.0, 9), "7");
        assert_eq!(format_sig(-6.675_952_645e-6, 9), "-6.67595265e-6");
        assert_eq!(format_sig(0.0, 9), "0");
        assert_eq!(format_sig(123_456_789_012.0, 9), "1.23456789e11");
        assert_eq!(format_sig(0.001_234_5, 9), "0.0012345");
    }
}
