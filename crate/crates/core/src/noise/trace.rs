use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Uniformly sampled voltage record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    /// Sample rate, Hz.
    pub fs: f64,
    /// Time of the first sample, s.
    pub t0: f64,
    pub samples: Vec<f64>,
}

impl Trace {
    pub fn new(fs: f64, t0: f64, samples: Vec<f64>) -> Result<Self> {
        if !(fs > 0.0 && fs.is_finite()) {
            return Err(Error::Domain(format!(
                "sample rate must be positive, got {fs}"
            )));
        }
        if samples.is_empty() {
            return Err(Error::Domain("a trace needs at least one sample".into()));
        }
        Ok(Self { fs, t0, samples })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.fs
    }

    /// Record length in seconds (`len / fs`).
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.fs
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 / self.fs
    }

    /// Sample-wise sum of two equally shaped traces.
    pub fn add(&self, other: &Trace) -> Result<Trace> {
        if other.len() != self.len() || other.fs != self.fs {
            return Err(Error::Domain(
                "traces differ in length or sample rate".into(),
            ));
        }
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Trace {
            samples,
            ..self.clone()
        })
    }

    pub fn offset(mut self, v: f64) -> Trace {
        self.samples.iter_mut().for_each(|s| *s += v);
        self
    }

    /// Writes the CSV format: a `# fs=<Hz> unit=V t0=<s>` header, then one
    /// sample per line with 10 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# fs={} unit=V t0={}", self.fs, self.t0)?;
        for s in &self.samples {
            writeln!(w, "{}", format_sample(*s))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Trace> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Schema("empty trace file".into()))??;
        let (mut fs, mut t0, mut unit) = (None, 0.0, None);
        for field in header
            .strip_prefix('#')
            .ok_or_else(|| Error::Schema("trace header must start with '#'".into()))?
            .split_whitespace()
        {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| Error::Schema(format!("bad header field {field:?}")))?;
            match key {
                "fs" => fs = Some(parse_f64(value)?),
                "t0" => t0 = parse_f64(value)?,
                "unit" => unit = Some(value.to_string()),
                _ => {}
            }
        }
        if unit.as_deref() != Some("V") {
            return Err(Error::Schema("trace unit must be V".into()));
        }
        let fs = fs.ok_or_else(|| Error::Schema("trace header lacks fs".into()))?;
        let samples = lines
            .map(|l| {
                let l = l?;
                parse_f64(l.trim())
            })
            .collect::<Result<Vec<_>>>()?;
        Trace::new(fs, t0, samples).map_err(|e| Error::Schema(e.to_string()))
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    s.parse()
        .map_err(|_| Error::Schema(format!("not a number: {s:?}")))
}

/// Sample formatting shared by the CSV files and the wire protocol.
pub(crate) fn format_sample(v: f64) -> String {
    format!("{v:.9e}")
}
