//! Multichannel EEG segments and the electrode set used by the system.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Nominal acquisition rate of the amplifier.
pub const DEFAULT_FS: f64 = 1000.0;

/// The five electrodes the system records: three occipital sites for SSVEP
/// and two frontal sites for blinks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Channel {
    O1,
    O2,
    Oz,
    Fp1,
    Fp2,
}

impl Channel {
    pub const ALL: [Channel; 5] = [Channel::O1, Channel::O2, Channel::Oz, Channel::Fp1, Channel::Fp2];
    pub const OCCIPITAL: [Channel; 3] = [Channel::O1, Channel::O2, Channel::Oz];
    pub const FRONTAL: [Channel; 2] = [Channel::Fp1, Channel::Fp2];

    pub fn label(self) -> &'static str {
        match self {
            Channel::O1 => "O1",
            Channel::O2 => "O2",
            Channel::Oz => "Oz",
            Channel::Fp1 => "Fp1",
            Channel::Fp2 => "Fp2",
        }
    }

    pub fn is_occipital(self) -> bool {
        matches!(self, Channel::O1 | Channel::O2 | Channel::Oz)
    }

    pub fn is_frontal(self) -> bool {
        matches!(self, Channel::Fp1 | Channel::Fp2)
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Channel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Channel::ALL
            .into_iter()
            .find(|c| c.label().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::UnknownChannel(s.to_string()))
    }
}

/// A block of multichannel samples in µV. Rows follow `channels`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EegSegment {
    channels: Vec<Channel>,
    fs: f64,
    data: Vec<Vec<f64>>,
    t0: f64,
}

impl EegSegment {
    pub fn new(channels: Vec<Channel>, fs: f64, data: Vec<Vec<f64>>, t0: f64) -> Result<Self> {
        if channels.len() != data.len() {
            return Err(Error::InvalidArgument(format!(
                "{} channel labels for {} data rows",
                channels.len(),
                data.len()
            )));
        }
        if !(fs > 0.0 && fs.is_finite()) {
            return Err(Error::InvalidArgument(format!("sampling rate {fs}")));
        }
        let mut seen = channels.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != channels.len() {
            return Err(Error::InvalidArgument("duplicate channel label".into()));
        }
        if let Some(first) = data.first() {
            if data.iter().any(|row| row.len() != first.len()) {
                return Err(Error::InvalidArgument("rows of unequal length".into()));
            }
        }
        if data.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { channels, fs, data, t0 })
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn data(&self) -> &[Vec<f64>] {
        &self.data
    }

    /// Samples per channel.
    pub fn len(&self) -> usize {
        self.data.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn duration(&self) -> f64 {
        self.len() as f64 / self.fs
    }

    /// Time just past the last sample.
    pub fn t_end(&self) -> f64 {
        self.t0 + self.duration()
    }

    pub fn channel(&self, ch: Channel) -> Option<&[f64]> {
        self.channels.iter().position(|&c| c == ch).map(|i| self.data[i].as_slice())
    }

    pub fn channel_or_err(&self, ch: Channel) -> Result<&[f64]> {
        self.channel(ch).ok_or_else(|| Error::MissingChannel(ch.to_string()))
    }

    /// Copy of the listed channels, in the listed order.
    pub fn select(&self, channels: &[Channel]) -> Result<EegSegment> {
        let data = channels.iter().map(|&c| self.channel_or_err(c).map(<[f64]>::to_vec)).collect::<Result<Vec<_>>>()?;
        Ok(EegSegment { channels: channels.to_vec(), fs: self.fs, data, t0: self.t0 })
    }

    /// Samples `[start, start + len)` of every channel.
    pub fn slice(&self, start: usize, len: usize) -> Result<EegSegment> {
        if start + len > self.len() {
            return Err(Error::InvalidArgument(format!(
                "slice {start}..{} beyond {} samples",
                start + len,
                self.len()
            )));
        }
        Ok(EegSegment {
            channels: self.channels.clone(),
            fs: self.fs,
            data: self.data.iter().map(|r| r[start..start + len].to_vec()).collect(),
            t0: self.t0 + start as f64 / self.fs,
        })
    }

    /// The trailing `seconds` of the segment.
    pub fn tail(&self, seconds: f64) -> Result<EegSegment> {
        let n = (seconds * self.fs).round() as usize;
        if n > self.len() {
            return Err(Error::BufferUnderrun { have: self.duration(), need: seconds });
        }
        self.slice(self.len() - n, n)
    }

    /// Append another segment with the same channel layout.
    pub fn append(&mut self, other: &EegSegment) -> Result<()> {
        if other.channels != self.channels || other.fs != self.fs {
            return Err(Error::InvalidArgument("segment layouts differ".into()));
        }
        for (row, extra) in self.data.iter_mut().zip(&other.data) {
            row.extend_from_slice(extra);
        }
        Ok(())
    }

    /// Drop samples from the front so at most `max_len` remain.
    pub fn truncate_front(&mut self, max_len: usize) {
        let n = self.len();
        if n > max_len {
            let drop = n - max_len;
            for row in &mut self.data {
                row.drain(..drop);
            }
            self.t0 += drop as f64 / self.fs;
        }
    }

    pub fn map_rows(&self, mut f: impl FnMut(&[f64]) -> Vec<f64>) -> EegSegment {
        EegSegment {
            channels: self.channels.clone(),
            fs: self.fs,
            data: self.data.iter().map(|r| f(r)).collect(),
            t0: self.t0,
        }
    }

    /// CSV export: header row of channel labels, then one sample per row.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let header: Vec<&str> = self.channels.iter().map(|c| c.label()).collect();
        writeln!(out, "{}", header.join(","))?;
        for i in 0..self.len() {
            let row: Vec<String> = self.data.iter().map(|r| r[i].to_string()).collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv(text: &str, fs: f64) -> Result<EegSegment> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::InvalidArgument("empty CSV".into()))?;
        let channels = header.split(',').map(str::parse).collect::<Result<Vec<Channel>>>()?;
        let mut data = vec![Vec::new(); channels.len()];
        for line in lines {
            let vals: Vec<&str> = line.split(',').collect();
            if vals.len() != channels.len() {
                return Err(Error::InvalidArgument(format!("row `{line}` has wrong width")));
            }
            for (row, v) in data.iter_mut().zip(vals) {
                row.push(v.trim().parse::<f64>().map_err(|e| Error::InvalidArgument(format!("`{v}`: {e}")))?);
            }
        }
        EegSegment::new(channels, fs, data, 0.0)
    }
}
