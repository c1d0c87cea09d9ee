//! Ground-acceleration time series: CSV ingestion, interpolation, and a
//! seeded synthetic generator for tests.
//!
//! Records like El Centro are not bundled; they are loaded from a
//! two-column CSV (time in seconds, acceleration in m/s^2). Queries are
//! linearly interpolated and strictly range-checked so a marcher can never
//! silently extrapolate past the end of the record.

use crate::error::{CoreError, Result};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

/// A sampled acceleration record with strictly increasing time stamps.
#[derive(Debug, Clone, PartialEq)]
pub struct Excitation {
    times: Vec<f64>,
    accels: Vec<f64>,
}

impl Excitation {
    /// Builds a record from parallel time/acceleration samples.
    pub fn new(times: Vec<f64>, accels: Vec<f64>) -> Result<Self> {
        if times.len() != accels.len() {
            return Err(CoreError::ShapeMismatch {
                context: "excitation series",
                expected: times.len(),
                got: accels.len(),
            });
        }
        if times.len() < 2 {
            return Err(CoreError::InvalidConfig(
                "excitation needs at least two samples".into(),
            ));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(CoreError::InvalidConfig(
                "excitation times must be strictly increasing".into(),
            ));
        }
        if times.iter().chain(accels.iter()).any(|v| !v.is_finite()) {
            return Err(CoreError::InvalidConfig(
                "excitation contains non-finite values".into(),
            ));
        }
        Ok(Excitation { times, accels })
    }

    /// Reads a `time_s,accel_ms2` CSV (header optional).
    pub fn from_csv_reader(r: impl Read) -> Result<Self> {
        let mut times = Vec::new();
        let mut accels = Vec::new();
        for (lineno, line) in BufReader::new(r).lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut cols = line.split(',').map(str::trim);
            let (a, b) = match (cols.next(), cols.next()) {
                (Some(a), Some(b)) => (a, b),
                _ => {
                    return Err(CoreError::InvalidConfig(format!(
                        "excitation CSV line {}: expected two columns",
                        lineno + 1
                    )))
                }
            };
            match (a.parse::<f64>(), b.parse::<f64>()) {
                (Ok(t), Ok(g)) => {
                    times.push(t);
                    accels.push(g);
                }
                // First line may be a header; anything later must parse.
                _ if lineno == 0 => continue,
                _ => {
                    return Err(CoreError::InvalidConfig(format!(
                        "excitation CSV line {}: non-numeric data",
                        lineno + 1
                    )))
                }
            }
        }
        Excitation::new(times, accels)
    }

    /// Reads a record from a CSV file on disk.
    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        Excitation::from_csv_reader(std::fs::File::open(path)?)
    }

    /// Writes the record as a `time_s,accel_ms2` CSV.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "time_s,accel_ms2")?;
        for (t, g) in self.times.iter().zip(&self.accels) {
            writeln!(w, "{t:.16e},{g:.16e}")?;
        }
        Ok(())
    }

    /// Time span covered by the record.
    pub fn span(&self) -> (f64, f64) {
        (self.times[0], self.times[self.times.len() - 1])
    }

    /// Number of samples.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    /// Whether the record is empty (never true for a constructed record).
    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Linearly interpolated acceleration at time `t`.
    pub fn at(&self, t: f64) -> Result<f64> {
        let (lo, hi) = self.span();
        if !(t >= lo && t <= hi) {
            return Err(CoreError::ExcitationRange { t, lo, hi });
        }
        let j = match self.times.binary_search_by(|p| p.partial_cmp(&t).unwrap()) {
            Ok(j) => return Ok(self.accels[j]),
            Err(j) => j,
        };
        let (t0, t1) = (self.times[j - 1], self.times[j]);
        let w = (t - t0) / (t1 - t0);
        Ok(self.accels[j - 1] + w * (self.accels[j] - self.accels[j - 1]))
    }

    /// Seeded band-limited noise: a sum of 24 sinusoids with frequencies
    /// drawn from [f_lo, f_hi] Hz and random phases, tapered by a smooth
    /// ramp-up/ramp-down envelope so the record starts and ends at rest.
    pub fn synthetic(seed: u64, duration: f64, dt: f64, f_lo: f64, f_hi: f64, amp: f64) -> Self {
        assert!(duration > 0.0 && dt > 0.0 && f_hi > f_lo && f_lo > 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let modes: Vec<(f64, f64, f64)> = (0..24)
            .map(|_| {
                let f = rng.gen_range(f_lo..f_hi);
                let phase = rng.gen_range(0.0..std::f64::consts::TAU);
                let a = rng.gen_range(0.5..1.0);
                (f, phase, a)
            })
            .collect();
        let n = (duration / dt).round() as usize + 1;
        let ramp = 0.1 * duration;
        let times: Vec<f64> = (0..n).map(|j| j as f64 * dt).collect();
        let accels: Vec<f64> = times
            .iter()
            .map(|&t| {
                let env = (t / ramp).min((duration - t) / ramp).min(1.0).max(0.0);
                let s: f64 = modes
                    .iter()
                    .map(|&(f, p, a)| a * (std::f64::consts::TAU * f * t + p).sin())
                    .sum();
                amp * env * s / 24.0_f64.sqrt()
            })
            .collect();
        Excitation::new(times, accels).expect("synthetic construction is well-formed")
    }
}
