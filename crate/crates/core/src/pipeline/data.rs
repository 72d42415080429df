//! Signal CSV I/O and the synthetic stand-in dataset.
//!
//! CSV layout: one signal per row, comma-separated decimals. Lines starting
//! with `#` are comments; a `rate=<hz>` token in a comment sets the sample
//! rate of every signal in the file.

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;

use super::config::DEFAULT_FRAG_LEN;
use crate::error::{Error, Result};
use crate::seeds;
use crate::signal::{Signal, DEFAULT_SAMPLE_RATE_HZ};

/// Decimal rendering used by every file the pipeline writes (17 significant
/// digits, so values round-trip exactly).
pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn ingest_csv(path: &Path) -> Result<Vec<Signal<f64>>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text)
}

/// Errors cite 1-based `(line, column)` positions in the text.
pub fn parse_csv(text: &str) -> Result<Vec<Signal<f64>>> {
    let mut rate = DEFAULT_SAMPLE_RATE_HZ;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(r) = parse_rate(comment, i + 1)? {
                rate = r;
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .enumerate()
            .map(|(j, tok)| {
                let tok = tok.trim();
                tok.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Ingest {
                        row: i + 1,
                        col: j + 1,
                        token: tok.to_string(),
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    rows.into_iter().map(|r| Signal::new(r, rate)).collect()
}

fn parse_rate(comment: &str, line: usize) -> Result<Option<f64>> {
    for (j, tok) in comment.split_whitespace().enumerate() {
        if let Some(v) = tok.strip_prefix("rate=") {
            let rate = v
                .parse::<f64>()
                .ok()
                .filter(|r| *r > 0.0 && r.is_finite())
                .ok_or_else(|| Error::Ingest {
                    row: line,
                    col: j + 1,
                    token: tok.to_string(),
                })?;
            return Ok(Some(rate));
        }
    }
    Ok(None)
}

pub fn render_csv(signals: &[Signal<f64>]) -> String {
    let rate = signals
        .first()
        .map_or(DEFAULT_SAMPLE_RATE_HZ, |s| s.sample_rate_hz);
    let mut out = format!("# rate={rate}\n");
    for s in signals {
        let row: Vec<String> = s.samples.iter().map(|&v| fmt_num(v)).collect();
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

pub fn write_csv(path: &Path, signals: &[Signal<f64>]) -> Result<()> {
    std::fs::write(path, render_csv(signals)).map_err(|e| Error::io(path, e))
}

/// Noise level the synthetic amplitudes are calibrated against.
pub const SYNTH_REFERENCE_SIGMA: f64 = 15.0;
/// Input SNR range, in dB at the reference noise level.
pub const SYNTH_SNR_RANGE_DB: (f64, f64) = (-2.0, 5.0);
/// Frequency range in cycles per 250-sample fragment.
pub const SYNTH_FREQ_RANGE: (f64, f64) = (1.0, 40.0);

/// Sums of 3 to 5 sinusoids with log-uniform frequencies, amplitudes in
/// `[5, 50]` and uniform phases. Amplitudes are paired with frequencies in
/// decreasing order, giving an EEG-like falling spectrum. Each signal is then
/// rescaled so that noise of [`SYNTH_REFERENCE_SIGMA`] gives an input SNR
/// drawn from [`SYNTH_SNR_RANGE_DB`].
pub fn gen_synthetic(n_signals: usize, length: usize, seed: u64) -> Result<Vec<Signal<f64>>> {
    if n_signals == 0 || length == 0 {
        return Err(Error::Parameter(format!(
            "need at least one non-empty signal, got {n_signals} × {length}"
        )));
    }
    let mut rng = seeds::stream(seed, seeds::STREAM_SYNTH);
    let (f_lo, f_hi) = (SYNTH_FREQ_RANGE.0.ln(), SYNTH_FREQ_RANGE.1.ln());
    let two_pi = std::f64::consts::TAU;
    (0..n_signals)
        .map(|_| {
            let k = rng.random_range(3..=5);
            let mut freqs: Vec<f64> = (0..k).map(|_| rng.random_range(f_lo..f_hi).exp()).collect();
            let mut amps: Vec<f64> = (0..k).map(|_| rng.random_range(5.0..=50.0)).collect();
            freqs.sort_by(f64::total_cmp);
            amps.sort_by(|a, b| b.total_cmp(a));
            let tones: Vec<(f64, f64, f64)> = freqs
                .into_iter()
                .zip(amps)
                .map(|(f, a)| (f, a, rng.random_range(0.0..two_pi)))
                .collect();
            let mut samples: Vec<f64> = (0..length)
                .map(|n| {
                    let t = n as f64 / DEFAULT_FRAG_LEN as f64;
                    tones
                        .iter()
                        .map(|&(f, a, p)| a * (two_pi * f * t + p).sin())
                        .sum()
                })
                .collect();
            let target_db = rng.random_range(SYNTH_SNR_RANGE_DB.0..=SYNTH_SNR_RANGE_DB.1);
            let rms = (samples.iter().map(|v| v * v).sum::<f64>() / length as f64).sqrt();
            let scale = SYNTH_REFERENCE_SIGMA * 10f64.powf(target_db / 20.0) / rms;
            samples.iter_mut().for_each(|v| *v *= scale);
            Signal::new(samples, DEFAULT_SAMPLE_RATE_HZ)
        })
        .collect()
}
