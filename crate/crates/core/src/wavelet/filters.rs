//! Orthogonal wavelet filter tables.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Symlet 9 reconstruction lowpass (18 taps).
const SYM9_REC_LO: [f64; 18] = [
    0.0010694900329086053,
    -0.0004731544986800831,
    -0.010264064027633142,
    0.008859267493400484,
    0.06207778930288603,
    -0.018233770779395985,
    -0.19155083129728512,
    0.035272488035271894,
    0.6173384491409358,
    0.717897082764412,
    0.238760914607303,
    -0.05456895843083407,
    0.0005834627461258068,
    0.03022487885827568,
    -0.01152821020767923,
    -0.013271967781817119,
    0.0006197808889855868,
    0.0014009155259146807,
];

/// Daubechies 7 reconstruction lowpass (14 taps).
const DB7_REC_LO: [f64; 14] = [
    0.07785205408500918,
    0.3965393194819173,
    0.7291320908462351,
    0.4697822874051931,
    -0.14390600392856498,
    -0.22403618499387498,
    0.07130921926683026,
    0.08061260915108308,
    -0.03802993693501441,
    -0.01657454163066688,
    0.01255099855609984,
    0.0004295779729213665,
    -0.0018016407040474908,
    0.00035371379997452024,
];

const QMF_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WaveletKind {
    Sym9,
    Db7,
}

/// Analysis and synthesis filters of an orthogonal two-channel filterbank.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveletFilter {
    pub kind: WaveletKind,
    pub dec_lo: Vec<f64>,
    pub dec_hi: Vec<f64>,
    pub rec_lo: Vec<f64>,
    pub rec_hi: Vec<f64>,
}

impl WaveletFilter {
    /// Builds the full filterbank from a reconstruction lowpass; the
    /// highpass is its quadrature mirror.
    pub fn from_rec_lo(kind: WaveletKind, rec_lo: &[f64]) -> Self {
        let n = rec_lo.len();
        let rec_hi: Vec<f64> =
            (0..n).map(|k| if k % 2 == 0 { rec_lo[n - 1 - k] } else { -rec_lo[n - 1 - k] }).collect();
        let dec_lo: Vec<f64> = rec_lo.iter().rev().copied().collect();
        let dec_hi: Vec<f64> = rec_hi.iter().rev().copied().collect();
        Self { kind, dec_lo, dec_hi, rec_lo: rec_lo.to_vec(), rec_hi }
    }

    /// The validated table for `kind`.
    pub fn get(kind: WaveletKind) -> &'static WaveletFilter {
        static SYM9: OnceLock<WaveletFilter> = OnceLock::new();
        static DB7: OnceLock<WaveletFilter> = OnceLock::new();
        let (cell, table): (_, &[f64]) = match kind {
            WaveletKind::Sym9 => (&SYM9, &SYM9_REC_LO),
            WaveletKind::Db7 => (&DB7, &DB7_REC_LO),
        };
        cell.get_or_init(|| {
            let f = WaveletFilter::from_rec_lo(kind, table);
            f.validate().expect("embedded wavelet table violates QMF identities");
            f
        })
    }

    pub fn len(&self) -> usize {
        self.rec_lo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rec_lo.is_empty()
    }

    /// Checks sum = √2, unit energy and double-shift orthogonality of the
    /// lowpass, plus orthogonality between lowpass and highpass.
    pub fn validate(&self) -> Result<()> {
        let h = &self.rec_lo;
        let g = &self.rec_hi;
        let n = h.len();
        let sum: f64 = h.iter().sum();
        if (sum - std::f64::consts::SQRT_2).abs() > QMF_TOL {
            return Err(Error::InvalidArgument(format!("{:?}: lowpass sums to {sum}", self.kind)));
        }
        let energy: f64 = h.iter().map(|v| v * v).sum();
        if (energy - 1.0).abs() > QMF_TOL {
            return Err(Error::InvalidArgument(format!("{:?}: lowpass energy {energy}", self.kind)));
        }
        let shifted = |a: &[f64], b: &[f64], s: usize| -> f64 { (0..n - s).map(|i| a[i + s] * b[i]).sum() };
        for k in 1..n / 2 {
            let s = 2 * k;
            if shifted(h, h, s).abs() > QMF_TOL {
                return Err(Error::InvalidArgument(format!("{:?}: lowpass not orthogonal at shift {s}", self.kind)));
            }
        }
        for s in (0..n).step_by(2) {
            if shifted(h, g, s).abs() > QMF_TOL || shifted(g, h, s).abs() > QMF_TOL {
                return Err(Error::InvalidArgument(format!("{:?}: lowpass/highpass overlap at shift {s}", self.kind)));
            }
        }
        Ok(())
    }
}
