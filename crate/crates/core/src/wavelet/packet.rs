//! Full wavelet packet trees.
//!
//! Nodes are stored in natural (filterbank) order: node `(l, i)` splits into
//! `(l+1, 2i)` (lowpass) and `(l+1, 2i+1)` (highpass). Callers address
//! subbands in frequency order; because the highpass branch mirrors the
//! spectrum, frequency index `f` lives at natural index `gray(f)`.

use super::filters::{WaveletFilter, WaveletKind};
use crate::error::{Error, Result};

/// Signal extension used at the segment edges.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Boundary {
    /// Half-sample symmetric extension. Coefficient vectors grow by about
    /// half a filter length per level; reconstruction is exact.
    #[default]
    Symmetric,
    /// Circular extension. The transform is orthogonal (energy preserving)
    /// but every split needs an even length.
    Periodic,
}

pub fn gray(i: usize) -> usize {
    i ^ (i >> 1)
}

pub fn inverse_gray(mut g: usize) -> usize {
    let mut i = g;
    while g > 0 {
        g >>= 1;
        i ^= g;
    }
    i
}

/// Frequency band `[lo, hi)` in Hz covered by frequency-ordered node
/// `freq_index` at `level`.
pub fn subband(level: usize, freq_index: usize, fs: f64) -> (f64, f64) {
    let width = fs / 2.0 / (1usize << level) as f64;
    (freq_index as f64 * width, (freq_index + 1) as f64 * width)
}

fn sym_index(i: isize, n: usize) -> usize {
    let n = n as isize;
    let m = i.rem_euclid(2 * n);
    (if m >= n { 2 * n - 1 - m } else { m }) as usize
}

fn coeff_len(n: usize, filter_len: usize, boundary: Boundary) -> usize {
    match boundary {
        Boundary::Symmetric => (n + filter_len - 1) / 2,
        Boundary::Periodic => n / 2,
    }
}

/// One analysis step: (approximation, detail).
pub fn dwt(x: &[f64], f: &WaveletFilter, boundary: Boundary) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let fl = f.len();
    let m = coeff_len(n, fl, boundary);
    let mut a = vec![0.0; m];
    let mut d = vec![0.0; m];
    for k in 0..m {
        let base = (2 * k + 1) as isize;
        let (mut sa, mut sd) = (0.0, 0.0);
        for j in 0..fl {
            let pos = base - j as isize;
            let v = match boundary {
                Boundary::Symmetric => x[sym_index(pos, n)],
                Boundary::Periodic => x[pos.rem_euclid(n as isize) as usize],
            };
            sa += f.dec_lo[j] * v;
            sd += f.dec_hi[j] * v;
        }
        a[k] = sa;
        d[k] = sd;
    }
    (a, d)
}

/// One synthesis step producing `out_len` samples.
pub fn idwt(a: &[f64], d: &[f64], f: &WaveletFilter, boundary: Boundary, out_len: usize) -> Vec<f64> {
    debug_assert_eq!(a.len(), d.len());
    let fl = f.len();
    let mut y = vec![0.0; out_len];
    match boundary {
        Boundary::Symmetric => {
            for k in 0..a.len() {
                for j in 0..fl {
                    let idx = (2 * k + j) as isize - (fl as isize - 2);
                    if idx >= 0 && (idx as usize) < out_len {
                        y[idx as usize] += a[k] * f.rec_lo[j] + d[k] * f.rec_hi[j];
                    }
                }
            }
        }
        Boundary::Periodic => {
            // Transpose of the orthogonal analysis operator.
            let n = out_len as isize;
            for k in 0..a.len() {
                for j in 0..fl {
                    let idx = ((2 * k + 1) as isize - j as isize).rem_euclid(n) as usize;
                    y[idx] += a[k] * f.dec_lo[j] + d[k] * f.dec_hi[j];
                }
            }
        }
    }
    y
}

/// A wavelet packet tree expanded uniformly to `depth`.
#[derive(Clone, Debug)]
pub struct WpTree {
    kind: WaveletKind,
    boundary: Boundary,
    depth: usize,
    input_len: usize,
    /// `levels[l][natural_index]`; level 0 holds the input.
    levels: Vec<Vec<Vec<f64>>>,
    /// Node length per level.
    lens: Vec<usize>,
}

/// Deepest uniform expansion allowed for a signal of length `n`: every node
/// that is split must be at least one filter long (and even, for periodic).
pub fn max_depth(n: usize, filter_len: usize, boundary: Boundary) -> usize {
    let mut depth = 0;
    let mut len = n;
    loop {
        let ok = match boundary {
            Boundary::Symmetric => len >= filter_len,
            Boundary::Periodic => len >= 2 && len.is_multiple_of(2),
        };
        if !ok || depth >= 64 {
            return depth;
        }
        len = coeff_len(len, filter_len, boundary);
        depth += 1;
    }
}

impl WpTree {
    pub fn decompose(x: &[f64], kind: WaveletKind, depth: usize) -> Result<Self> {
        Self::decompose_with(x, kind, depth, Boundary::Symmetric)
    }

    pub fn decompose_with(x: &[f64], kind: WaveletKind, depth: usize, boundary: Boundary) -> Result<Self> {
        let f = WaveletFilter::get(kind);
        if x.len() < f.len() {
            return Err(Error::SignalTooShort { len: x.len(), filter_len: f.len() });
        }
        if depth == 0 {
            return Err(Error::InvalidArgument("decomposition depth must be >= 1".into()));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let max = max_depth(x.len(), f.len(), boundary);
        if depth > max {
            return Err(Error::DepthTooLarge { depth, max });
        }
        let mut levels = vec![vec![x.to_vec()]];
        let mut lens = vec![x.len()];
        for l in 0..depth {
            let mut next = Vec::with_capacity(2 << l);
            for node in &levels[l] {
                let (a, d) = dwt(node, f, boundary);
                next.push(a);
                next.push(d);
            }
            lens.push(next[0].len());
            levels.push(next);
        }
        Ok(Self { kind, boundary, depth, input_len: x.len(), levels, lens })
    }

    pub fn kind(&self) -> WaveletKind {
        self.kind
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn input_len(&self) -> usize {
        self.input_len
    }

    /// Node by natural (filterbank) index.
    pub fn node(&self, level: usize, natural_index: usize) -> Option<&[f64]> {
        self.levels.get(level)?.get(natural_index).map(Vec::as_slice)
    }

    /// Node by frequency index.
    pub fn node_by_freq(&self, level: usize, freq_index: usize) -> Option<&[f64]> {
        if level > self.depth || freq_index >= (1 << level) {
            return None;
        }
        self.node(level, gray(freq_index))
    }

    /// Leaves at full depth in natural order, for in-place thresholding.
    pub fn leaves_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.levels[self.depth]
    }

    pub fn leaves(&self) -> &[Vec<f64>] {
        &self.levels[self.depth]
    }

    /// Sum of squared coefficients across one level.
    pub fn level_energy(&self, level: usize) -> f64 {
        self.levels[level].iter().flatten().map(|v| v * v).sum()
    }

    /// Inverse transform from the leaves.
    pub fn reconstruct(&self) -> Vec<f64> {
        let f = WaveletFilter::get(self.kind);
        let mut current = self.levels[self.depth].clone();
        for l in (1..=self.depth).rev() {
            let out_len = self.lens[l - 1];
            current = current.chunks(2).map(|pair| idwt(&pair[0], &pair[1], f, self.boundary, out_len)).collect();
        }
        current.pop().expect("root node")
    }

    /// Signal of the input's length containing only the given subband.
    pub fn reconstruct_node(&self, level: usize, freq_index: usize) -> Result<Vec<f64>> {
        if level == 0 || level > self.depth || freq_index >= (1 << level) {
            return Err(Error::NodeOutOfRange { level, index: freq_index });
        }
        let f = WaveletFilter::get(self.kind);
        let mut idx = gray(freq_index);
        let mut sig = self.levels[level][idx].clone();
        for l in (1..=level).rev() {
            let zeros = vec![0.0; sig.len()];
            let out_len = self.lens[l - 1];
            sig = if idx.is_multiple_of(2) {
                idwt(&sig, &zeros, f, self.boundary, out_len)
            } else {
                idwt(&zeros, &sig, f, self.boundary, out_len)
            };
            idx >>= 1;
        }
        Ok(sig)
    }
}

pub fn wp_decompose(x: &[f64], kind: WaveletKind, depth: usize) -> Result<WpTree> {
    WpTree::decompose(x, kind, depth)
}

pub fn wp_reconstruct(tree: &WpTree) -> Vec<f64> {
    tree.reconstruct()
}

pub fn wp_reconstruct_node(tree: &WpTree, level: usize, freq_index: usize) -> Result<Vec<f64>> {
    tree.reconstruct_node(level, freq_index)
}
