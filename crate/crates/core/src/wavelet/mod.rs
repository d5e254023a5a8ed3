//! Orthogonal wavelet filters, packet trees and denoising.

mod denoise;
mod filters;
mod packet;

pub use denoise::{mad_sigma, soft_threshold, sure_threshold, wp_denoise, DenoiseConfig};
pub use filters::{WaveletFilter, WaveletKind};
pub use packet::{
    dwt, gray, idwt, inverse_gray, max_depth, subband, wp_decompose, wp_reconstruct, wp_reconstruct_node, Boundary,
    WpTree,
};

use crate::error::{Error, Result};

/// Remove the least-squares line.
pub fn detrend(x: &[f64]) -> Result<Vec<f64>> {
    let n = x.len();
    if n == 0 {
        return Err(Error::InvalidArgument("cannot detrend an empty signal".into()));
    }
    if n == 1 {
        return Ok(vec![0.0]);
    }
    let nf = n as f64;
    let t_mean = (nf - 1.0) / 2.0;
    let x_mean = x.iter().sum::<f64>() / nf;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (i, v) in x.iter().enumerate() {
        let dt = i as f64 - t_mean;
        sxy += dt * (v - x_mean);
        sxx += dt * dt;
    }
    let slope = sxy / sxx;
    Ok(x.iter().enumerate().map(|(i, v)| v - x_mean - slope * (i as f64 - t_mean)).collect())
}
