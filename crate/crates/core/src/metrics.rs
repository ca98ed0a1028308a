//! Estimation-quality metrics: NMSE, achievable spectral efficiency, and
//! coded-free 16-QAM bit error rate under estimated hybrid precoding.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Determinant, Inverse, LeastSquaresSvd, SVD};
use num_complex::Complex64;
use rand::Rng;

use crate::channel::ChannelMatrix;
use crate::error::{Error, Result};
use crate::linalg::{fro_norm_sq, hermitian};

/// Floor reported when the per-trial error ratio underflows toward zero;
/// keeps noiseless exact-recovery runs finite in dB.
pub const NMSE_FLOOR_DB: f64 = -300.0;
const RATIO_FLOOR: f64 = 1e-30;

/// Per-trial squared-error ratio ||H - H^||_F^2 / ||H||_F^2.
pub fn nmse_ratio(h_true: &Array2<Complex64>, h_hat: &Array2<Complex64>) -> Result<f64> {
    let denom = fro_norm_sq(h_true);
    if denom == 0.0 {
        return Err(Error::Metric("true channel has zero norm".into()));
    }
    let diff = h_true - h_hat;
    Ok(fro_norm_sq(&diff) / denom)
}

/// Aggregate NMSE in dB: the dB value of the *mean* ratio, not the mean of
/// per-trial dB values.
pub fn nmse_db_from_ratios(ratios: &[f64]) -> f64 {
    if ratios.is_empty() {
        return f64::NAN;
    }
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    if mean < RATIO_FLOOR {
        NMSE_FLOOR_DB
    } else {
        10.0 * mean.log10()
    }
}

/// Single-trial NMSE in dB.
pub fn nmse_db(h_true: &Array2<Complex64>, h_hat: &Array2<Complex64>) -> Result<f64> {
    let r = nmse_ratio(h_true, h_hat)?;
    Ok(nmse_db_from_ratios(&[r]))
}

/// Rank-`n_rf` precoder/combiner designed from an estimate: the first
/// `n_rf` right and left singular vectors respectively.
pub fn design_precoders(
    h_hat: &Array2<Complex64>,
    n_rf: usize,
) -> Result<(Array2<Complex64>, Array2<Complex64>)> {
    let (u, _s, vt) = h_hat
        .svd(true, true)
        .map_err(|e| Error::Metric(format!("precoder SVD failed: {e}")))?;
    let u = u.ok_or_else(|| Error::Metric("SVD returned no U".into()))?;
    let vt = vt.ok_or_else(|| Error::Metric("SVD returned no V^H".into()))?;
    if n_rf > u.ncols() || n_rf > vt.nrows() {
        return Err(Error::Metric(format!(
            "n_rf = {n_rf} exceeds channel rank budget {}x{}",
            u.ncols(),
            vt.nrows()
        )));
    }
    let w_opt = u.slice(ndarray::s![.., 0..n_rf]).to_owned();
    let f_opt = hermitian(&vt.slice(ndarray::s![0..n_rf, ..]).to_owned());
    Ok((f_opt, w_opt))
}

/// Achievable spectral efficiency in bits/s/Hz when precoding with the
/// estimate-derived (F, W) but transmitting over the true channel:
/// log2 det(I + (1/N_RF) R_n^-1 W^H H F F^H H^H W), R_n = sigma_n^2 W^H W.
pub fn ase_bps_hz(
    h_true: &ChannelMatrix,
    h_hat: &Array2<Complex64>,
    n_rf: usize,
    sigma_n_sq: f64,
) -> Result<f64> {
    if fro_norm_sq(h_hat) == 0.0 {
        return Ok(0.0);
    }
    let (f_opt, w_opt) = design_precoders(h_hat, n_rf)?;
    let r_n = hermitian(&w_opt).dot(&w_opt).mapv(|z| z * sigma_n_sq);
    let r_n_inv = r_n
        .inv()
        .map_err(|_| Error::Metric("singular combined-noise covariance".into()))?;
    let heff = hermitian(&w_opt).dot(&h_true.h).dot(&f_opt);
    let signal = heff.dot(&hermitian(&heff));
    let mut m = r_n_inv.dot(&signal).mapv(|z| z / n_rf as f64);
    for i in 0..n_rf {
        m[(i, i)] += Complex64::new(1.0, 0.0);
    }
    let det = m
        .det()
        .map_err(|e| Error::Metric(format!("ASE determinant failed: {e}")))?;
    if det.re <= 0.0 {
        return Err(Error::Metric(format!(
            "non-positive ASE determinant {det}"
        )));
    }
    Ok(det.re.log2())
}

const QAM_LEVELS: [f64; 4] = [-3.0, -1.0, 1.0, 3.0];
/// Gray bit pairs matching QAM_LEVELS index order: 00, 01, 11, 10.
const GRAY_BITS: [(u8, u8); 4] = [(0, 0), (0, 1), (1, 1), (1, 0)];
const QAM_SCALE: f64 = 0.316227766016837933; // 1/sqrt(10), unit average power

fn pam_modulate(b1: u8, b0: u8) -> f64 {
    let idx = GRAY_BITS
        .iter()
        .position(|&(a, b)| a == b1 && b == b0)
        .unwrap();
    QAM_LEVELS[idx] * QAM_SCALE
}

fn pam_demodulate(x: f64) -> (u8, u8) {
    let mut best = 0;
    let mut best_dist = f64::INFINITY;
    for (i, &lvl) in QAM_LEVELS.iter().enumerate() {
        let d = (x - lvl * QAM_SCALE).abs();
        if d < best_dist {
            best_dist = d;
            best = i;
        }
    }
    GRAY_BITS[best]
}

/// Uncoded 16-QAM BER through the hybrid link: per-stream Gray-mapped
/// symbols pass through W^H H F with the precoders designed from the
/// estimate, additive noise of variance `sigma_n_sq` per combined output,
/// and zero-forcing equalization of the *estimated* effective channel.
pub fn ber_16qam<R: Rng>(
    h_true: &ChannelMatrix,
    h_hat: &Array2<Complex64>,
    n_rf: usize,
    sigma_n_sq: f64,
    n_symbol_vectors: usize,
    rng: &mut R,
) -> Result<f64> {
    let (f_opt, w_opt) = design_precoders(h_hat, n_rf)?;
    let heff = hermitian(&w_opt).dot(&h_true.h).dot(&f_opt);
    let heff_hat = hermitian(&w_opt).dot(h_hat).dot(&f_opt);
    let (_, s, _) = heff_hat
        .svd(false, false)
        .map_err(|e| Error::Metric(format!("BER SVD failed: {e}")))?;
    let s_max = s.iter().cloned().fold(0.0_f64, f64::max);
    let s_min = s.iter().cloned().fold(f64::INFINITY, f64::min);
    if s_max == 0.0 || s_min / s_max < 1e-12 {
        return Err(Error::Metric(
            "estimated effective channel is singular; cannot zero-force".into(),
        ));
    }

    let noise_sd = (sigma_n_sq / 2.0).sqrt();
    let normal = rand_distr::Normal::new(0.0, 1.0).unwrap();
    let mut bit_errors = 0usize;
    let mut bits_total = 0usize;
    for _ in 0..n_symbol_vectors {
        let mut tx_bits = Vec::with_capacity(4 * n_rf);
        let mut s_vec = Array1::zeros(n_rf);
        for k in 0..n_rf {
            let b: [u8; 4] = std::array::from_fn(|_| rng.gen_range(0..2u8));
            tx_bits.extend_from_slice(&b);
            s_vec[k] = Complex64::new(pam_modulate(b[0], b[1]), pam_modulate(b[2], b[3]));
        }
        let mut y = heff.dot(&s_vec);
        for v in y.iter_mut() {
            *v += Complex64::new(
                noise_sd * rng.sample::<f64, _>(normal),
                noise_sd * rng.sample::<f64, _>(normal),
            );
        }
        let s_hat = heff_hat
            .least_squares(&y)
            .map_err(|e| Error::Metric(format!("ZF solve failed: {e}")))?
            .solution;
        for k in 0..n_rf {
            let (b1, b0) = pam_demodulate(s_hat[k].re);
            let (b3, b2) = pam_demodulate(s_hat[k].im);
            let rx = [b1, b0, b3, b2];
            for (tx, r) in tx_bits[4 * k..4 * k + 4].iter().zip(rx.iter()) {
                if tx != r {
                    bit_errors += 1;
                }
            }
            bits_total += 4;
        }
    }
    Ok(bit_errors as f64 / bits_total as f64)
}
