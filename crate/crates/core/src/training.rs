//! Uplink training design: DFT-based hybrid precoder/combiner blocks, the
//! unitary pilot, the aggregated observation, and LS extraction of the
//! low-dimensional effective channel.

use ndarray::{s, Array2};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::channel::ChannelMatrix;
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::linalg::{block_diag, block_diag_repeat, hermitian};

/// Aggregated precoder, combiner, pilot, and the per-block factors kept for
/// constraint audits.
#[derive(Debug, Clone)]
pub struct TrainingPlan {
    /// Aggregated precoder, N_MS x N_b^T N_S.
    pub f_agg: Array2<Complex64>,
    /// Aggregated combiner, N_BS x N_b^R N_S.
    pub w_agg: Array2<Complex64>,
    /// Unitary pilot block, N_S x T_MS with T_MS = N_S.
    pub pilot: Array2<Complex64>,
    pub alpha_f: f64,
    pub alpha_w: f64,
    pub f_rf_blocks: Vec<Array2<Complex64>>,
    pub f_bb_blocks: Vec<Array2<Complex64>>,
    pub w_rf_blocks: Vec<Array2<Complex64>>,
    pub w_bb_blocks: Vec<Array2<Complex64>>,
    n_b_t: usize,
    n_b_r: usize,
}

/// Low-dimensional effective channel, N_R x N_T, carrying the scale
/// alpha_w * alpha_f it absorbed.
#[derive(Debug, Clone)]
pub struct EffectiveChannel {
    pub h_bar: Array2<Complex64>,
    pub scale: f64,
}

/// Unnormalized DFT matrix: entry (m, n) = exp(-j 2 pi m n / size).
/// Columns are orthogonal with u_m^H u_m = size.
pub fn dft_matrix(size: usize) -> Array2<Complex64> {
    let mut u = Array2::zeros((size, size));
    for m in 0..size {
        for n in 0..size {
            let phase = -2.0 * std::f64::consts::PI * (m * n) as f64 / size as f64;
            u[(m, n)] = Complex64::from_polar(1.0, phase);
        }
    }
    u
}

/// Pilot block S with S S^H = N_S I and T_MS = N_S columns.
pub fn build_pilot(n_s: usize) -> Array2<Complex64> {
    assert!(n_s >= 1);
    dft_matrix(n_s)
}

/// Analog/digital precoder pair for block j (1-based) and their product.
///
/// The product equals alpha_f * [O; I_{N_S}; O] with the identity occupying
/// rows (j-1) N_S + 1 .. j N_S, alpha_f = sqrt(N_RF^MS / N_S).
pub fn build_precoder_block(
    j: usize,
    config: &SystemConfig,
) -> Result<(Array2<Complex64>, Array2<Complex64>, Array2<Complex64>)> {
    if j < 1 || j > config.n_b_t {
        return Err(Error::Range(format!(
            "precoder block index {} outside 1..={}",
            j, config.n_b_t
        )));
    }
    build_selection_block(
        j,
        config.n_ms,
        config.n_rf_ms,
        config.n_s,
        // Digital scaling gamma enforcing ||F_RF F_BB||_F^2 = N_RF^MS.
        (config.n_ms as f64 / (config.n_s * config.n_rf_ms) as f64).sqrt(),
    )
}

/// Analog/digital combiner pair for block i (1-based) and their product.
///
/// The product equals alpha_w * [O; I_{N_S}; O] with
/// alpha_w = N_RF^BS / sqrt(N_BS).
pub fn build_combiner_block(
    i: usize,
    config: &SystemConfig,
) -> Result<(Array2<Complex64>, Array2<Complex64>, Array2<Complex64>)> {
    if i < 1 || i > config.n_b_r {
        return Err(Error::Range(format!(
            "combiner block index {} outside 1..={}",
            i, config.n_b_r
        )));
    }
    build_selection_block(i, config.n_bs, config.n_rf_bs, config.n_s, 1.0)
}

/// Shared construction: the analog matrix stacks rows of DFT columns so that
/// the hybrid product selects N_S consecutive antenna rows of block `idx`.
fn build_selection_block(
    idx: usize,
    n_ant: usize,
    n_rf: usize,
    n_s: usize,
    digital_scale: f64,
) -> Result<(Array2<Complex64>, Array2<Complex64>, Array2<Complex64>)> {
    let u = dft_matrix(n_rf);
    let pad = u.column(n_rf - 1).to_owned();

    // [U1, U_BB, U2] is n_rf x n_ant; its conjugate transpose is the analog
    // stage, scaled to constant modulus 1/sqrt(n_ant).
    let mut inner = Array2::zeros((n_rf, n_ant));
    let start = (idx - 1) * n_s;
    for c in 0..n_ant {
        if c >= start && c < start + n_s {
            inner.column_mut(c).assign(&u.column(c - start));
        } else {
            inner.column_mut(c).assign(&pad);
        }
    }
    let modulus = 1.0 / (n_ant as f64).sqrt();
    let rf = hermitian(&inner).mapv(|z| z * modulus);

    let bb = u
        .slice(s![.., 0..n_s])
        .to_owned()
        .mapv(|z| z * digital_scale);

    let product = rf.dot(&bb);
    Ok((rf, bb, product))
}

/// Build the full training plan: aggregated precoder/combiner, pilot, scales.
pub fn aggregate_training(config: &SystemConfig) -> Result<TrainingPlan> {
    config.validate()?;
    let n_t = config.n_t();
    let n_r = config.n_r();

    let mut f_agg = Array2::zeros((config.n_ms, n_t));
    let mut w_agg = Array2::zeros((config.n_bs, n_r));
    let mut f_rf_blocks = Vec::with_capacity(config.n_b_t);
    let mut f_bb_blocks = Vec::with_capacity(config.n_b_t);
    let mut w_rf_blocks = Vec::with_capacity(config.n_b_r);
    let mut w_bb_blocks = Vec::with_capacity(config.n_b_r);

    for j in 1..=config.n_b_t {
        let (rf, bb, f_j) = build_precoder_block(j, config)?;
        f_agg
            .slice_mut(s![.., (j - 1) * config.n_s..j * config.n_s])
            .assign(&f_j);
        f_rf_blocks.push(rf);
        f_bb_blocks.push(bb);
    }
    for i in 1..=config.n_b_r {
        let (rf, bb, w_i) = build_combiner_block(i, config)?;
        w_agg
            .slice_mut(s![.., (i - 1) * config.n_s..i * config.n_s])
            .assign(&w_i);
        w_rf_blocks.push(rf);
        w_bb_blocks.push(bb);
    }

    Ok(TrainingPlan {
        f_agg,
        w_agg,
        pilot: build_pilot(config.n_s),
        alpha_f: (config.n_rf_ms as f64 / config.n_s as f64).sqrt(),
        alpha_w: config.n_rf_bs as f64 / (config.n_bs as f64).sqrt(),
        f_rf_blocks,
        f_bb_blocks,
        w_rf_blocks,
        w_bb_blocks,
        n_b_t: config.n_b_t,
        n_b_r: config.n_b_r,
    })
}

impl TrainingPlan {
    /// Block-diagonal pilot repetition, N_b^T N_S x N_b^T T_MS.
    pub fn s_bar(&self) -> Array2<Complex64> {
        block_diag_repeat(&self.pilot, self.n_b_t)
    }

    /// Block-diagonal aggregated combiner, N_b^R N_BS x N_b^R N_S.
    pub fn w_bar(&self) -> Array2<Complex64> {
        let blocks: Vec<Array2<Complex64>> = (0..self.n_b_r)
            .map(|i| self.w_rf_blocks[i].dot(&self.w_bb_blocks[i]))
            .collect();
        block_diag(&blocks)
    }
}

/// Aggregated uplink observation: W~^H H F~ S_bar + W_bar^H N with N i.i.d.
/// CN(0, sigma_n_sq) at the BS antennas.
pub fn simulate_uplink<R: Rng>(
    h: &ChannelMatrix,
    plan: &TrainingPlan,
    sigma_n_sq: f64,
    rng: &mut R,
) -> Array2<Complex64> {
    let s_bar = plan.s_bar();
    let signal = hermitian(&plan.w_agg).dot(&h.h).dot(&plan.f_agg).dot(&s_bar);
    if sigma_n_sq == 0.0 {
        return signal;
    }
    let w_bar = plan.w_bar();
    let (noise_rows, _) = w_bar.dim();
    let cols = s_bar.ncols();
    let normal = Normal::new(0.0, (sigma_n_sq / 2.0).sqrt()).unwrap();
    let mut noise = Array2::zeros((noise_rows, cols));
    for z in noise.iter_mut() {
        *z = Complex64::new(normal.sample(rng), normal.sample(rng));
    }
    signal + hermitian(&w_bar).dot(&noise)
}

/// LS estimate of the effective channel: H_bar = Y~ S_bar^H / N_S.
pub fn estimate_effective_channel(
    y: &Array2<Complex64>,
    plan: &TrainingPlan,
) -> EffectiveChannel {
    let n_s = plan.pilot.nrows() as f64;
    let h_bar = y.dot(&hermitian(&plan.s_bar())).mapv(|z| z / n_s);
    EffectiveChannel {
        h_bar,
        scale: plan.alpha_w * plan.alpha_f,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{assemble_channel, draw_paths};
    use approx::assert_abs_diff_eq;
    use ndarray_linalg::Determinant;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pilot_is_scaled_unitary() {
        for n_s in 1..6 {
            let s = build_pilot(n_s);
            let g = s.dot(&hermitian(&s));
            for i in 0..n_s {
                for j in 0..n_s {
                    let expect = if i == j { n_s as f64 } else { 0.0 };
                    assert_abs_diff_eq!(g[(i, j)].re, expect, epsilon = 1e-12);
                    assert_abs_diff_eq!(g[(i, j)].im, 0.0, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn pilot_determinant_magnitude() {
        for n_s in 1..6 {
            let s = build_pilot(n_s);
            let det = s.det().unwrap();
            let expect = (n_s as f64).powi(n_s as i32);
            assert_abs_diff_eq!(det.norm_sqr(), expect, epsilon = 1e-9 * expect);
        }
    }

    fn tiny_config() -> SystemConfig {
        // N_MS = N_BS = 4, N_RF = 2, N_S = 1, two blocks each side.
        SystemConfig {
            n_bs: 4,
            n_ms: 4,
            n_rf_bs: 2,
            n_rf_ms: 2,
            n_s: 1,
            n_b_t: 2,
            n_b_r: 2,
            m1: 2,
            m2: 1,
            n_paths: 1,
            ..SystemConfig::default()
        }
    }

    #[test]
    fn precoder_block_selects_rows() {
        let cfg = tiny_config();
        let (rf, _bb, f1) = build_precoder_block(1, &cfg).unwrap();
        // Constant modulus 1 / sqrt(N_MS) = 1/2.
        for z in rf.iter() {
            assert_abs_diff_eq!(z.norm(), 0.5, epsilon = 1e-14);
        }
        let alpha_f = (cfg.n_rf_ms as f64 / cfg.n_s as f64).sqrt();
        assert_abs_diff_eq!(f1[(0, 0)].norm(), alpha_f, epsilon = 1e-12);
        for r in 1..4 {
            assert!(f1[(r, 0)].norm() < 1e-12);
        }

        let (_, _, f2) = build_precoder_block(2, &cfg).unwrap();
        assert_abs_diff_eq!(f2[(1, 0)].norm(), alpha_f, epsilon = 1e-12);
        assert!(f2[(0, 0)].norm() < 1e-12);
    }

    #[test]
    fn precoder_block_index_out_of_range() {
        let cfg = tiny_config();
        assert!(build_precoder_block(0, &cfg).is_err());
        assert!(build_precoder_block(3, &cfg).is_err());
    }

    #[test]
    fn dft_columns_are_orthogonal() {
        let u = dft_matrix(4);
        let g = hermitian(&u).dot(&u);
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == j { 4.0 } else { 0.0 };
                assert_abs_diff_eq!(g[(i, j)].norm(), expect, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn combiner_block_selects_rows() {
        let cfg = tiny_config();
        let (_, _, w1) = build_combiner_block(1, &cfg).unwrap();
        let alpha_w = cfg.n_rf_bs as f64 / (cfg.n_bs as f64).sqrt();
        assert_abs_diff_eq!(w1[(0, 0)].norm(), alpha_w, epsilon = 1e-12);
        for r in 1..4 {
            assert!(w1[(r, 0)].norm() < 1e-12);
        }
        // Last block occupies the last N_S rows when N_b^R N_S = block span.
        let (_, _, w2) = build_combiner_block(2, &cfg).unwrap();
        assert_abs_diff_eq!(w2[(1, 0)].norm(), alpha_w, epsilon = 1e-12);
    }

    #[test]
    fn aggregate_has_identity_over_zero_structure() {
        let cfg = SystemConfig::default();
        let plan = aggregate_training(&cfg).unwrap();
        let n_t = cfg.n_t();
        assert_eq!(plan.f_agg.dim(), (64, 30));
        assert_abs_diff_eq!(plan.alpha_f, (4.0f64 / 3.0).sqrt(), epsilon = 1e-15);
        for r in 0..cfg.n_ms {
            for c in 0..n_t {
                let expect = if r == c { plan.alpha_f } else { 0.0 };
                assert_abs_diff_eq!(plan.f_agg[(r, c)].re, expect, epsilon = 1e-10);
                assert_abs_diff_eq!(plan.f_agg[(r, c)].im, 0.0, epsilon = 1e-10);
            }
        }
        for r in 0..cfg.n_bs {
            for c in 0..cfg.n_r() {
                let expect = if r == c { plan.alpha_w } else { 0.0 };
                assert_abs_diff_eq!(plan.w_agg[(r, c)].re, expect, epsilon = 1e-10);
                assert_abs_diff_eq!(plan.w_agg[(r, c)].im, 0.0, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn constant_modulus_and_power_audit() {
        let cfg = SystemConfig::default();
        let plan = aggregate_training(&cfg).unwrap();
        let f_mod = 1.0 / (cfg.n_ms as f64).sqrt();
        for rf in &plan.f_rf_blocks {
            for z in rf.iter() {
                assert!((z.norm() - f_mod).abs() < 1e-14);
            }
        }
        let w_mod = 1.0 / (cfg.n_bs as f64).sqrt();
        for rf in &plan.w_rf_blocks {
            for z in rf.iter() {
                assert!((z.norm() - w_mod).abs() < 1e-14);
            }
        }
        for (rf, bb) in plan.f_rf_blocks.iter().zip(&plan.f_bb_blocks) {
            let p: f64 = rf.dot(bb).iter().map(|z| z.norm_sqr()).sum();
            assert!((p - cfg.n_rf_ms as f64).abs() < 1e-10);
        }
    }

    #[test]
    fn combiner_gram_is_scaled_identity() {
        let cfg = SystemConfig::default();
        let plan = aggregate_training(&cfg).unwrap();
        let g = hermitian(&plan.w_agg).dot(&plan.w_agg);
        let aw2 = plan.alpha_w * plan.alpha_w;
        for i in 0..cfg.n_r() {
            for j in 0..cfg.n_r() {
                let expect = if i == j { aw2 } else { 0.0 };
                assert_abs_diff_eq!(g[(i, j)].norm(), expect, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn effective_channel_is_scaled_submatrix() {
        let cfg = SystemConfig::default();
        let plan = aggregate_training(&cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(100);
        for _ in 0..10 {
            let paths = draw_paths(&cfg, &mut rng);
            let h = assemble_channel(&paths, &cfg);
            let y = simulate_uplink(&h, &plan, 0.0, &mut rng);
            let eff = estimate_effective_channel(&y, &plan);
            let scale = plan.alpha_w * plan.alpha_f;
            for r in 0..cfg.n_r() {
                for c in 0..cfg.n_t() {
                    let expect = h.h[(r, c)] * scale;
                    assert!((eff.h_bar[(r, c)] - expect).norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn ls_recovers_arbitrary_effective_channel() {
        let cfg = tiny_config();
        let plan = aggregate_training(&cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let mut h_bar = Array2::zeros((cfg.n_r(), cfg.n_t()));
        for z in h_bar.iter_mut() {
            *z = Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng));
        }
        let y = h_bar.dot(&plan.s_bar());
        let eff = estimate_effective_channel(&y, &plan);
        for (a, b) in eff.h_bar.iter().zip(h_bar.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn noise_variance_through_combiner() {
        // H = 0: observed entries have variance alpha_w^2 sigma_n^2.
        let cfg = SystemConfig::default();
        let plan = aggregate_training(&cfg).unwrap();
        let h = ChannelMatrix {
            h: Array2::zeros((cfg.n_bs, cfg.n_ms)),
        };
        let sigma = 0.7;
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        let mut acc = 0.0;
        let mut count = 0usize;
        while count < 10_000 {
            let y = simulate_uplink(&h, &plan, sigma, &mut rng);
            acc += y.iter().map(|z| z.norm_sqr()).sum::<f64>();
            count += y.len();
        }
        let var = acc / count as f64;
        let expect = plan.alpha_w * plan.alpha_w * sigma;
        assert!(
            (var - expect).abs() < 0.05 * expect,
            "var = {var}, expect = {expect}"
        );
    }

    #[test]
    fn pure_noise_variance_after_ls() {
        // Pure-noise input: LS output entries have variance
        // alpha_w^2 sigma_n^2 / N_S.
        let cfg = SystemConfig::default();
        let plan = aggregate_training(&cfg).unwrap();
        let h = ChannelMatrix {
            h: Array2::zeros((cfg.n_bs, cfg.n_ms)),
        };
        let sigma = 1.3;
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut acc = 0.0;
        let mut count = 0usize;
        while count < 10_000 {
            let y = simulate_uplink(&h, &plan, sigma, &mut rng);
            let eff = estimate_effective_channel(&y, &plan);
            acc += eff.h_bar.iter().map(|z| z.norm_sqr()).sum::<f64>();
            count += eff.h_bar.len();
        }
        let var = acc / count as f64;
        let expect = plan.alpha_w * plan.alpha_w * sigma / cfg.n_s as f64;
        assert!(
            (var - expect).abs() < 0.05 * expect,
            "var = {var}, expect = {expect}"
        );
    }

    #[test]
    fn pilot_overhead_count() {
        let cfg = SystemConfig::default();
        assert_eq!(cfg.t_ms() * cfg.n_b_r * cfg.n_b_t, 300);
    }
}
