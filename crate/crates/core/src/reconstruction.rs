//! Path-gain recovery by LS on the vectorized effective channel and rebuild
//! of the full-dimensional channel estimate.

use ndarray::{Array1, Array2};
use ndarray_linalg::LeastSquaresSvd;
use num_complex::Complex64;

use crate::channel::steering_matrix;
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::esprit::AngleEstimates;
use crate::linalg::{hermitian, khatri_rao, vec_cm};
use crate::training::{EffectiveChannel, TrainingPlan};

/// Reconstructed channel: steering matrices at the estimated angles, the
/// scaled gain vector, and their product.
#[derive(Debug, Clone)]
pub struct ChannelEstimate {
    pub h_hat: Array2<Complex64>,
    /// Scaled gains sqrt(N_BS N_MS / L) * alpha_hat.
    pub d_hat: Array1<Complex64>,
    pub a_bs_hat: Array2<Complex64>,
    pub a_ms_hat: Array2<Complex64>,
}

/// Measurement matrix Z = (A_MS^H F~)^T (Khatri-Rao) (W~^H A_BS) mapping the
/// gain vector onto vec(H_bar).
pub fn measurement_matrix(
    a_bs: &Array2<Complex64>,
    a_ms: &Array2<Complex64>,
    plan: &TrainingPlan,
) -> Array2<Complex64> {
    let tx = hermitian(a_ms).dot(&plan.f_agg).t().to_owned();
    let rx = hermitian(&plan.w_agg).dot(a_bs);
    khatri_rao(&tx, &rx)
}

/// LS gain estimate d_hat = Z^+ vec(H_bar).
///
/// Solved through an orthogonal factorization instead of the normal
/// equations; the minimizer is identical.
pub fn estimate_gains(
    h_bar: &EffectiveChannel,
    angles: &AngleEstimates,
    plan: &TrainingPlan,
    config: &SystemConfig,
) -> Result<Array1<Complex64>> {
    let l = angles.pairs.len();
    if l == 0 {
        return Err(Error::Config("estimate_gains needs at least one path".into()));
    }
    // Near-duplicate angle pairs make Z rank deficient; report the collision
    // rather than producing arbitrary split gains.
    for i in 0..l {
        for j in 0..i {
            let (ai, di) = angles.pairs[i];
            let (aj, dj) = angles.pairs[j];
            if (ai - aj).abs() < 1e-6 && (di - dj).abs() < 1e-6 {
                return Err(Error::Singular(format!(
                    "estimated angle pairs {j} and {i} coincide within 1e-6 rad"
                )));
            }
        }
    }
    let aoa: Vec<f64> = angles.pairs.iter().map(|p| p.0).collect();
    let aod: Vec<f64> = angles.pairs.iter().map(|p| p.1).collect();
    let a_bs = steering_matrix(&aoa, config.n_bs, config.delta);
    let a_ms = steering_matrix(&aod, config.n_ms, config.delta);
    let z = measurement_matrix(&a_bs, &a_ms, plan);
    let rhs = vec_cm(&h_bar.h_bar);
    let sol = z.least_squares(&rhs)?;
    Ok(sol.solution)
}

/// Rebuild the high-dimensional channel from estimated angles and gains:
/// H_hat = A_BS_hat diag(d_hat) A_MS_hat^H.
pub fn reconstruct_channel(
    angles: &AngleEstimates,
    d_hat: &Array1<Complex64>,
    config: &SystemConfig,
) -> ChannelEstimate {
    assert_eq!(angles.pairs.len(), d_hat.len());
    let aoa: Vec<f64> = angles.pairs.iter().map(|p| p.0).collect();
    let aod: Vec<f64> = angles.pairs.iter().map(|p| p.1).collect();
    let a_bs_hat = steering_matrix(&aoa, config.n_bs, config.delta);
    let a_ms_hat = steering_matrix(&aod, config.n_ms, config.delta);
    let mut scaled = a_bs_hat.clone();
    for (mut col, &d) in scaled.columns_mut().into_iter().zip(d_hat.iter()) {
        col.mapv_inplace(|z| z * d);
    }
    let h_hat = scaled.dot(&hermitian(&a_ms_hat));
    ChannelEstimate {
        h_hat,
        d_hat: d_hat.clone(),
        a_bs_hat,
        a_ms_hat,
    }
}

/// Full estimator: angles via 2D unitary ESPRIT, gains via LS, then rebuild.
pub fn esprit_estimate(
    eff: &EffectiveChannel,
    plan: &TrainingPlan,
    config: &SystemConfig,
) -> Result<ChannelEstimate> {
    let angles = crate::esprit::estimate_angles(eff, config)?;
    let d_hat = estimate_gains(eff, &angles, plan, config)?;
    Ok(reconstruct_channel(&angles, &d_hat, config))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{assemble_channel, draw_paths};
    use crate::training::{aggregate_training, estimate_effective_channel, simulate_uplink};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn truth_as_estimates(aoa: &[f64], aod: &[f64]) -> AngleEstimates {
        AngleEstimates {
            pairs: aoa.iter().cloned().zip(aod.iter().cloned()).collect(),
            eigenvalues: vec![Complex64::new(0.0, 0.0); aoa.len()],
        }
    }

    #[test]
    fn plant_and_recover_gains() {
        let cfg = SystemConfig {
            min_angle_separation: Some(0.05),
            ..SystemConfig::default()
        };
        let plan = aggregate_training(&cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        for _ in 0..5 {
            let paths = draw_paths(&cfg, &mut rng);
            let h = assemble_channel(&paths, &cfg);
            let y = simulate_uplink(&h, &plan, 0.0, &mut rng);
            let eff = estimate_effective_channel(&y, &plan);
            let angles = truth_as_estimates(&paths.aoa, &paths.aod);
            let d_hat = estimate_gains(&eff, &angles, &plan, &cfg).unwrap();
            let scale = ((cfg.n_bs * cfg.n_ms) as f64 / cfg.n_paths as f64).sqrt();
            for (l, d) in d_hat.iter().enumerate() {
                let expect = paths.gains[l] * scale;
                assert!(
                    (d - expect).norm() < 1e-10 * expect.norm().max(1.0),
                    "gain {l}: got {d}, expected {expect}"
                );
            }
        }
    }

    #[test]
    fn single_boresight_gain() {
        let cfg = SystemConfig {
            n_paths: 1,
            ..SystemConfig::default()
        };
        let plan = aggregate_training(&cfg).unwrap();
        let paths = crate::channel::PathSet {
            aoa: vec![0.0],
            aod: vec![0.0],
            gains: vec![Complex64::new(1.0, 0.0)],
        };
        let h = assemble_channel(&paths, &cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let y = simulate_uplink(&h, &plan, 0.0, &mut rng);
        let eff = estimate_effective_channel(&y, &plan);
        let angles = truth_as_estimates(&[0.0], &[0.0]);
        let d_hat = estimate_gains(&eff, &angles, &plan, &cfg).unwrap();
        let expect = ((cfg.n_bs * cfg.n_ms) as f64).sqrt();
        assert_abs_diff_eq!(d_hat[0].re, expect, epsilon = 1e-8);
        assert_abs_diff_eq!(d_hat[0].im, 0.0, epsilon = 1e-8);
    }

    #[test]
    fn ls_residual_is_minimal() {
        let cfg = SystemConfig {
            min_angle_separation: Some(0.05),
            ..SystemConfig::default()
        };
        let plan = aggregate_training(&cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(200);
        let paths = draw_paths(&cfg, &mut rng);
        let h = assemble_channel(&paths, &cfg);
        let y = simulate_uplink(&h, &plan, 0.1, &mut rng);
        let eff = estimate_effective_channel(&y, &plan);
        let angles = truth_as_estimates(&paths.aoa, &paths.aod);
        let d_hat = estimate_gains(&eff, &angles, &plan, &cfg).unwrap();

        let a_bs = steering_matrix(&paths.aoa, cfg.n_bs, cfg.delta);
        let a_ms = steering_matrix(&paths.aod, cfg.n_ms, cfg.delta);
        let z = measurement_matrix(&a_bs, &a_ms, &plan);
        let rhs = vec_cm(&eff.h_bar);
        let resid = |d: &Array1<Complex64>| -> f64 {
            let r = &rhs - &z.dot(d);
            r.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
        };
        let best = resid(&d_hat);
        use rand::Rng;
        for _ in 0..100 {
            let alt = Array1::from_iter((0..cfg.n_paths).map(|_| {
                Complex64::new(rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0))
            }));
            assert!(resid(&alt) >= best - 1e-9);
        }
    }

    #[test]
    fn duplicate_angles_are_rejected() {
        let cfg = SystemConfig::default();
        let plan = aggregate_training(&cfg).unwrap();
        let eff = EffectiveChannel {
            h_bar: Array2::zeros((cfg.n_r(), cfg.n_t())),
            scale: 1.0,
        };
        let angles = truth_as_estimates(&[0.1, 0.1, 0.3, 0.4, 0.5], &[0.2, 0.2, 0.3, 0.4, 0.5]);
        match estimate_gains(&eff, &angles, &plan, &cfg) {
            Err(Error::Singular(msg)) => assert!(msg.contains('0') && msg.contains('1')),
            other => panic!("expected singularity error, got {other:?}"),
        }
    }

    #[test]
    fn zero_gains_give_zero_channel() {
        let cfg = SystemConfig::default();
        let angles = truth_as_estimates(&[0.1, -0.2, 0.3, 0.4, -0.5], &[0.0, 0.1, 0.2, 0.3, 0.4]);
        let d = Array1::zeros(5);
        let est = reconstruct_channel(&angles, &d, &cfg);
        assert!(est.h_hat.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn true_angles_and_gains_round_trip() {
        let cfg = SystemConfig {
            min_angle_separation: Some(0.05),
            ..SystemConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(321);
        let paths = draw_paths(&cfg, &mut rng);
        let h = assemble_channel(&paths, &cfg);
        let scale = ((cfg.n_bs * cfg.n_ms) as f64 / cfg.n_paths as f64).sqrt();
        let d = Array1::from_iter(paths.gains.iter().map(|g| g * scale));
        let angles = truth_as_estimates(&paths.aoa, &paths.aod);
        let est = reconstruct_channel(&angles, &d, &cfg);
        let num: f64 = (&est.h_hat - &h.h).iter().map(|z| z.norm_sqr()).sum();
        let den: f64 = h.h.iter().map(|z| z.norm_sqr()).sum();
        assert!((num / den).sqrt() < 1e-10);
    }

    #[test]
    fn construction_identity_holds() {
        let cfg = SystemConfig::default();
        let angles = truth_as_estimates(&[0.1, -0.2, 0.3, 0.4, -0.5], &[0.0, 0.1, 0.2, 0.3, 0.4]);
        let d = Array1::from_iter((0..5).map(|k| Complex64::new(k as f64, -(k as f64))));
        let est = reconstruct_channel(&angles, &d, &cfg);
        let mut scaled = est.a_bs_hat.clone();
        for (mut col, &dv) in scaled.columns_mut().into_iter().zip(est.d_hat.iter()) {
            col.mapv_inplace(|z| z * dv);
        }
        let rebuilt = scaled.dot(&hermitian(&est.a_ms_hat));
        for (a, b) in rebuilt.iter().zip(est.h_hat.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn gain_ls_is_permutation_equivariant() {
        let cfg = SystemConfig {
            min_angle_separation: Some(0.05),
            ..SystemConfig::default()
        };
        let plan = aggregate_training(&cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let paths = draw_paths(&cfg, &mut rng);
        let h = assemble_channel(&paths, &cfg);
        let y = simulate_uplink(&h, &plan, 0.0, &mut rng);
        let eff = estimate_effective_channel(&y, &plan);

        let angles = truth_as_estimates(&paths.aoa, &paths.aod);
        let perm: Vec<usize> = vec![3, 1, 4, 0, 2];
        let p_aoa: Vec<f64> = perm.iter().map(|&i| paths.aoa[i]).collect();
        let p_aod: Vec<f64> = perm.iter().map(|&i| paths.aod[i]).collect();
        let angles_p = truth_as_estimates(&p_aoa, &p_aod);

        let d = estimate_gains(&eff, &angles, &plan, &cfg).unwrap();
        let d_p = estimate_gains(&eff, &angles_p, &plan, &cfg).unwrap();
        for (k, &i) in perm.iter().enumerate() {
            assert!((d_p[k] - d[i]).norm() < 1e-8);
        }
        let h1 = reconstruct_channel(&angles, &d, &cfg).h_hat;
        let h2 = reconstruct_channel(&angles_p, &d_p, &cfg).h_hat;
        let num: f64 = (&h1 - &h2).iter().map(|z| z.norm_sqr()).sum();
        let den: f64 = h1.iter().map(|z| z.norm_sqr()).sum();
        assert!((num / den).sqrt() < 1e-12);
    }
}
