//! Geometric sparse mmWave channel with ULA steering vectors at BS and MS.

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal, Uniform};

use crate::config::SystemConfig;
use crate::linalg::hermitian;

/// Ground-truth per-path angles and complex gains.
#[derive(Debug, Clone)]
pub struct PathSet {
    /// Azimuth angles of arrival (BS side), radians.
    pub aoa: Vec<f64>,
    /// Azimuth angles of departure (MS side), radians.
    pub aod: Vec<f64>,
    /// Complex path gains.
    pub gains: Vec<Complex64>,
}

impl PathSet {
    pub fn len(&self) -> usize {
        self.gains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gains.is_empty()
    }
}

/// Full-dimensional channel matrix, N_BS x N_MS.
#[derive(Debug, Clone)]
pub struct ChannelMatrix {
    pub h: Array2<Complex64>,
}

/// ULA steering vector: element k is (1/sqrt(n)) * exp(j 2 pi k delta sin(angle)).
pub fn steering_vector(angle: f64, n: usize, delta: f64) -> Array1<Complex64> {
    assert!(n >= 1 && delta > 0.0);
    let scale = 1.0 / (n as f64).sqrt();
    let omega = 2.0 * std::f64::consts::PI * delta * angle.sin();
    Array1::from_iter((0..n).map(|k| {
        Complex64::from_polar(scale, omega * k as f64)
    }))
}

/// Steering matrix with one column per angle.
pub fn steering_matrix(angles: &[f64], n: usize, delta: f64) -> Array2<Complex64> {
    let mut a = Array2::zeros((n, angles.len()));
    for (l, &ang) in angles.iter().enumerate() {
        a.column_mut(l).assign(&steering_vector(ang, n, delta));
    }
    a
}

/// Draw L paths: angles uniform on [-angle_range, angle_range], gains
/// circularly-symmetric complex Gaussian with variance sigma_alpha_sq.
///
/// When `min_angle_separation` is set, angle draws are rejected until every
/// pair is separated by at least that much in both AoA and AoD.
pub fn draw_paths<R: Rng>(config: &SystemConfig, rng: &mut R) -> PathSet {
    let uni = Uniform::new_inclusive(-config.angle_range, config.angle_range);
    let normal = Normal::new(0.0, (config.sigma_alpha_sq / 2.0).sqrt()).unwrap();
    let l = config.n_paths;

    let (aoa, aod) = loop {
        let aoa: Vec<f64> = (0..l).map(|_| uni.sample(rng)).collect();
        let aod: Vec<f64> = (0..l).map(|_| uni.sample(rng)).collect();
        match config.min_angle_separation {
            None => break (aoa, aod),
            Some(sep) => {
                let ok = (0..l).all(|i| {
                    (0..i).all(|j| {
                        (aoa[i] - aoa[j]).abs() >= sep && (aod[i] - aod[j]).abs() >= sep
                    })
                });
                if ok {
                    break (aoa, aod);
                }
            }
        }
    };

    let gains = (0..l)
        .map(|_| Complex64::new(normal.sample(rng), normal.sample(rng)))
        .collect();
    PathSet { aoa, aod, gains }
}

/// H = sqrt(N_BS N_MS / L) * sum_l alpha_l a_BS(theta_l) a_MS(phi_l)^H.
///
/// Summation runs in ascending path order so repeated calls are bitwise
/// reproducible.
pub fn assemble_channel(paths: &PathSet, config: &SystemConfig) -> ChannelMatrix {
    let l = paths.len();
    assert!(l >= 1, "assemble_channel needs at least one path");
    let scale = ((config.n_bs * config.n_ms) as f64 / l as f64).sqrt();
    let mut h = Array2::zeros((config.n_bs, config.n_ms));
    for i in 0..l {
        let a_bs = steering_vector(paths.aoa[i], config.n_bs, config.delta);
        let a_ms = steering_vector(paths.aod[i], config.n_ms, config.delta);
        let coeff = paths.gains[i] * scale;
        for r in 0..config.n_bs {
            for c in 0..config.n_ms {
                h[(r, c)] += coeff * a_bs[r] * a_ms[c].conj();
            }
        }
    }
    ChannelMatrix { h }
}

/// Factored form H = A_BS D A_MS^H; agrees with [`assemble_channel`] up to
/// accumulation round-off.
pub fn assemble_channel_factored(paths: &PathSet, config: &SystemConfig) -> ChannelMatrix {
    let l = paths.len();
    let a_bs = steering_matrix(&paths.aoa, config.n_bs, config.delta);
    let a_ms = steering_matrix(&paths.aod, config.n_ms, config.delta);
    let scale = ((config.n_bs * config.n_ms) as f64 / l as f64).sqrt();
    let mut d = Array2::zeros((l, l));
    for i in 0..l {
        d[(i, i)] = paths.gains[i] * scale;
    }
    let h = a_bs.dot(&d).dot(&hermitian(&a_ms));
    ChannelMatrix { h }
}
