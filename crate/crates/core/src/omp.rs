//! Grid-dictionary orthogonal matching pursuit baseline estimator.

use ndarray::{Array1, Array2};
use ndarray_linalg::LeastSquaresSvd;
use num_complex::Complex64;

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::esprit::AngleEstimates;
use crate::linalg::{hermitian, kron_vec, vec_cm};
use crate::reconstruction::{reconstruct_channel, ChannelEstimate};
use crate::training::{EffectiveChannel, TrainingPlan};

/// Virtual angle grid and the factored sensing matrix it induces.
///
/// Atoms are kept in factored form: atom (a, d) is the Kronecker product of
/// the transmit response at grid AoD `d` with the receive response at grid
/// AoA `a`, matching the measurement structure of the gain LS. Correlations
/// against a residual then reduce to two small matrix products.
#[derive(Debug, Clone)]
pub struct GridDictionary {
    pub g: usize,
    pub virtual_aoa: Vec<f64>,
    pub virtual_aod: Vec<f64>,
    /// W~^H a_BS(theta_a) per grid AoA, N_R x G.
    rx: Array2<Complex64>,
    /// F~^T a_MS(phi_d)^* per grid AoD, N_T x G.
    tx: Array2<Complex64>,
    rx_norms: Vec<f64>,
    tx_norms: Vec<f64>,
}

impl GridDictionary {
    /// Unit-normalized atom for grid pair (aoa index, aod index).
    pub fn atom(&self, a: usize, d: usize) -> Array1<Complex64> {
        let v = kron_vec(&self.tx.column(d).to_owned(), &self.rx.column(a).to_owned());
        let n = self.tx_norms[d] * self.rx_norms[a];
        v.mapv(|z| z / n)
    }

    /// Unnormalized atom, as used for the support LS refit.
    pub fn atom_raw(&self, a: usize, d: usize) -> Array1<Complex64> {
        kron_vec(&self.tx.column(d).to_owned(), &self.rx.column(a).to_owned())
    }

    pub fn atom_count(&self) -> usize {
        self.g * self.g
    }

    /// |atom^H vec(residual)| for every grid pair, as a G x G matrix
    /// (rows: AoA grid, columns: AoD grid).
    pub fn correlations(&self, residual: &Array2<Complex64>) -> Array2<f64> {
        let m = hermitian(&self.rx)
            .dot(residual)
            .dot(&self.tx.mapv(|z| z.conj()));
        let mut out = Array2::zeros((self.g, self.g));
        for a in 0..self.g {
            for d in 0..self.g {
                out[(a, d)] = m[(a, d)].norm() / (self.rx_norms[a] * self.tx_norms[d]);
            }
        }
        out
    }
}

/// Build a uniform sin-angle grid dictionary over the configured support.
pub fn build_dictionary(config: &SystemConfig, g: usize, plan: &TrainingPlan) -> GridDictionary {
    assert!(g >= 2, "grid needs at least two points");
    let s_max = config.angle_range.sin();
    let angles: Vec<f64> = (0..g)
        .map(|k| (-s_max + 2.0 * s_max * k as f64 / (g - 1) as f64).asin())
        .collect();

    let a_bs = crate::channel::steering_matrix(&angles, config.n_bs, config.delta);
    let a_ms = crate::channel::steering_matrix(&angles, config.n_ms, config.delta);
    let rx = hermitian(&plan.w_agg).dot(&a_bs);
    let tx = plan.f_agg.t().to_owned().dot(&a_ms.mapv(|z| z.conj()));

    let rx_norms = (0..g)
        .map(|k| rx.column(k).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        .collect();
    let tx_norms = (0..g)
        .map(|k| tx.column(k).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        .collect();

    GridDictionary {
        g,
        virtual_aoa: angles.clone(),
        virtual_aod: angles,
        rx,
        tx,
        rx_norms,
        tx_norms,
    }
}

/// One greedy pass: selected grid pairs, fitted gains, and the final
/// effective-domain residual Frobenius norm.
pub fn omp_solve(
    h_bar: &EffectiveChannel,
    dict: &GridDictionary,
    n_iter: usize,
) -> Result<(Vec<(usize, usize)>, Array1<Complex64>, f64)> {
    assert!(n_iter <= dict.atom_count());
    let (n_r, n_t) = h_bar.h_bar.dim();
    let target = vec_cm(&h_bar.h_bar);
    if n_iter == 0 {
        let norm = target.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        return Ok((Vec::new(), Array1::zeros(0), norm));
    }
    let mut residual = h_bar.h_bar.clone();
    let mut support: Vec<(usize, usize)> = Vec::with_capacity(n_iter);
    let mut basis = Array2::zeros((n_r * n_t, 0));
    let mut gains = Array1::zeros(0);

    for _ in 0..n_iter {
        let corr = dict.correlations(&residual);
        let mut best = (0usize, 0usize);
        let mut best_val = -1.0;
        for a in 0..dict.g {
            for d in 0..dict.g {
                if corr[(a, d)] > best_val && !support.contains(&(a, d)) {
                    best_val = corr[(a, d)];
                    best = (a, d);
                }
            }
        }
        support.push(best);

        let mut next = Array2::zeros((n_r * n_t, support.len()));
        next.slice_mut(ndarray::s![.., 0..basis.ncols()]).assign(&basis);
        next.column_mut(support.len() - 1)
            .assign(&dict.atom_raw(best.0, best.1));
        basis = next;

        let sol = basis
            .least_squares(&target)
            .map_err(|e| Error::Singular(format!("support LS failed: {e}")))?;
        gains = sol.solution;

        let fit = basis.dot(&gains);
        let res_vec = &target - &fit;
        residual = crate::linalg::unvec_cm(&res_vec, n_r, n_t);
    }

    let res_norm = residual.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    Ok((support, gains, res_norm))
}

/// Greedy OMP estimate: `n_iter` rounds of residual correlation, support
/// augmentation, and LS refit, then channel rebuild from the selected grid
/// angles and fitted gains.
pub fn omp_estimate(
    h_bar: &EffectiveChannel,
    dict: &GridDictionary,
    n_iter: usize,
    config: &SystemConfig,
) -> Result<ChannelEstimate> {
    let (support, gains, _) = omp_solve(h_bar, dict, n_iter)?;
    if support.is_empty() {
        return Ok(ChannelEstimate {
            h_hat: Array2::zeros((config.n_bs, config.n_ms)),
            d_hat: Array1::zeros(0),
            a_bs_hat: Array2::zeros((config.n_bs, 0)),
            a_ms_hat: Array2::zeros((config.n_ms, 0)),
        });
    }
    let pairs: Vec<(f64, f64)> = support
        .iter()
        .map(|&(a, d)| (dict.virtual_aoa[a], dict.virtual_aod[d]))
        .collect();
    let angles = AngleEstimates {
        pairs,
        eigenvalues: vec![Complex64::new(0.0, 0.0); support.len()],
    };
    Ok(reconstruct_channel(&angles, &gains, config))
}
