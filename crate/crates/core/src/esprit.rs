//! 2D unitary ESPRIT on the effective channel: Hankel stacking,
//! forward-backward extension, real transform, subspace extraction, and
//! joint diagonalization into paired AoA/AoD estimates.

use ndarray::{s, Array1, Array2};
use ndarray_linalg::{Eig, LeastSquaresSvd, SVD};
use num_complex::Complex64;

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::linalg::{conj, flip_rows, hermitian, kron, to_complex};
use crate::training::EffectiveChannel;

/// Paired angle estimates together with the eigenvalues they decode from.
#[derive(Debug, Clone)]
pub struct AngleEstimates {
    /// (aoa, aod) pairs, radians. Pairing comes from the shared eigenvector.
    pub pairs: Vec<(f64, f64)>,
    /// Eigenvalues lambda_l; Re decodes the AoD, Im the AoA.
    pub eigenvalues: Vec<Complex64>,
}

/// Real selection operators for the two shift directions.
#[derive(Debug, Clone)]
pub struct SelectionMatrices {
    pub e_theta_re: Array2<f64>,
    pub e_theta_im: Array2<f64>,
    pub e_phi_re: Array2<f64>,
    pub e_phi_im: Array2<f64>,
}

/// Block-Hankel stacking of the effective channel.
///
/// Block-row j (1..m1) and block-column i (1..m2) hold the window of
/// `h_bar` with rows i..N_R-m2+i and columns j..N_T-m1+j. Output shape is
/// m1 (N_R - m2 + 1) x m2 (N_T - m1 + 1).
pub fn build_hankel(h_bar: &Array2<Complex64>, m1: usize, m2: usize) -> Result<Array2<Complex64>> {
    let (n_r, n_t) = h_bar.dim();
    if !(2 <= m1 && m1 <= n_t) {
        return Err(Error::Config(format!(
            "hankel: need 2 <= m1 <= {}, got {}",
            n_t, m1
        )));
    }
    if !(1 <= m2 && m2 + 1 <= n_r) {
        return Err(Error::Config(format!(
            "hankel: need 1 <= m2 <= {}, got {}",
            n_r - 1,
            m2
        )));
    }
    let br = n_r - m2 + 1;
    let bc = n_t - m1 + 1;
    let mut out = Array2::zeros((m1 * br, m2 * bc));
    for j in 0..m1 {
        for i in 0..m2 {
            let window = h_bar.slice(s![i..i + br, j..j + bc]);
            out.slice_mut(s![j * br..(j + 1) * br, i * bc..(i + 1) * bc])
                .assign(&window);
        }
    }
    Ok(out)
}

/// Forward-backward extension: [H, J H*] with J the row-reversal exchange.
pub fn extend_forward_backward(hankel: &Array2<Complex64>) -> Array2<Complex64> {
    let (r, c) = hankel.dim();
    let mut out = Array2::zeros((r, 2 * c));
    out.slice_mut(s![.., 0..c]).assign(hankel);
    out.slice_mut(s![.., c..2 * c])
        .assign(&flip_rows(&conj(hankel)));
    out
}

/// Left J-real unitary matrix Q_n with J Q* = Q.
pub fn q_matrix(n: usize) -> Array2<Complex64> {
    assert!(n >= 1);
    let h = n / 2;
    let s = 1.0 / 2f64.sqrt();
    let i = Complex64::i();
    let mut q = Array2::zeros((n, n));
    for k in 0..h {
        q[(k, k)] = Complex64::new(s, 0.0);
        q[(k, n - h + k)] = i * s;
        // J block reverses row order within the lower half.
        q[(n - 1 - k, k)] = Complex64::new(s, 0.0);
        q[(n - 1 - k, n - h + k)] = -i * s;
    }
    if n % 2 == 1 {
        q[(h, h)] = Complex64::new(1.0, 0.0);
    }
    q
}

/// Real processing: T_L He T_R with T_L = Q_{m1}^H kron Q_{N_R-m2+1}^H and
/// T_R the [I, jI; I, -jI] block form. The imaginary residue is asserted to
/// be negligible before truncation to real storage.
pub fn real_transform(
    extended: &Array2<Complex64>,
    m1: usize,
    n_r: usize,
    m2: usize,
) -> Result<Array2<f64>> {
    let br = n_r - m2 + 1;
    let (rows, cols) = extended.dim();
    if rows != m1 * br {
        return Err(Error::Config(format!(
            "real_transform: row count {} does not match m1 (N_R - m2 + 1) = {}",
            rows,
            m1 * br
        )));
    }
    let half = cols / 2;
    let t_left = hermitian(&kron(&q_matrix(m1), &q_matrix(br)));
    let left = t_left.dot(extended);

    // Right-multiplying by [I, jI; I, -jI] expands into block sums, which
    // avoids materializing the 2c x 2c matrix.
    let a = left.slice(s![.., 0..half]).to_owned();
    let b = left.slice(s![.., half..cols]).to_owned();
    let i = Complex64::i();
    let mut full = Array2::zeros((rows, cols));
    full.slice_mut(s![.., 0..half]).assign(&(&a + &b));
    full.slice_mut(s![.., half..cols])
        .assign(&(&a.mapv(|z| z * i) - &b.mapv(|z| z * i)));

    let fro = full.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let im_max = full.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    if fro > 0.0 && im_max > 1e-10 * fro {
        return Err(Error::InternalConsistency(format!(
            "imaginary residue {:.3e} exceeds 1e-10 * ||.||_F = {:.3e}",
            im_max,
            1e-10 * fro
        )));
    }
    Ok(full.mapv(|z| z.re))
}

/// First `l` left singular vectors of the real-processed matrix.
pub fn signal_subspace(real_form: &Array2<f64>, l: usize) -> Result<Array2<f64>> {
    let (r, c) = real_form.dim();
    if l > r.min(c) {
        return Err(Error::Config(format!(
            "signal subspace dimension {} exceeds min({}, {})",
            l, r, c
        )));
    }
    let (u, _s, _) = real_form.svd(true, false)?;
    let u = u.expect("left singular vectors requested");
    Ok(u.slice(s![.., 0..l]).to_owned())
}

/// Singular values of the real-processed matrix; exposed for model-order
/// selection (ratio-threshold hook) and diagnostics.
pub fn singular_values(real_form: &Array2<f64>) -> Result<Array1<f64>> {
    let (_, s, _) = real_form.svd(false, false)?;
    Ok(s)
}

/// Model-order hook: number of singular values above `threshold * s_max`.
pub fn suggest_model_order(singular_values: &Array1<f64>, threshold: f64) -> usize {
    if singular_values.is_empty() {
        return 0;
    }
    let s_max = singular_values[0];
    singular_values.iter().filter(|&&s| s > threshold * s_max).count()
}

/// Selection operators:
/// E_theta = I_{m1} kron (Q_{N_R-m2}^H [0 I] Q_{N_R-m2+1}),
/// E_phi   = (Q_{m1-1}^H [0 I] Q_{m1}) kron I_{N_R-m2+1},
/// split into real and imaginary parts.
pub fn selection_matrices(m1: usize, n_r: usize, m2: usize) -> SelectionMatrices {
    assert!(m1 >= 2 && n_r > m2);
    let br = n_r - m2 + 1;

    let inner_theta = shifted_q_product(br);
    let e_theta = kron(&to_complex(&Array2::eye(m1)), &inner_theta);

    let inner_phi = shifted_q_product(m1);
    let e_phi = kron(&inner_phi, &to_complex(&Array2::eye(br)));

    SelectionMatrices {
        e_theta_re: e_theta.mapv(|z| z.re),
        e_theta_im: e_theta.mapv(|z| z.im),
        e_phi_re: e_phi.mapv(|z| z.re),
        e_phi_im: e_phi.mapv(|z| z.im),
    }
}

/// Q_{n-1}^H [0 I_{n-1}] Q_n, the one-step shift conjugated into the real domain.
fn shifted_q_product(n: usize) -> Array2<Complex64> {
    let q_small = q_matrix(n - 1);
    let q_big = q_matrix(n);
    // [0 I] Q_n drops the first row of Q_n.
    let shifted = q_big.slice(s![1..n, ..]).to_owned();
    hermitian(&q_small).dot(&shifted)
}

/// Joint diagonalization: Psi = (E_phi,R U)^+ (E_phi,I U) + j (E_theta,R U)^+ (E_theta,I U);
/// its eigenvalues decode into paired (AoA, AoD) through the tangent map.
pub fn joint_angle_estimation(
    u_sig: &Array2<f64>,
    selections: &SelectionMatrices,
    delta: f64,
    l: usize,
) -> Result<AngleEstimates> {
    let x_phi = pinv_solve(&selections.e_phi_re.dot(u_sig), &selections.e_phi_im.dot(u_sig), l)?;
    let x_theta = pinv_solve(
        &selections.e_theta_re.dot(u_sig),
        &selections.e_theta_im.dot(u_sig),
        l,
    )?;

    let mut psi: Array2<Complex64> = Array2::zeros((l, l));
    for r in 0..l {
        for c in 0..l {
            psi[(r, c)] = Complex64::new(x_phi[(r, c)], x_theta[(r, c)]);
        }
    }

    let (eigenvalues, _vecs) = psi.eig()?;
    let mut pairs = Vec::with_capacity(l);
    for lam in eigenvalues.iter() {
        let aoa = decode_angle(lam.im, delta)?;
        // The transmit steering enters the channel conjugated (A_MS^H), so
        // the transmit-shift eigenvalue carries the departure angle with a
        // negated sign; undo it here.
        let aod = -decode_angle(lam.re, delta)?;
        pairs.push((aoa, aod));
    }
    Ok(AngleEstimates {
        pairs,
        eigenvalues: eigenvalues.to_vec(),
    })
}

/// Least-squares pseudo-inverse application X = A^+ B with a rank check.
fn pinv_solve(a: &Array2<f64>, b: &Array2<f64>, l: usize) -> Result<Array2<f64>> {
    let (_, sv, _) = a.svd(false, false)?;
    let tol = a.nrows().max(a.ncols()) as f64 * f64::EPSILON * sv[0];
    let rank = sv.iter().filter(|&&s| s > tol).count();
    if rank < l {
        return Err(Error::Estimation {
            reason: format!("selection-projected subspace has rank {} < {}", rank, l),
            condition: sv[0] / sv[sv.len() - 1].max(f64::MIN_POSITIVE),
        });
    }
    let sol = a.least_squares(b)?;
    Ok(sol.solution)
}

/// Invert the tangent map: angle = arcsin(arctan(value) / (pi delta)).
fn decode_angle(value: f64, delta: f64) -> Result<f64> {
    let limit = std::f64::consts::PI * delta;
    let t = value.atan();
    if t.abs() >= limit {
        return Err(Error::AngleDomain(format!(
            "arctan output {t} outside (-{limit}, {limit})"
        )));
    }
    Ok((t / limit).asin())
}

/// Full Algorithm-1 chain from effective channel to paired angle estimates.
pub fn estimate_angles(eff: &EffectiveChannel, config: &SystemConfig) -> Result<AngleEstimates> {
    let hankel = build_hankel(&eff.h_bar, config.m1, config.m2)?;
    let extended = extend_forward_backward(&hankel);
    let real_form = real_transform(&extended, config.m1, config.n_r(), config.m2)?;
    let u_sig = signal_subspace(&real_form, config.n_paths)?;
    let sel = selection_matrices(config.m1, config.n_r(), config.m2);
    joint_angle_estimation(&u_sig, &sel, config.delta, config.n_paths)
}
