use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// All dimensional and physical parameters of the simulated link.
///
/// Antenna counts refer to uniform linear arrays at the base station (BS)
/// and mobile station (MS). `n_b_t`/`n_b_r` are the numbers of training
/// blocks on the transmit/receive side, `m1`/`m2` the stacking parameters
/// of the Hankel construction.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemConfig {
    /// BS antenna count.
    pub n_bs: usize,
    /// MS antenna count.
    pub n_ms: usize,
    /// RF chains at the BS.
    pub n_rf_bs: usize,
    /// RF chains at the MS.
    pub n_rf_ms: usize,
    /// Data / pilot stream count.
    pub n_s: usize,
    /// Transmit-side block count.
    pub n_b_t: usize,
    /// Receive-side block count.
    pub n_b_r: usize,
    /// Normalized antenna spacing d / lambda.
    pub delta: f64,
    /// Number of propagation paths.
    pub n_paths: usize,
    /// Hankel stacking parameter along the transmit dimension.
    pub m1: usize,
    /// Hankel stacking parameter along the receive dimension.
    pub m2: usize,
    /// Path gain variance (linear).
    pub sigma_alpha_sq: f64,
    /// Half-width of the uniform angle support, radians.
    pub angle_range: f64,
    /// SNR sweep points in dB.
    pub snr_db_grid: Vec<f64>,
    /// Monte Carlo trial count.
    pub n_trials: usize,
    /// RNG seed.
    pub seed: u64,
    /// Optional minimum angle separation (radians, per axis) enforced when
    /// drawing paths. `None` allows arbitrarily close paths.
    #[serde(default)]
    pub min_angle_separation: Option<f64>,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            n_bs: 64,
            n_ms: 64,
            n_rf_bs: 4,
            n_rf_ms: 4,
            n_s: 3,
            n_b_t: 10,
            n_b_r: 10,
            delta: 0.5,
            n_paths: 5,
            m1: 13,
            m2: 13,
            sigma_alpha_sq: 1.0,
            angle_range: std::f64::consts::PI / 3.0,
            snr_db_grid: vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0],
            n_trials: 200,
            seed: 1,
            min_angle_separation: None,
        }
    }
}

impl SystemConfig {
    /// Rows of the effective channel, N_R = N_b^R * N_S.
    pub fn n_r(&self) -> usize {
        self.n_b_r * self.n_s
    }

    /// Columns of the effective channel, N_T = N_b^T * N_S.
    pub fn n_t(&self) -> usize {
        self.n_b_t * self.n_s
    }

    /// Pilot symbols per block; the unitary pilot uses T_MS = N_S.
    pub fn t_ms(&self) -> usize {
        self.n_s
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_paths == 0 {
            return Err(Error::Config("n_paths must be at least 1".into()));
        }
        if !(self.n_s <= self.n_rf_ms && self.n_rf_ms <= self.n_ms) {
            return Err(Error::Config(format!(
                "need n_s <= n_rf_ms <= n_ms, got {} <= {} <= {}",
                self.n_s, self.n_rf_ms, self.n_ms
            )));
        }
        if !(self.n_s <= self.n_rf_bs && self.n_rf_bs <= self.n_bs) {
            return Err(Error::Config(format!(
                "need n_s <= n_rf_bs <= n_bs, got {} <= {} <= {}",
                self.n_s, self.n_rf_bs, self.n_bs
            )));
        }
        // The training construction pads analog blocks with a column that is
        // orthogonal to the first n_s, which needs one spare RF chain.
        if self.n_s >= self.n_rf_ms || self.n_s >= self.n_rf_bs {
            return Err(Error::Config(format!(
                "training design needs n_s < n_rf (got n_s = {}, n_rf_ms = {}, n_rf_bs = {})",
                self.n_s, self.n_rf_ms, self.n_rf_bs
            )));
        }
        if self.n_t() > self.n_ms {
            return Err(Error::Config(format!(
                "n_b_t * n_s = {} exceeds n_ms = {}",
                self.n_t(),
                self.n_ms
            )));
        }
        if self.n_r() > self.n_bs {
            return Err(Error::Config(format!(
                "n_b_r * n_s = {} exceeds n_bs = {}",
                self.n_r(),
                self.n_bs
            )));
        }
        if !(2 <= self.m1 && self.m1 <= self.n_t()) {
            return Err(Error::Config(format!(
                "need 2 <= m1 <= n_t, got m1 = {}, n_t = {}",
                self.m1,
                self.n_t()
            )));
        }
        if !(1 <= self.m2 && self.m2 <= self.n_r() - 1) {
            return Err(Error::Config(format!(
                "need 1 <= m2 <= n_r - 1, got m2 = {}, n_r = {}",
                self.m2,
                self.n_r()
            )));
        }
        if self.delta <= 0.0 {
            return Err(Error::Config("delta must be positive".into()));
        }
        if self.sigma_alpha_sq <= 0.0 {
            return Err(Error::Config("sigma_alpha_sq must be positive".into()));
        }
        // tan(pi * delta * sin(theta)) must stay away from its poles.
        let limit = if 2.0 * self.delta <= 1.0 {
            std::f64::consts::FRAC_PI_2
        } else {
            (1.0 / (2.0 * self.delta)).asin()
        };
        if self.angle_range >= limit {
            return Err(Error::Config(format!(
                "angle_range {} must be below {} for delta = {}",
                self.angle_range, limit, self.delta
            )));
        }
        Ok(())
    }

    /// Parse from TOML text. Unknown keys are rejected.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: SystemConfig =
            toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        SystemConfig::default().validate().unwrap();
    }

    #[test]
    fn rejects_oversized_blocks() {
        let cfg = SystemConfig {
            n_b_t: 30,
            ..SystemConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn rejects_bad_stacking() {
        let cfg = SystemConfig {
            m2: 30,
            ..SystemConfig::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = SystemConfig {
            m1: 1,
            ..SystemConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn rejects_unknown_keys() {
        let text = r#"
            n_bs = 64
            n_ms = 64
            bogus = 1
        "#;
        assert!(SystemConfig::from_toml_str(text).is_err());
    }

    #[test]
    fn partial_toml_fills_defaults() {
        let cfg = SystemConfig::from_toml_str("n_paths = 7\nseed = 9\n").unwrap();
        assert_eq!(cfg.n_paths, 7);
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.n_bs, SystemConfig::default().n_bs);
    }

    #[test]
    fn toml_round_trip() {
        let cfg = SystemConfig::default();
        let text = toml::to_string(&cfg).unwrap();
        let back = SystemConfig::from_toml_str(&text).unwrap();
        assert_eq!(back.n_bs, cfg.n_bs);
        assert_eq!(back.snr_db_grid, cfg.snr_db_grid);
    }

    #[test]
    fn rejects_wide_angle_support_for_large_spacing() {
        let cfg = SystemConfig {
            delta: 1.0,
            angle_range: 1.0,
            ..SystemConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
