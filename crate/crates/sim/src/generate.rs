//! Scenario data: AR(1) Gaussian designs, random active sets, responses.
//!
//! Each replicate owns one ChaCha stream derived from `(seed, run)`, and the
//! draws happen in a fixed order (design, placement, noise) whose amount
//! does not depend on `k0` or the coefficient size. Replicate `r` therefore
//! sees the same design and noise across all points of a sweep.

use rand::seq::SliceRandom;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use covtest_core::{ColumnScaling, DesignMatrix, Response};

use crate::config::{ScenarioConfig, SignPattern};
use crate::error::Result;

/// RNG stream of replicate `run`.
pub fn replicate_rng(seed: u64, run: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run as u64);
    rng
}

/// Rows i.i.d. N(0, Σ) with Σ_ij = ρ^|i−j|, via the AR(1) recursion
/// `x_1 = z_1`, `x_j = ρ x_{j−1} + sqrt(1 − ρ²) z_j`; columns then scaled
/// per `cfg.column_scaling`.
pub fn gen_ar1_design(cfg: &ScenarioConfig, rng: &mut ChaCha8Rng) -> Result<DesignMatrix> {
    let (n, p, rho) = (cfg.n, cfg.p, cfg.rho);
    let innov = (1.0 - rho * rho).sqrt();
    let mut values = vec![0.0; n * p];
    for i in 0..n {
        let mut prev = 0.0;
        for j in 0..p {
            let z: f64 = rng.sample(StandardNormal);
            let v = if j == 0 { z } else { rho * prev + innov * z };
            values[j * n + i] = v;
            prev = v;
        }
    }
    Ok(DesignMatrix::from_col_major(
        n,
        p,
        values,
        cfg.column_scaling,
    )?)
}

/// Uniform random `k0`-subset (sorted) with coefficients `coef_size`.
/// A full permutation is drawn so the stream position is independent of `k0`.
pub fn place_active(cfg: &ScenarioConfig, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<usize>) {
    let mut perm: Vec<usize> = (0..cfg.p).collect();
    perm.shuffle(rng);
    active_from_permutation(cfg, &perm, None)
}

pub(crate) fn active_from_permutation(
    cfg: &ScenarioConfig,
    perm: &[usize],
    signs: Option<&[f64]>,
) -> (Vec<f64>, Vec<usize>) {
    let mut a_star = perm[..cfg.k0].to_vec();
    a_star.sort_unstable();
    let mut beta = vec![0.0; cfg.p];
    for &j in &a_star {
        let s = signs.map_or(1.0, |s| s[j]);
        beta[j] = s * cfg.coef_size;
    }
    (beta, a_star)
}

/// `y = Xβ* + σ·ε` with ε standard normal.
pub fn gen_response(
    x: &DesignMatrix,
    beta_star: &[f64],
    sigma: f64,
    rng: &mut ChaCha8Rng,
) -> Response {
    let eps: Vec<f64> = (0..x.n()).map(|_| rng.sample(StandardNormal)).collect();
    response_from_noise(x, beta_star, sigma, &eps)
}

fn response_from_noise(x: &DesignMatrix, beta_star: &[f64], sigma: f64, eps: &[f64]) -> Response {
    let mut y = x.mul(beta_star);
    for (v, e) in y.iter_mut().zip(eps) {
        *v += sigma * e;
    }
    Response::new(y).expect("finite response")
}

/// All random ingredients of one replicate.
#[derive(Debug, Clone)]
pub struct Replicate {
    /// Unscaled AR(1) draws; the response is generated from these.
    pub x_raw: DesignMatrix,
    /// Design handed to the estimators (scaled per the config).
    pub x: DesignMatrix,
    /// `x.col(j) = factors[j] · x_raw.col(j)`
    pub factors: Vec<f64>,
    pub permutation: Vec<usize>,
    /// Standard-normal noise, before multiplying by σ.
    pub noise: Vec<f64>,
    /// ±1 per coordinate, drawn only for random sign patterns.
    pub signs: Option<Vec<f64>>,
}

/// Data for one (k0, coefficient size) point of a replicate.
#[derive(Debug, Clone)]
pub struct ScenarioData {
    pub y: Response,
    pub a_star: Vec<usize>,
    /// True coefficients on the unscaled design.
    pub beta_star: Vec<f64>,
    /// True coefficients on the analysis design.
    pub beta_analysis: Vec<f64>,
    /// `y − Xβ*`
    pub eps: Vec<f64>,
}

impl Replicate {
    pub fn draw(cfg: &ScenarioConfig, run: usize) -> Result<Self> {
        let mut rng = replicate_rng(cfg.seed, run);
        let raw_cfg = ScenarioConfig {
            column_scaling: ColumnScaling::Raw,
            ..cfg.clone()
        };
        let x_raw = gen_ar1_design(&raw_cfg, &mut rng)?;
        let mut permutation: Vec<usize> = (0..cfg.p).collect();
        permutation.shuffle(&mut rng);
        let noise: Vec<f64> = (0..cfg.n).map(|_| rng.sample(StandardNormal)).collect();
        let signs = match cfg.signs {
            SignPattern::Positive => None,
            SignPattern::Random => Some(
                (0..cfg.p)
                    .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
                    .collect(),
            ),
        };
        let (x, factors) = x_raw.rescaled(cfg.column_scaling)?;
        Ok(Replicate {
            x_raw,
            x,
            factors,
            permutation,
            noise,
            signs,
        })
    }

    /// Response and truth for the scenario point `cfg` (same n, p, seed).
    pub fn scenario(&self, cfg: &ScenarioConfig) -> ScenarioData {
        let (beta_star, a_star) =
            active_from_permutation(cfg, &self.permutation, self.signs.as_deref());
        let y = response_from_noise(&self.x_raw, &beta_star, cfg.sigma, &self.noise);
        let beta_analysis = beta_star
            .iter()
            .zip(&self.factors)
            .map(|(b, f)| b / f)
            .collect();
        let eps = self.noise.iter().map(|e| cfg.sigma * e).collect();
        ScenarioData {
            y,
            a_star,
            beta_star,
            beta_analysis,
            eps,
        }
    }
}
