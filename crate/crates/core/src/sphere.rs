//! Sphere-tangent polynomial fields made globally attracting and moved into
//! the positive orthant.
//!
//! Given `phi` tangent to the unit sphere, the extension
//! `x_i' = x_i (1 - |x|^2) + phi_i(x)` agrees with `phi` on the sphere. When
//! `sum_i x_i phi_i(x)` vanishes identically, `r = |x|^2` obeys the logistic
//! law `r' = 2 r (1 - r)`, so the sphere attracts every nonzero start.
//! Translating by `sigma * 1` with `sigma^3 - sigma > B`, where `B` bounds
//! `|phi_i|` on the boundary slabs, makes the positive orthant forward
//! invariant; the result is a polynomial field and goes through the GLV
//! embedding.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::MatrixGame;
use crate::glv::{embed_glv, poly_to_glv, EmbeddingMap, GlvEmbedding, GlvSystem};
use crate::ode::VectorField;
use crate::poly::{Polynomial, PolynomialField};

/// Tolerance for `|sum x_i phi_i|` on sampled sphere points.
pub const TANGENCY_TOL: f64 = 1e-10;
/// Number of sphere samples used by the tangency check.
pub const TANGENCY_SAMPLES: usize = 200;
/// Inflation applied to the sampled supremum of `|phi_i|`.
pub const SAFETY_FACTOR: f64 = 1.5;
/// Seed of the tangency sample.
const TANGENCY_SEED: u64 = 0x5eed_0001;

/// `x_i (1 - |x|^2) + phi_i(x)`, kept both as the base field and in expanded
/// polynomial form.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedField {
    base: PolynomialField,
    full: PolynomialField,
}

impl ExtendedField {
    /// Builds the extension without checking tangency.
    pub fn unchecked(base: PolynomialField) -> Self {
        let n = base.dim();
        let mut pi = Polynomial::constant(n, 1.0);
        for i in 0..n {
            let xi = Polynomial::variable(n, i);
            let sq = xi.mul(&xi).expect("same dimension");
            pi = pi.add(&sq.scale(-1.0)).expect("same dimension");
        }
        let comps = base
            .components()
            .iter()
            .enumerate()
            .map(|(i, phi)| {
                Polynomial::variable(n, i)
                    .mul(&pi)
                    .and_then(|p| p.add(phi))
                    .expect("same dimension")
            })
            .collect();
        let full = PolynomialField::new(comps).expect("components share a dimension");
        ExtendedField { base, full }
    }

    pub fn base(&self) -> &PolynomialField {
        &self.base
    }

    /// The extended field as a single polynomial field.
    pub fn as_polynomial(&self) -> &PolynomialField {
        &self.full
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.full.eval(x)
    }
}

impl VectorField for ExtendedField {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn eval_into(&self, x: &[f64], dx: &mut [f64]) {
        self.full.eval_into(x, dx)
    }
}

fn sphere_sample(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-8 {
            return v.into_iter().map(|a| a / norm).collect();
        }
    }
}

/// Largest `|sum x_i phi_i(x)|` over the fixed sphere sample, with its point.
pub fn worst_tangency(base: &PolynomialField) -> (f64, Vec<f64>) {
    let n = base.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(TANGENCY_SEED);
    let mut worst = (-1.0, Vec::new());
    for _ in 0..TANGENCY_SAMPLES {
        let x = sphere_sample(&mut rng, n);
        let r = base.radial_product(&x).abs();
        if r > worst.0 || r.is_nan() {
            worst = (r, x);
        }
    }
    worst
}

/// Extends a sphere-tangent field so that the sphere becomes attracting.
pub fn extend_to_ambient(base: PolynomialField) -> Result<ExtendedField> {
    if base.dim() == 0 {
        return Err(Error::RejectedInput("field has no components".into()));
    }
    let (r, x) = worst_tangency(&base);
    if !(r <= TANGENCY_TOL) {
        return Err(Error::RejectedInput(format!(
            "field is not tangent to the unit sphere: |x . phi(x)| = {r:e} at x = {x:?}"
        )));
    }
    Ok(ExtendedField::unchecked(base))
}

/// `|2 x . x' - 2 |x|^2 (1 - |x|^2)|`.
pub fn radial_residual(ext: &ExtendedField, x: &[f64]) -> f64 {
    let v = match ext.eval(x) {
        Ok(v) => v,
        Err(_) => return f64::NAN,
    };
    let r2: f64 = x.iter().map(|a| a * a).sum();
    let lhs: f64 = 2.0 * x.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>();
    (lhs - 2.0 * r2 * (1.0 - r2)).abs()
}

/// Where `B` was certified: points `y >= 0` with some `y_i = 0` and
/// `|y - sigma 1| <= radius`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificationRegion {
    pub sigma: f64,
    pub radius: f64,
    pub samples: usize,
    pub seed: u64,
    pub safety_factor: f64,
}

impl CertificationRegion {
    pub fn boundary_slabs(sigma: f64, n: usize, samples: usize, seed: u64) -> Self {
        CertificationRegion {
            sigma,
            radius: 2.0 * sigma * (n as f64).sqrt(),
            samples,
            seed,
            safety_factor: SAFETY_FACTOR,
        }
    }
}

/// Sampled supremum of `|phi_i(y - sigma 1)|` over the boundary slabs,
/// inflated by [`SAFETY_FACTOR`].
pub fn estimate_bound_b(base: &PolynomialField, sigma: f64, samples: usize, seed: u64) -> Result<f64> {
    if !(sigma > 1.0) || !sigma.is_finite() {
        return Err(Error::RejectedInput(format!("sigma must exceed 1, got {sigma}")));
    }
    if samples == 0 {
        return Err(Error::RejectedInput("need at least one sample".into()));
    }
    let n = base.dim();
    let region = CertificationRegion::boundary_slabs(sigma, n, samples, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hi = sigma + region.radius;
    let mut y = vec![0.0; n];
    let mut x = vec![0.0; n];
    let mut sup = 0.0f64;
    let mut drawn = 0;
    while drawn < samples {
        let face = rng.gen_range(0..n);
        for (k, v) in y.iter_mut().enumerate() {
            *v = if k == face { 0.0 } else { rng.gen_range(0.0..hi) };
        }
        let d2: f64 = y.iter().map(|v| (v - sigma).powi(2)).sum();
        if d2 > region.radius * region.radius {
            continue;
        }
        drawn += 1;
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = yi - sigma;
        }
        for p in base.components() {
            sup = sup.max(p.eval(&x).abs());
        }
    }
    Ok(SAFETY_FACTOR * sup)
}

/// Translation parameters with the strict inequality `B < sigma^3 - sigma`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslationParams {
    pub sigma: f64,
    #[serde(rename = "B")]
    pub b_bound: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<CertificationRegion>,
}

impl TranslationParams {
    pub fn new(sigma: f64, b_bound: f64, region: Option<CertificationRegion>) -> Result<Self> {
        if !(sigma > 1.0) || !sigma.is_finite() {
            return Err(Error::RejectedInput(format!("sigma must exceed 1, got {sigma}")));
        }
        if !(b_bound >= 0.0) || !b_bound.is_finite() {
            return Err(Error::RejectedInput(format!(
                "B must be finite and >= 0, got {b_bound}"
            )));
        }
        if !(b_bound < sigma.powi(3) - sigma) {
            return Err(Error::RejectedInput(format!(
                "B = {b_bound} is not below sigma^3 - sigma = {}",
                sigma.powi(3) - sigma
            )));
        }
        Ok(TranslationParams { sigma, b_bound, region })
    }

    /// Guaranteed inward speed `sigma^3 - sigma - B` on the certified faces.
    pub fn margin(&self) -> f64 {
        self.sigma.powi(3) - self.sigma - self.b_bound
    }
}

/// Smallest `sigma` on a `1e-3` grid with `sigma^3 - sigma > B`, plus `0.1`.
pub fn choose_sigma(b: f64) -> Result<TranslationParams> {
    if !(b >= 0.0) || !b.is_finite() {
        return Err(Error::RejectedInput(format!("B must be finite and >= 0, got {b}")));
    }
    let g = |k: u64| {
        let s = k as f64 * 1e-3;
        s * s * s - s
    };
    // sigma^3 - sigma < sigma^3, so the answer is above cbrt(B).
    let mut k = ((b.cbrt() * 1e3).floor() as u64).max(1001);
    while !(g(k) > b) {
        k += 1;
    }
    TranslationParams::new(k as f64 * 1e-3 + 0.1, b, None)
}

/// `Y(y) = ext(y - sigma 1)`.
pub fn translate_field(ext: &ExtendedField, params: &TranslationParams) -> Result<PolynomialField> {
    let shift = vec![-params.sigma; ext.dim()];
    ext.as_polynomial().translate(&shift)
}

/// Knobs for [`sphere_poly_to_game`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineOptions {
    pub samples: usize,
    pub seed: u64,
    pub max_rounds: usize,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            samples: 4000,
            seed: 0,
            max_rounds: 50,
        }
    }
}

/// Full pipeline output: the game and the composite map `x -> f(x + sigma 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereGame {
    pub params: TranslationParams,
    pub translated: PolynomialField,
    pub glv: GlvSystem,
    pub embedding: GlvEmbedding,
}

impl SphereGame {
    pub fn game(&self) -> &MatrixGame {
        &self.embedding.game
    }

    pub fn map(&self) -> &EmbeddingMap {
        &self.embedding.map
    }

    pub fn sigma(&self) -> f64 {
        self.params.sigma
    }

    /// Sphere coordinates to simplex coordinates.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let y: Vec<f64> = x.iter().map(|v| v + self.params.sigma).collect();
        self.embedding.map.forward(&y)
    }

    /// Simplex coordinates back to sphere coordinates.
    pub fn inverse(&self, p: &[f64]) -> Result<Vec<f64>> {
        Ok(self
            .embedding
            .map
            .inverse(p)?
            .into_iter()
            .map(|v| v - self.params.sigma)
            .collect())
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Bundle<'a> {
            sigma: f64,
            #[serde(rename = "B")]
            b: f64,
            region: &'a Option<CertificationRegion>,
            game: &'a MatrixGame,
            map: &'a EmbeddingMap,
            translated_field: serde_json::Value,
            glv: &'a GlvSystem,
        }
        let tf: serde_json::Value = serde_json::from_str(&self.translated.to_json()).expect("field JSON is valid");
        serde_json::to_string_pretty(&Bundle {
            sigma: self.params.sigma,
            b: self.params.b_bound,
            region: &self.params.region,
            game: &self.embedding.game,
            map: &self.embedding.map,
            translated_field: tf,
            glv: &self.glv,
        })
        .expect("bundle serializes")
    }
}

/// Extend, certify `B` and pick `sigma` consistently, translate, embed.
pub fn sphere_poly_to_game(base: PolynomialField, opts: PipelineOptions) -> Result<SphereGame> {
    let ext = extend_to_ambient(base)?;
    let n = ext.dim();
    let mut sigma = choose_sigma(0.0)?.sigma;
    for _ in 0..opts.max_rounds.max(1) {
        let b = estimate_bound_b(ext.base(), sigma, opts.samples, opts.seed)?;
        if b < sigma.powi(3) - sigma {
            let region = CertificationRegion::boundary_slabs(sigma, n, opts.samples, opts.seed);
            let params = TranslationParams::new(sigma, b, Some(region))?;
            let translated = translate_field(&ext, &params)?;
            let glv = poly_to_glv(&translated);
            let embedding = embed_glv(&glv);
            return Ok(SphereGame {
                params,
                translated,
                glv,
                embedding,
            });
        }
        sigma = choose_sigma(b)?.sigma;
    }
    Err(Error::RejectedInput(format!(
        "no consistent sigma found within {} rounds (last sigma = {sigma})",
        opts.max_rounds
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn rotation() -> PolynomialField {
        PolynomialField::from_terms(vec![vec![(-1.0, vec![0, 1])], vec![(1.0, vec![1, 0])]]).unwrap()
    }

    #[test]
    fn extension_examples() {
        let ext = extend_to_ambient(rotation()).unwrap();
        assert_eq!(ext.eval(&[2.0, 0.0]).unwrap(), vec![-6.0, 2.0]);
        for t in [0.0, 0.7, 2.0, 4.0] {
            let x = [f64::cos(t), f64::sin(t)];
            let a = ext.eval(&x).unwrap();
            let b = rotation().eval(&x).unwrap();
            for (u, v) in a.iter().zip(&b) {
                assert!((u - v).abs() <= 1e-12);
            }
        }
        let x0 = [2.0, 0.0];
        let v = ext.eval(&x0).unwrap();
        let d = 2.0 * (x0[0] * v[0] + x0[1] * v[1]);
        assert_eq!(d, -24.0);
    }

    #[test]
    fn tangency_rejection_names_point() {
        let radial = PolynomialField::from_terms(vec![vec![(1.0, vec![1, 0])], vec![(1.0, vec![0, 1])]]).unwrap();
        let e = extend_to_ambient(radial.clone()).unwrap_err();
        assert!(matches!(&e, Error::RejectedInput(m) if m.contains("x = [")));
        let ext = ExtendedField::unchecked(radial);
        assert!(radial_residual(&ext, &[0.3, 0.4]) >= 1e-3);
    }

    #[test]
    fn radial_residual_examples() {
        let ext = extend_to_ambient(rotation()).unwrap();
        assert!(radial_residual(&ext, &[0.6, 0.8]) <= 1e-12);
        assert!(radial_residual(&ext, &[3.0, -1.7]) <= 1e-10);
    }

    #[test]
    fn bound_examples() {
        let zero = PolynomialField::zero(3);
        assert_eq!(estimate_bound_b(&zero, 1.5, 100, 1).unwrap(), 0.0);
        let c = PolynomialField::from_terms(vec![vec![(-0.4, vec![0, 0])], vec![(-0.4, vec![0, 0])]]).unwrap();
        assert!((estimate_bound_b(&c, 2.0, 50, 3).unwrap() - 0.6).abs() < 1e-15);
        assert!(estimate_bound_b(&zero, 1.0, 10, 0).is_err());
    }

    #[test]
    fn choose_sigma_examples() {
        let p = choose_sigma(0.0).unwrap();
        assert!(p.sigma > 1.0 && p.sigma < 1.2);
        for b in [0.0, 1.0, 10.0, 1e6] {
            let p = choose_sigma(b).unwrap();
            assert!(b < p.sigma.powi(3) - p.sigma);
        }
        assert!(1.5f64.powi(3) - 1.5 > 1.0);
        assert!(2.5f64.powi(3) - 2.5 > 10.0);
        // The grid point before the chosen one fails the inequality.
        let p = choose_sigma(10.0).unwrap();
        let prev = p.sigma - 0.1 - 1e-3;
        assert!(prev.powi(3) - prev <= 10.0);
        assert!(choose_sigma(-1.0).is_err());
    }

    #[test]
    fn translation_identity_and_push_in() {
        let ext = extend_to_ambient(rotation()).unwrap();
        let b = estimate_bound_b(ext.base(), 1.5, 2000, 7).unwrap();
        let params = choose_sigma(b).unwrap();
        let y_field = translate_field(&ext, &params).unwrap();
        for y in [[0.1, 0.2], [1.0, 3.0], [2.5, 0.7]] {
            let a = y_field.eval(&y).unwrap();
            let x = [y[0] - params.sigma, y[1] - params.sigma];
            let e = ext.eval(&x).unwrap();
            for (u, v) in a.iter().zip(&e) {
                assert!((u - v).abs() <= 1e-10 * (1.0 + v.abs()));
            }
        }
        let v = y_field.eval(&[0.0, params.sigma]).unwrap();
        assert!(v[0] > 0.0);
    }

    #[test]
    fn pipeline_bundle() {
        let sg = sphere_poly_to_game(rotation(), PipelineOptions::default()).unwrap();
        assert!(sg.params.b_bound < sg.sigma().powi(3) - sg.sigma());
        let j = sg.to_json();
        for key in ["\"sigma\"", "\"B\"", "\"game\"", "\"map\"", "\"translated_field\""] {
            assert!(j.contains(key), "{key}");
        }
        let x = [0.6, 0.8];
        let back = sg.inverse(&sg.forward(&x).unwrap()).unwrap();
        assert!((back[0] - 0.6).abs() < 1e-10 && (back[1] - 0.8).abs() < 1e-10);
    }
}
