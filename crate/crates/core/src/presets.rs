//! Ready-made systems for demos and tests.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::glv::GlvSystem;
use crate::poly::PolynomialField;

/// Standard chaotic Lorenz parameters.
pub const LORENZ_SIGMA: f64 = 10.0;
pub const LORENZ_RHO: f64 = 28.0;
pub const LORENZ_BETA: f64 = 8.0 / 3.0;
/// Shift that puts the attractor's bounding box at least 5 units inside
/// the positive orthant.
pub const LORENZ_DEFAULT_SHIFT: f64 = 35.0;
/// A point on (or very near) the attractor, in unshifted coordinates.
pub const LORENZ_START: [f64; 3] = [-8.0, 8.0, 27.0];

/// The Lorenz field in its usual coordinates.
pub fn lorenz() -> PolynomialField {
    PolynomialField::from_terms(vec![
        vec![(-LORENZ_SIGMA, vec![1, 0, 0]), (LORENZ_SIGMA, vec![0, 1, 0])],
        vec![
            (LORENZ_RHO, vec![1, 0, 0]),
            (-1.0, vec![1, 0, 1]),
            (-1.0, vec![0, 1, 0]),
        ],
        vec![(1.0, vec![1, 1, 0]), (-LORENZ_BETA, vec![0, 0, 1])],
    ])
    .expect("Lorenz field is well formed")
}

/// Metadata describing a shifted preset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LorenzPreset {
    pub sigma: f64,
    pub rho: f64,
    pub beta: f64,
    pub shift: f64,
    /// Starting point in shifted coordinates.
    pub start: Vec<f64>,
}

/// Lorenz in coordinates `X = x + shift 1`, so `X' = F(X - shift 1)`.
pub fn lorenz_shifted(shift: f64) -> Result<(PolynomialField, LorenzPreset)> {
    let field = lorenz().translate(&[-shift; 3])?;
    let meta = LorenzPreset {
        sigma: LORENZ_SIGMA,
        rho: LORENZ_RHO,
        beta: LORENZ_BETA,
        shift,
        start: LORENZ_START.iter().map(|v| v + shift).collect(),
    };
    Ok((field, meta))
}

/// Rotation `(-x2, x1)` on the plane, tangent to the unit circle.
pub fn rotation() -> PolynomialField {
    PolynomialField::from_terms(vec![vec![(-1.0, vec![0, 1])], vec![(1.0, vec![1, 0])]])
        .expect("rotation field is well formed")
}

/// `x' = S x` for an antisymmetric `S` given by its upper triangle, row by row.
pub fn antisymmetric_linear(n: usize, upper: &[f64]) -> PolynomialField {
    assert_eq!(upper.len(), n * (n - 1) / 2, "upper triangle has the wrong length");
    let mut s = vec![vec![0.0; n]; n];
    let mut it = upper.iter();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = *it.next().unwrap();
            s[i][j] = v;
            s[j][i] = -v;
        }
    }
    let comps = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| s[i][j] != 0.0)
                .map(|j| {
                    let mut e = vec![0; n];
                    e[j] = 1;
                    (s[i][j], e)
                })
                .collect()
        })
        .collect();
    PolynomialField::from_terms(comps).expect("linear field is well formed")
}

/// Logistic growth `x' = x (1 - x)` as a GLV system.
pub fn logistic() -> GlvSystem {
    GlvSystem::new(vec![1.0], vec![vec![-1.0]], vec![vec![1.0]]).expect("logistic is well formed")
}

/// A random GLV system with `n` variables and `m_mon` distinct monomials.
///
/// Exponents are small integers in `-2..=2`, couplings and rates are in
/// `[-scale, scale]`. Panics if `m_mon` exceeds the `5^n - 1` available
/// nonzero exponent rows.
pub fn random_glv<R: Rng>(rng: &mut R, n: usize, m_mon: usize, scale: f64) -> GlvSystem {
    assert!(
        m_mon < 5usize.saturating_pow(n as u32),
        "not enough distinct exponent rows"
    );
    let lambda = (0..n).map(|_| rng.gen_range(-scale..=scale)).collect();
    let a = (0..n)
        .map(|_| (0..m_mon).map(|_| rng.gen_range(-scale..=scale)).collect())
        .collect();
    let mut b: Vec<Vec<f64>> = Vec::with_capacity(m_mon);
    while b.len() < m_mon {
        let row: Vec<f64> = (0..n).map(|_| rng.gen_range(-2i32..=2) as f64).collect();
        if row.iter().any(|v| *v != 0.0) && !b.contains(&row) {
            b.push(row);
        }
    }
    GlvSystem::new(lambda, a, b).expect("rows are distinct")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shifted_lorenz_matches_original() {
        let (f, meta) = lorenz_shifted(35.0).unwrap();
        let x = [1.0, -2.0, 20.0];
        let shifted: Vec<f64> = x.iter().map(|v| v + 35.0).collect();
        let a = f.eval(&shifted).unwrap();
        let b = lorenz().eval(&x).unwrap();
        for (u, v) in a.iter().zip(&b) {
            assert!((u - v).abs() < 1e-9);
        }
        assert_eq!(meta.start, vec![27.0, 43.0, 62.0]);
    }

    #[test]
    fn antisymmetric_is_tangent() {
        let f = antisymmetric_linear(3, &[1.0, -0.5, 2.0]);
        let x = [0.3, -1.2, 0.7];
        let v = f.eval(&x).unwrap();
        let dot: f64 = x.iter().zip(&v).map(|(a, b)| a * b).sum();
        assert!(dot.abs() < 1e-15);
        assert_eq!(antisymmetric_linear(2, &[-1.0]), rotation());
    }
}
