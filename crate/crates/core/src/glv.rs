//! Generalized Lotka-Volterra (GLV) systems and their exact embedding into
//! replicator dynamics.
//!
//! A GLV system on the open positive orthant reads
//!
//! ```text
//! x_i' = x_i (lambda_i + sum_j A_ij prod_k x_k^{B_jk})
//! ```
//!
//! The embedding runs in two stages. The quasi-monomial change of variables
//! `u_j = prod_k x_k^{B_jk}` turns it into a Lotka-Volterra system
//! `u' = u * (r + M u)` with `r = B lambda` and `M = B A`. The homogenizing lift
//! `p = (u, 1) / (1 + sum u)` then carries that system onto replicator
//! dynamics on the game
//!
//! ```text
//!     [ M  r ]
//!     [ 0  0 ]
//! ```
//!
//! with the replicator velocity equal to `p_last` times the pushed-forward
//! Lotka-Volterra velocity. Orbits agree; time runs at rate `p_last`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{replicator_into, simplex_violation, MatrixGame, SimplexPoint};
use crate::ode::{AdaptiveOptions, DormandPrince, Trajectory, VectorField};
use crate::poly::{eval_generalized, grlex_cmp, PolynomialField};

/// The inverse lift refuses points whose last coordinate is below this.
pub const FACE_FLOOR: f64 = 1e-12;

fn check_matrix(name: &str, rows: &[Vec<f64>], nrows: usize, ncols: usize) -> Result<()> {
    if rows.len() != nrows {
        return Err(Error::RejectedInput(format!(
            "{name} has {} rows, expected {nrows}",
            rows.len()
        )));
    }
    for r in rows {
        if r.len() != ncols {
            return Err(Error::RejectedInput(format!(
                "{name} has a row of length {}, expected {ncols}",
                r.len()
            )));
        }
        if let Some(v) = r.iter().find(|v| !v.is_finite()) {
            return Err(Error::RejectedInput(format!("{name} has non-finite entry {v}")));
        }
    }
    Ok(())
}

fn first_nonpositive(x: &[f64]) -> Option<(usize, f64)> {
    x.iter().enumerate().find(|(_, v)| !(**v > 0.0)).map(|(i, v)| (i, *v))
}

/// A GLV system with `n` variables and `m_mon` generalized monomials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GlvDoc", into = "GlvDoc")]
pub struct GlvSystem {
    n: usize,
    lambda: Vec<f64>,
    /// `n x m_mon`
    a: Vec<Vec<f64>>,
    /// `m_mon x n`, one exponent row per monomial
    b: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct GlvDoc {
    n: usize,
    lambda: Vec<f64>,
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    b: Vec<Vec<f64>>,
}

impl TryFrom<GlvDoc> for GlvSystem {
    type Error = Error;
    fn try_from(d: GlvDoc) -> Result<Self> {
        if d.lambda.len() != d.n {
            return Err(Error::RejectedInput(format!(
                "lambda has length {}, expected n = {}",
                d.lambda.len(),
                d.n
            )));
        }
        GlvSystem::new(d.lambda, d.a, d.b)
    }
}

impl From<GlvSystem> for GlvDoc {
    fn from(s: GlvSystem) -> Self {
        GlvDoc {
            n: s.n,
            lambda: s.lambda,
            a: s.a,
            b: s.b,
        }
    }
}

impl GlvSystem {
    /// `a` is `n x m_mon` (one row per variable); `b` is `m_mon x n`.
    pub fn new(lambda: Vec<f64>, a: Vec<Vec<f64>>, b: Vec<Vec<f64>>) -> Result<Self> {
        let n = lambda.len();
        if n == 0 {
            return Err(Error::RejectedInput("GLV system needs at least one variable".into()));
        }
        if let Some(v) = lambda.iter().find(|v| !v.is_finite()) {
            return Err(Error::RejectedInput(format!("lambda has non-finite entry {v}")));
        }
        let m = b.len();
        check_matrix("A", &a, n, m)?;
        check_matrix("B", &b, m, n)?;
        for i in 0..m {
            for j in (i + 1)..m {
                if b[i] == b[j] {
                    return Err(Error::RejectedInput(format!("monomial rows {i} and {j} of B coincide")));
                }
            }
        }
        Ok(GlvSystem { n, lambda, a, b })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of distinct generalized monomials.
    pub fn monomial_count(&self) -> usize {
        self.b.len()
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn a(&self) -> &[Vec<f64>] {
        &self.a
    }

    pub fn b(&self) -> &[Vec<f64>] {
        &self.b
    }

    fn eval_unchecked(&self, x: &[f64], out: &mut [f64]) {
        let u: Vec<f64> = self.b.iter().map(|row| eval_generalized(row, x)).collect();
        for i in 0..self.n {
            let s: f64 = self.a[i].iter().zip(&u).map(|(a, u)| a * u).sum();
            out[i] = x[i] * (self.lambda[i] + s);
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("GLV system serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Evaluates the GLV right-hand side at a strictly positive point.
pub fn glv_field(sys: &GlvSystem, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != sys.n {
        return Err(Error::DimensionMismatch {
            expected: sys.n,
            got: x.len(),
        });
    }
    if let Some((index, value)) = first_nonpositive(x) {
        return Err(Error::NonPositive { index, value });
    }
    let mut out = vec![0.0; sys.n];
    sys.eval_unchecked(x, &mut out);
    Ok(out)
}

impl VectorField for GlvSystem {
    fn dim(&self) -> usize {
        self.n
    }

    fn eval_into(&self, x: &[f64], dx: &mut [f64]) {
        self.eval_unchecked(x, dx)
    }

    fn domain_violation(&self, x: &[f64]) -> Option<String> {
        first_nonpositive(x).map(|(i, v)| format!("coordinate {i} = {v} left the positive orthant"))
    }
}

/// Rewrites a polynomial field as the GLV field `x_i (x_i^{-1} P_i(x))`.
///
/// Each term `c x^e` of component `i` becomes `x_i * c x^{e - e_i}`; the
/// constant monomial goes into `lambda_i`, everything else into the shared
/// monomial list (graded lexicographic order).
pub fn poly_to_glv(p: &PolynomialField) -> GlvSystem {
    let n = p.dim();
    let mut lambda = vec![0.0; n];
    let mut entries: Vec<(Vec<f64>, usize, f64)> = Vec::new();
    for (i, comp) in p.components().iter().enumerate() {
        for t in comp.terms() {
            let mut e: Vec<f64> = t.exponents.iter().map(|&v| v as f64).collect();
            e[i] -= 1.0;
            if e.iter().all(|v| *v == 0.0) {
                lambda[i] += t.coeff;
            } else {
                entries.push((e, i, t.coeff));
            }
        }
    }
    let mut rows: Vec<Vec<f64>> = entries.iter().map(|(e, _, _)| e.clone()).collect();
    rows.sort_by(|a, b| grlex_cmp(a, b));
    rows.dedup();
    let mut a = vec![vec![0.0; rows.len()]; n];
    for (e, i, c) in entries {
        let j = rows
            .binary_search_by(|r| grlex_cmp(r, &e))
            .expect("monomial was collected above");
        a[i][j] += c;
    }
    GlvSystem::new(lambda, a, rows).expect("rewriting preserves validity")
}

/// A Lotka-Volterra system `u_j' = u_j (r_j + sum_l M_jl u_l)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LotkaVolterraSystem {
    pub r: Vec<f64>,
    #[serde(rename = "M")]
    pub m: Vec<Vec<f64>>,
}

impl LotkaVolterraSystem {
    pub fn new(r: Vec<f64>, m: Vec<Vec<f64>>) -> Result<Self> {
        if r.iter().any(|v| !v.is_finite()) {
            return Err(Error::RejectedInput("r has non-finite entries".into()));
        }
        check_matrix("M", &m, r.len(), r.len())?;
        Ok(LotkaVolterraSystem { r, m })
    }

    pub fn dim(&self) -> usize {
        self.r.len()
    }
}

impl VectorField for LotkaVolterraSystem {
    fn dim(&self) -> usize {
        self.r.len()
    }

    fn eval_into(&self, u: &[f64], du: &mut [f64]) {
        for j in 0..self.r.len() {
            let s: f64 = self.m[j].iter().zip(u).map(|(a, b)| a * b).sum();
            du[j] = u[j] * (self.r[j] + s);
        }
    }

    fn domain_violation(&self, u: &[f64]) -> Option<String> {
        first_nonpositive(u).map(|(i, v)| format!("coordinate {i} = {v} left the positive orthant"))
    }
}

/// GLV data after rank augmentation: `b` has full column rank.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentedExponents {
    /// `n x m_aug`
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    /// `m_aug x n`
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
    /// Identity rows appended to reach full column rank.
    pub appended_rows: usize,
}

fn to_dmatrix(rows: &[Vec<f64>], ncols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j])
}

fn column_rank(rows: &[Vec<f64>], ncols: usize) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let m = to_dmatrix(rows, ncols);
    let scale = m.amax().max(1.0);
    m.svd(false, false).rank(1e-10 * scale)
}

/// Quasi-monomial reduction to Lotka-Volterra form.
///
/// When `B` lacks full column rank, the coordinate monomials `x_i` that are
/// not already present are appended as rows of `B` (with zero columns in
/// `A`). This keeps the monomial map injective with a constructible left
/// inverse.
pub fn brenig_reduce(sys: &GlvSystem) -> (LotkaVolterraSystem, AugmentedExponents) {
    let n = sys.n;
    let mut b = sys.b.clone();
    let mut a = sys.a.clone();
    let mut appended = 0;
    if column_rank(&b, n) < n {
        for i in 0..n {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            if !b.contains(&e) {
                b.push(e);
                for row in a.iter_mut() {
                    row.push(0.0);
                }
                appended += 1;
            }
        }
    }
    let m_aug = b.len();
    let r: Vec<f64> = b
        .iter()
        .map(|row| row.iter().zip(&sys.lambda).map(|(e, l)| e * l).sum())
        .collect();
    let m: Vec<Vec<f64>> = (0..m_aug)
        .map(|j| (0..m_aug).map(|l| (0..n).map(|k| b[j][k] * a[k][l]).sum()).collect())
        .collect();
    (
        LotkaVolterraSystem { r, m },
        AugmentedExponents {
            a,
            b,
            appended_rows: appended,
        },
    )
}

/// The replicator game `[[M, r], [0, 0]]` hosting a Lotka-Volterra system.
pub fn hofbauer_lift(lv: &LotkaVolterraSystem) -> MatrixGame {
    let k = lv.dim();
    let mut rows = vec![vec![0.0; k + 1]; k + 1];
    for i in 0..k {
        rows[i][..k].copy_from_slice(&lv.m[i]);
        rows[i][k] = lv.r[i];
    }
    MatrixGame::from_rows(rows).expect("lifted game is square and finite")
}

/// `u -> (u_1, ..., u_k, 1) / (1 + sum u)`.
pub fn hofbauer_forward(u: &[f64]) -> Vec<f64> {
    let s = 1.0 + u.iter().sum::<f64>();
    u.iter().map(|v| v / s).chain(std::iter::once(1.0 / s)).collect()
}

/// `p -> (p_1 / p_last, ..., p_k / p_last)`.
pub fn hofbauer_inverse(p: &[f64]) -> Result<Vec<f64>> {
    let (&last, head) = p
        .split_last()
        .ok_or_else(|| Error::RejectedInput("empty simplex point".into()))?;
    if !(last >= FACE_FLOOR) {
        return Err(Error::FaceProximity {
            last,
            floor: FACE_FLOOR,
        });
    }
    Ok(head.iter().map(|v| v / last).collect())
}

/// The diffeomorphism from the positive orthant onto an invariant
/// submanifold of the simplex interior, with its inverse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingMap {
    /// Augmented exponent matrix, `m_aug x n`.
    #[serde(rename = "B")]
    b: Vec<Vec<f64>>,
    /// `n x m_aug`, with `B_left_inverse * B = I_n`.
    #[serde(rename = "B_left_inverse")]
    b_left_inverse: Vec<Vec<f64>>,
    /// Simplex dimension, `m_aug + 1`.
    m: usize,
}

impl EmbeddingMap {
    /// Builds the map for a full-column-rank exponent matrix.
    pub fn new(b: Vec<Vec<f64>>) -> Result<Self> {
        let rows = b.len();
        let n = b.first().map(Vec::len).unwrap_or(0);
        if rows == 0 || n == 0 {
            return Err(Error::RejectedInput("empty exponent matrix".into()));
        }
        check_matrix("B", &b, rows, n)?;
        let bm = to_dmatrix(&b, n);
        let scale = bm.amax().max(1.0);
        let svd = bm.clone().svd(true, true);
        if svd.rank(1e-10 * scale) < n {
            return Err(Error::RejectedInput("exponent matrix lacks full column rank".into()));
        }
        let pinv = svd
            .pseudo_inverse(1e-12 * scale)
            .map_err(|e| Error::RejectedInput(e.to_string()))?;
        let check = &pinv * &bm - DMatrix::<f64>::identity(n, n);
        if check.amax() > 1e-10 {
            return Err(Error::RejectedInput(format!(
                "left inverse is inaccurate (residual {:e})",
                check.amax()
            )));
        }
        let b_left_inverse = (0..n).map(|i| (0..rows).map(|j| pinv[(i, j)]).collect()).collect();
        Ok(EmbeddingMap {
            b,
            b_left_inverse,
            m: rows + 1,
        })
    }

    /// Ambient dimension `n` of the GLV system.
    pub fn source_dim(&self) -> usize {
        self.b_left_inverse.len()
    }

    /// Number of simplex coordinates `m`.
    pub fn simplex_dim(&self) -> usize {
        self.m
    }

    pub fn exponents(&self) -> &[Vec<f64>] {
        &self.b
    }

    pub fn left_inverse(&self) -> &[Vec<f64>] {
        &self.b_left_inverse
    }

    fn check_source(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.source_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.source_dim(),
                got: x.len(),
            });
        }
        if let Some((index, value)) = first_nonpositive(x) {
            return Err(Error::NonPositive { index, value });
        }
        Ok(())
    }

    /// The monomial map `x -> u`.
    pub fn monomials(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_source(x)?;
        Ok(self.b.iter().map(|row| eval_generalized(row, x)).collect())
    }

    /// `f(x)`, a point of the simplex interior.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(hofbauer_forward(&self.monomials(x)?))
    }

    /// `f^{-1}(p) = exp(B^+ ln(p_head / p_last))`.
    pub fn inverse(&self, p: &[f64]) -> Result<Vec<f64>> {
        if p.len() != self.m {
            return Err(Error::DimensionMismatch {
                expected: self.m,
                got: p.len(),
            });
        }
        let u = hofbauer_inverse(p)?;
        if let Some((index, value)) = first_nonpositive(&u) {
            return Err(Error::NonPositive { index, value });
        }
        let log_u: Vec<f64> = u.iter().map(|v| v.ln()).collect();
        Ok(self
            .b_left_inverse
            .iter()
            .map(|row| row.iter().zip(&log_u).map(|(a, b)| a * b).sum::<f64>().exp())
            .collect())
    }

    /// Directional derivative `Df(x) v`.
    pub fn push_vector(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        let u = self.monomials(x)?;
        if v.len() != x.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                got: v.len(),
            });
        }
        let du: Vec<f64> = self
            .b
            .iter()
            .zip(&u)
            .map(|(row, uj)| uj * row.iter().zip(x).zip(v).map(|((e, xk), vk)| e * vk / xk).sum::<f64>())
            .collect();
        let s = 1.0 + u.iter().sum::<f64>();
        let ds: f64 = du.iter().sum();
        let mut out: Vec<f64> = du.iter().zip(&u).map(|(d, ui)| d / s - ui * ds / (s * s)).collect();
        out.push(-ds / (s * s));
        Ok(out)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("map serializes")
    }
}

/// Output of [`embed_glv`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlvEmbedding {
    pub game: MatrixGame,
    pub map: EmbeddingMap,
    pub lv: LotkaVolterraSystem,
    pub augmented: AugmentedExponents,
    /// Distinct monomials of the input system.
    pub unique_monomials: usize,
}

impl GlvEmbedding {
    pub fn game_size(&self) -> usize {
        self.game.size()
    }

    /// `m - 1 >= #unique monomials`.
    pub fn size_bound_holds(&self) -> bool {
        self.game.size() > self.unique_monomials
    }
}

/// Quasi-monomial reduction followed by the replicator lift.
pub fn embed_glv(sys: &GlvSystem) -> GlvEmbedding {
    let (lv, augmented) = brenig_reduce(sys);
    let game = hofbauer_lift(&lv);
    let map = EmbeddingMap::new(augmented.b.clone()).expect("augmented exponents have full rank");
    GlvEmbedding {
        game,
        map,
        lv,
        augmented,
        unique_monomials: sys.monomial_count(),
    }
}

/// Outcome of [`pushforward_residual`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PushforwardCheck {
    /// Relative size of the part of `Df(x) F(x)` orthogonal to the replicator velocity.
    pub residual: f64,
    /// Best-fit factor `c` in `replicator = c * Df(x) F(x)`; `None` at fixed points.
    pub factor: Option<f64>,
    pub fixed_point: bool,
}

/// Velocities below this norm count as zero.
const ZERO_VELOCITY: f64 = 1e-300;

/// Compares two velocities for positive parallelism.
pub fn parallel_residual(pushed: &[f64], rep: &[f64]) -> PushforwardCheck {
    let nv = pushed.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nw = rep.iter().map(|v| v * v).sum::<f64>().sqrt();
    let scale = nv.max(nw);
    if scale <= ZERO_VELOCITY {
        return PushforwardCheck {
            residual: 0.0,
            factor: None,
            fixed_point: true,
        };
    }
    if nw <= ZERO_VELOCITY {
        return PushforwardCheck {
            residual: 1.0,
            factor: Some(0.0),
            fixed_point: false,
        };
    }
    let dot: f64 = pushed.iter().zip(rep).map(|(a, b)| a * b).sum();
    let coef = dot / (nw * nw);
    let orth = pushed
        .iter()
        .zip(rep)
        .map(|(a, b)| (a - coef * b).powi(2))
        .sum::<f64>()
        .sqrt();
    let factor = if nv <= ZERO_VELOCITY { 0.0 } else { (nw * nw) / dot };
    PushforwardCheck {
        residual: orth / scale,
        factor: Some(factor),
        fixed_point: false,
    }
}

/// How far `Df(x) F(x)` is from being a positive multiple of the replicator
/// velocity at `f(x)`.
pub fn pushforward_residual(
    sys: &GlvSystem,
    map: &EmbeddingMap,
    game: &MatrixGame,
    x: &[f64],
) -> Result<PushforwardCheck> {
    let v = glv_field(sys, x)?;
    let pushed = map.push_vector(x, &v)?;
    let p = map.forward(x)?;
    if p.len() != game.size() {
        return Err(Error::DimensionMismatch {
            expected: game.size(),
            got: p.len(),
        });
    }
    let mut w = vec![0.0; p.len()];
    replicator_into(game, &p, &mut w);
    Ok(parallel_residual(&pushed, &w))
}

/// Replicator dynamics augmented with the clock `tau' = p_last`, which
/// tracks the time of the embedded Lotka-Volterra system.
pub struct ClockedReplicator<'a> {
    pub game: &'a MatrixGame,
}

impl VectorField for ClockedReplicator<'_> {
    fn dim(&self) -> usize {
        self.game.size() + 1
    }

    fn eval_into(&self, x: &[f64], dx: &mut [f64]) {
        let m = self.game.size();
        replicator_into(self.game, &x[..m], &mut dx[..m]);
        dx[m] = x[m - 1];
    }

    fn domain_violation(&self, x: &[f64]) -> Option<String> {
        simplex_violation(&x[..self.game.size()])
    }
}

/// Runs replicator dynamics from `f(x0)` with the embedded-time clock and
/// pulls every accepted step back through `f^{-1}`.
///
/// The result is indexed by embedded (GLV) time and covers `[0, t_end]`;
/// samples are the integrator's own steps, no resampling is done.
pub fn pulled_back_trajectory(
    game: &MatrixGame,
    map: &EmbeddingMap,
    x0: &[f64],
    t_end: f64,
    opts: AdaptiveOptions,
) -> Result<Trajectory> {
    if !(t_end > 0.0) {
        return Err(Error::RejectedInput(format!("t_end must be positive, got {t_end}")));
    }
    let p0 = map.forward(x0)?;
    SimplexPoint::new(p0.clone())?;
    let m = game.size();
    let mut state = p0;
    state.push(0.0);
    let field = ClockedReplicator { game };
    let mut dp = DormandPrince::new(&field, &state, 0.0, opts)?;
    let mut out = Trajectory::new(0.0, x0.to_vec());
    let mut err: Option<Error> = None;
    // Last accepted replicator state with clock below t_end.
    let mut before = (0.0, state);
    let mut crossed = false;
    while !crossed && err.is_none() {
        let rate = dp.state()[m - 1].max(FACE_FLOOR);
        let chunk = ((t_end - dp.state()[m]) / rate).max(1e-3);
        let target = dp.time() + chunk;
        dp.advance_to(target, |t, y| {
            if crossed || err.is_some() {
                return;
            }
            let tau = y[m];
            if tau >= t_end {
                crossed = true;
                return;
            }
            before = (t, y.to_vec());
            if tau > *out.times().last().unwrap() {
                match map.inverse(&y[..m]) {
                    Ok(x) => out.push(tau, x),
                    Err(e) => err = Some(e),
                }
            }
        })
        .map_err(drift)?;
    }
    if let Some(e) = err {
        return Err(e);
    }
    let end = land_clock(&field, &before.1, t_end, opts)?;
    if t_end > *out.times().last().unwrap() {
        out.push(t_end, map.inverse(&end[..m])?);
    }
    Ok(out)
}

fn drift(e: Error) -> Error {
    match e {
        Error::DomainEscape { time, reason } => Error::IntegrationDrift { time, reason },
        other => other,
    }
}

/// Integrates from `y0` (clock below `target`) for the replicator time that
/// brings the clock to `target`, found by Newton iteration on the clock.
fn land_clock(field: &ClockedReplicator<'_>, y0: &[f64], target: f64, opts: AdaptiveOptions) -> Result<Vec<f64>> {
    let m = field.game.size();
    let tol = 1e-13 * target.abs().max(1.0);
    let mut dt = (target - y0[m]) / y0[m - 1].max(FACE_FLOOR);
    let mut y = y0.to_vec();
    for _ in 0..50 {
        let mut dp = DormandPrince::new(field, y0, 0.0, opts)?;
        dp.advance_to(dt.max(0.0), |_, _| {}).map_err(drift)?;
        y = dp.state().to_vec();
        let miss = target - y[m];
        if miss.abs() <= tol {
            break;
        }
        dt += miss / y[m - 1].max(FACE_FLOOR);
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::PolynomialField;

    fn logistic() -> GlvSystem {
        GlvSystem::new(vec![1.0], vec![vec![-1.0]], vec![vec![1.0]]).unwrap()
    }

    #[test]
    fn glv_field_examples() {
        assert_eq!(glv_field(&logistic(), &[2.0]).unwrap(), vec![-2.0]);
        let zero = GlvSystem::new(vec![0.0, 0.0], vec![vec![0.0], vec![0.0]], vec![vec![1.0, 2.0]]).unwrap();
        assert_eq!(glv_field(&zero, &[0.5, 3.0]).unwrap(), vec![0.0, 0.0]);
        let cube = GlvSystem::new(vec![0.0], vec![vec![1.0]], vec![vec![2.0]]).unwrap();
        assert_eq!(glv_field(&cube, &[3.0]).unwrap(), vec![27.0]);
        assert!(matches!(glv_field(&cube, &[0.0]), Err(Error::NonPositive { .. })));
        assert!(matches!(glv_field(&cube, &[-1.0]), Err(Error::NonPositive { .. })));
    }

    #[test]
    fn glv_validation() {
        assert!(GlvSystem::new(vec![1.0], vec![vec![1.0, 2.0]], vec![vec![1.0], vec![1.0]]).is_err());
        assert!(GlvSystem::new(vec![1.0], vec![vec![1.0]], vec![vec![1.0, 0.0]]).is_err());
        assert!(GlvSystem::new(vec![], vec![], vec![]).is_err());
        assert!(GlvSystem::new(vec![f64::NAN], vec![vec![]], vec![]).is_err());
    }

    #[test]
    fn poly_to_glv_examples() {
        let constant = PolynomialField::from_terms(vec![vec![(1.0, vec![0])]]).unwrap();
        let g = poly_to_glv(&constant);
        assert_eq!(g.lambda(), &[0.0]);
        assert_eq!(g.a(), &[vec![1.0]]);
        assert_eq!(g.b(), &[vec![-1.0]]);

        let linear = PolynomialField::from_terms(vec![vec![(1.0, vec![1])]]).unwrap();
        let g = poly_to_glv(&linear);
        assert_eq!(g.lambda(), &[1.0]);
        assert_eq!(g.monomial_count(), 0);
    }

    #[test]
    fn brenig_examples() {
        let (lv, aug) = brenig_reduce(&logistic());
        assert_eq!(lv.r, vec![1.0]);
        assert_eq!(lv.m, vec![vec![-1.0]]);
        assert_eq!(aug.appended_rows, 0);

        let sq = GlvSystem::new(vec![0.7], vec![vec![-0.3]], vec![vec![2.0]]).unwrap();
        let (lv, _) = brenig_reduce(&sq);
        assert_eq!(lv.r, vec![1.4]);
        assert_eq!(lv.m, vec![vec![-0.6]]);

        let ident = GlvSystem::new(
            vec![0.5, -1.0],
            vec![vec![1.0, 2.0], vec![3.0, 4.0]],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        )
        .unwrap();
        let (lv, _) = brenig_reduce(&ident);
        assert_eq!(lv.r, vec![0.5, -1.0]);
        assert_eq!(lv.m, vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
    }

    #[test]
    fn rank_deficient_exponents_get_augmented() {
        // Single monomial x1 x2 in two variables: rank 1 < 2.
        let sys = GlvSystem::new(vec![0.1, 0.2], vec![vec![-1.0], vec![0.5]], vec![vec![1.0, 1.0]]).unwrap();
        let emb = embed_glv(&sys);
        assert_eq!(emb.augmented.appended_rows, 2);
        assert_eq!(emb.game_size(), 4);
        assert!(emb.size_bound_holds());
        // Empty monomial list also works.
        let lin = poly_to_glv(&PolynomialField::from_terms(vec![vec![(1.0, vec![1])]]).unwrap());
        let emb = embed_glv(&lin);
        assert_eq!(emb.game_size(), 2);
        assert_eq!(emb.game.rows(), vec![vec![0.0, 1.0], vec![0.0, 0.0]]);
    }

    #[test]
    fn hofbauer_examples() {
        let lv = LotkaVolterraSystem::new(vec![1.0], vec![vec![-1.0]]).unwrap();
        let g = hofbauer_lift(&lv);
        assert_eq!(g.rows(), vec![vec![-1.0, 1.0], vec![0.0, 0.0]]);
        let p = hofbauer_forward(&[1.0]);
        assert_eq!(p, vec![0.5, 0.5]);
        let v = crate::game::replicator_field(&g, &SimplexPoint::new(p).unwrap()).unwrap();
        assert_eq!(v, vec![0.0, 0.0]);

        for u in [0.1, 1.0, 10.0] {
            let back = hofbauer_inverse(&hofbauer_forward(&[u])).unwrap();
            assert!((back[0] - u).abs() <= 1e-12 * u.max(1.0));
        }

        let zero = LotkaVolterraSystem::new(vec![0.0, 0.0], vec![vec![0.0; 2]; 2]).unwrap();
        assert_eq!(hofbauer_lift(&zero), MatrixGame::zeros(3));
        assert!(matches!(
            hofbauer_inverse(&[1.0, 0.0]),
            Err(Error::FaceProximity { .. })
        ));
    }

    #[test]
    fn logistic_embedding() {
        let emb = embed_glv(&logistic());
        assert_eq!(emb.game.rows(), vec![vec![-1.0, 1.0], vec![0.0, 0.0]]);
        assert_eq!(emb.game_size(), 2);
        let chk = pushforward_residual(&logistic(), &emb.map, &emb.game, &[0.5]).unwrap();
        assert!(chk.residual <= 1e-8);
        assert!(chk.factor.unwrap() > 0.0);
        let fp = pushforward_residual(&logistic(), &emb.map, &emb.game, &[1.0]).unwrap();
        assert!(fp.fixed_point);
        assert_eq!(fp.residual, 0.0);
    }

    #[test]
    fn map_round_trip_and_json() {
        let sys = GlvSystem::new(
            vec![0.2, -0.1],
            vec![vec![0.5, -0.2, 0.0], vec![0.1, 0.0, -0.4]],
            vec![vec![1.0, -1.0], vec![0.5, 2.0], vec![0.0, 1.0]],
        )
        .unwrap();
        let emb = embed_glv(&sys);
        for x in [[0.3, 2.0], [1.0, 1.0], [5.0, 0.2]] {
            let back = emb.map.inverse(&emb.map.forward(&x).unwrap()).unwrap();
            for (a, b) in back.iter().zip(&x) {
                assert!((a - b).abs() < 1e-10 * b);
            }
        }
        let j = emb.map.to_json();
        assert!(j.contains("B_left_inverse"));
        let back: EmbeddingMap = serde_json::from_str(&j).unwrap();
        assert_eq!(back, emb.map);
        assert_eq!(GlvSystem::from_json(&sys.to_json()).unwrap(), sys);
    }

    #[test]
    fn logistic_pulled_back_matches_closed_form() {
        let sys = logistic();
        let emb = embed_glv(&sys);
        let tr = pulled_back_trajectory(&emb.game, &emb.map, &[0.2], 5.0, AdaptiveOptions::new(1e-11, 1e-11)).unwrap();
        assert_eq!(tr.last().0, 5.0);
        for (t, x) in tr.iter() {
            let exact = 0.2 * t.exp() / (1.0 + 0.2 * (t.exp() - 1.0));
            assert!((x[0] - exact).abs() < 1e-7, "t = {t}: {} vs {exact}", x[0]);
        }
    }
}
