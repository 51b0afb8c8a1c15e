//! Symmetric matrix games and replicator dynamics on the simplex.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{integrate_adaptive, integrate_adaptive_at, AdaptiveOptions, Trajectory, VectorField};

/// Sum-to-one tolerance for simplex points and simulated states.
pub const SIMPLEX_TOL: f64 = 1e-9;
/// Smallest coordinate an interior point may have.
pub const INTERIOR_FLOOR: f64 = 1e-300;

/// A single-population game with square payoff matrix `A`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GameDoc", into = "GameDoc")]
pub struct MatrixGame {
    m: usize,
    a: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct GameDoc {
    m: usize,
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
}

impl TryFrom<GameDoc> for MatrixGame {
    type Error = Error;
    fn try_from(d: GameDoc) -> Result<Self> {
        if d.a.len() != d.m {
            return Err(Error::RejectedInput(format!(
                "game declares m = {} but has {} rows",
                d.m,
                d.a.len()
            )));
        }
        MatrixGame::from_rows(d.a)
    }
}

impl From<MatrixGame> for GameDoc {
    fn from(g: MatrixGame) -> Self {
        GameDoc { m: g.m, a: g.rows() }
    }
}

impl MatrixGame {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let m = rows.len();
        if m == 0 {
            return Err(Error::RejectedInput("game needs at least one action".into()));
        }
        let mut a = Vec::with_capacity(m * m);
        for r in &rows {
            if r.len() != m {
                return Err(Error::RejectedInput(format!(
                    "payoff matrix must be square: row of length {} in a {m}-row matrix",
                    r.len()
                )));
            }
            if let Some(v) = r.iter().find(|v| !v.is_finite()) {
                return Err(Error::RejectedInput(format!("non-finite payoff {v}")));
            }
            a.extend_from_slice(r);
        }
        Ok(MatrixGame { m, a })
    }

    pub fn zeros(m: usize) -> Self {
        MatrixGame { m, a: vec![0.0; m * m] }
    }

    pub fn size(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.m + j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.a.chunks(self.m).map(<[f64]>::to_vec).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.a.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, c: f64) -> MatrixGame {
        MatrixGame {
            m: self.m,
            a: self.a.iter().map(|v| v * c).collect(),
        }
    }

    /// Writes `A x` into `out`.
    #[inline]
    pub fn payoffs_into(&self, x: &[f64], out: &mut [f64]) {
        for (i, row) in self.a.chunks(self.m).enumerate() {
            out[i] = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    pub fn payoffs(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.m];
        self.payoffs_into(x, &mut out);
        out
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.m {
            return Err(Error::DimensionMismatch {
                expected: self.m,
                got: len,
            });
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("game serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// Reads a headerless CSV matrix.
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_reader(r);
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let line = rec.position().map(|p| p.line()).unwrap_or(0);
            let row = rec
                .iter()
                .map(|f| {
                    f.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Parse(format!("line {line}: {f:?}: {e}")))
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        MatrixGame::from_rows(rows)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
        for row in self.a.chunks(self.m) {
            wtr.write_record(row.iter().map(|v| format!("{v:?}")))?;
        }
        wtr.flush().map_err(|e| Error::Parse(e.to_string()))?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("csv output is utf-8")
    }
}

/// A mixed strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplexPoint {
    x: Vec<f64>,
    interior: bool,
}

impl SimplexPoint {
    pub fn new(x: Vec<f64>) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::RejectedInput("empty strategy".into()));
        }
        if let Some(v) = x.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::RejectedInput(format!("invalid coordinate {v}")));
        }
        let s: f64 = x.iter().sum();
        if (s - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::RejectedInput(format!("coordinates sum to {s}, not 1")));
        }
        let interior = x.iter().all(|v| *v >= INTERIOR_FLOOR);
        Ok(SimplexPoint { x, interior })
    }

    pub fn uniform(m: usize) -> Self {
        SimplexPoint {
            x: vec![1.0 / m as f64; m],
            interior: true,
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.x
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.x
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn is_interior(&self) -> bool {
        self.interior
    }
}

/// Replicator right-hand side `x_i ((Ax)_i - x^T A x)` into `out`.
///
/// The mean payoff is divided by `sum x`. This changes nothing on the
/// simplex, but makes the components sum to zero everywhere, so a
/// Runge-Kutta step keeps `sum x` fixed up to rounding. With the plain mean,
/// `sum x - 1` obeys `d/dt = -x^T A x (sum x - 1)` and rounding errors grow
/// exponentially whenever the mean payoff is negative.
#[inline]
pub(crate) fn replicator_into(game: &MatrixGame, x: &[f64], out: &mut [f64]) {
    game.payoffs_into(x, out);
    let total: f64 = x.iter().sum();
    let avg: f64 = x.iter().zip(out.iter()).map(|(a, b)| a * b).sum::<f64>() / total;
    for (o, xi) in out.iter_mut().zip(x) {
        *o = xi * (*o - avg);
    }
}

/// Evaluates the replicator vector field at a simplex point.
pub fn replicator_field(game: &MatrixGame, x: &SimplexPoint) -> Result<Vec<f64>> {
    game.check_len(x.len())?;
    let mut out = vec![0.0; game.m];
    replicator_into(game, x.as_slice(), &mut out);
    Ok(out)
}

/// Replicator dynamics as an integrable field. States off the simplex by
/// more than [`SIMPLEX_TOL`] count as leaving the domain.
#[derive(Debug, Clone, Copy)]
pub struct ReplicatorField<'a> {
    pub game: &'a MatrixGame,
}

impl VectorField for ReplicatorField<'_> {
    fn dim(&self) -> usize {
        self.game.m
    }

    fn eval_into(&self, x: &[f64], dx: &mut [f64]) {
        replicator_into(self.game, x, dx)
    }

    fn domain_violation(&self, x: &[f64]) -> Option<String> {
        simplex_violation(x)
    }
}

pub(crate) fn simplex_violation(x: &[f64]) -> Option<String> {
    let s: f64 = x.iter().sum();
    if !((s - 1.0).abs() <= SIMPLEX_TOL) {
        return Some(format!("coordinates sum to {s}"));
    }
    if let Some((i, v)) = x.iter().enumerate().find(|(_, v)| !(**v >= -SIMPLEX_TOL)) {
        return Some(format!("coordinate {i} is {v}"));
    }
    None
}

/// Logit (softmax) map, normalized by the maximum entry.
pub fn logit(y: &[f64]) -> Result<SimplexPoint> {
    if y.is_empty() {
        return Err(Error::RejectedInput("empty payoff vector".into()));
    }
    if let Some(v) = y.iter().find(|v| !v.is_finite()) {
        return Err(Error::RejectedInput(format!("non-finite payoff {v}")));
    }
    let mut x = vec![0.0; y.len()];
    logit_into(y, &mut x);
    let interior = x.iter().all(|v| *v >= INTERIOR_FLOOR);
    Ok(SimplexPoint { x, interior })
}

#[inline]
pub(crate) fn logit_into(y: &[f64], out: &mut [f64]) {
    let mx = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut s = 0.0;
    for (o, v) in out.iter_mut().zip(y) {
        *o = (v - mx).exp();
        s += *o;
    }
    for o in out.iter_mut() {
        *o /= s;
    }
}

/// Cumulative-payoff form of replicator dynamics, `y' = A logit(y)`.
#[derive(Debug, Clone, Copy)]
pub struct PayoffField<'a> {
    pub game: &'a MatrixGame,
}

impl VectorField for PayoffField<'_> {
    fn dim(&self) -> usize {
        self.game.m
    }

    fn eval_into(&self, y: &[f64], dy: &mut [f64]) {
        let mut x = vec![0.0; y.len()];
        logit_into(y, &mut x);
        self.game.payoffs_into(&x, dy);
    }
}

fn drift(e: Error) -> Error {
    match e {
        Error::DomainEscape { time, reason } => Error::IntegrationDrift { time, reason },
        other => other,
    }
}

fn check_interior_start(game: &MatrixGame, x0: &SimplexPoint) -> Result<()> {
    game.check_len(x0.len())?;
    if !x0.is_interior() {
        return Err(Error::RejectedInput(
            "replicator simulation needs a strictly interior start".into(),
        ));
    }
    Ok(())
}

/// Integrates replicator dynamics from an interior point to `t_end`.
pub fn simulate_replicator(
    game: &MatrixGame,
    x0: &SimplexPoint,
    t_end: f64,
    opts: AdaptiveOptions,
) -> Result<Trajectory> {
    check_interior_start(game, x0)?;
    integrate_adaptive(&ReplicatorField { game }, x0.as_slice(), t_end, opts).map_err(drift)
}

/// Replicator states at the requested times.
pub fn simulate_replicator_at(
    game: &MatrixGame,
    x0: &SimplexPoint,
    times: &[f64],
    opts: AdaptiveOptions,
) -> Result<Vec<Vec<f64>>> {
    check_interior_start(game, x0)?;
    integrate_adaptive_at(&ReplicatorField { game }, x0.as_slice(), times, opts).map_err(drift)
}

/// Integrates the cumulative payoffs and maps every sample through [`logit`].
pub fn replicator_from_payoffs(game: &MatrixGame, y0: &[f64], t_end: f64, opts: AdaptiveOptions) -> Result<Trajectory> {
    game.check_len(y0.len())?;
    logit(y0)?;
    let ys = integrate_adaptive(&PayoffField { game }, y0, t_end, opts)?;
    ys.map_states(|y| logit(y).map(SimplexPoint::into_vec))
}

/// Payoff-route strategies at the requested times.
pub fn replicator_from_payoffs_at(
    game: &MatrixGame,
    y0: &[f64],
    times: &[f64],
    opts: AdaptiveOptions,
) -> Result<Vec<Vec<f64>>> {
    game.check_len(y0.len())?;
    logit(y0)?;
    integrate_adaptive_at(&PayoffField { game }, y0, times, opts)?
        .iter()
        .map(|y| logit(y).map(SimplexPoint::into_vec))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn game(rows: &[&[f64]]) -> MatrixGame {
        MatrixGame::from_rows(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    fn pt(x: &[f64]) -> SimplexPoint {
        SimplexPoint::new(x.to_vec()).unwrap()
    }

    #[test]
    fn field_examples() {
        let v = replicator_field(&game(&[&[0.0, 1.0], &[1.0, 0.0]]), &pt(&[0.5, 0.5])).unwrap();
        assert_eq!(v, vec![0.0, 0.0]);
        let v = replicator_field(&MatrixGame::zeros(3), &pt(&[0.2, 0.3, 0.5])).unwrap();
        assert_eq!(v, vec![0.0; 3]);
        let v = replicator_field(&game(&[&[0.0, 1.0], &[0.0, 0.0]]), &pt(&[0.5, 0.5])).unwrap();
        assert_eq!(v, vec![0.125, -0.125]);
        assert!(replicator_field(&MatrixGame::zeros(3), &pt(&[0.5, 0.5])).is_err());
    }

    #[test]
    fn field_vanishes_at_vertices() {
        let g = game(&[&[1.0, -2.0, 0.5], &[0.3, 0.0, 4.0], &[-1.0, 2.0, 0.0]]);
        for i in 0..3 {
            let mut e = vec![0.0; 3];
            e[i] = 1.0;
            assert_eq!(replicator_field(&g, &pt(&e)).unwrap(), vec![0.0; 3]);
        }
    }

    #[test]
    fn logit_examples() {
        assert_eq!(logit(&[0.0, 0.0]).unwrap().as_slice(), &[0.5, 0.5]);
        let x = logit(&[2f64.ln(), 0.0]).unwrap();
        assert!((x.as_slice()[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((x.as_slice()[1] - 1.0 / 3.0).abs() < 1e-15);
        let a = logit(&[0.3, -1.2, 2.0]).unwrap();
        let b = logit(&[1e5 + 0.3, 1e5 - 1.2, 1e5 + 2.0]).unwrap();
        for (p, q) in a.as_slice().iter().zip(b.as_slice()) {
            assert!((p - q).abs() < 1e-10);
        }
        let big = logit(&[1e6, 1e6 - 3.0]).unwrap();
        assert!(big.is_interior());
        assert!(logit(&[f64::NAN]).is_err());
    }

    #[test]
    fn simplex_point_validation() {
        assert!(SimplexPoint::new(vec![0.5, 0.6]).is_err());
        assert!(SimplexPoint::new(vec![-0.1, 1.1]).is_err());
        assert!(!pt(&[1.0, 0.0]).is_interior());
        assert!(pt(&[0.4, 0.6]).is_interior());
    }

    #[test]
    fn zero_game_trajectory_is_constant() {
        let g = MatrixGame::zeros(2);
        let tr = simulate_replicator(&g, &pt(&[0.3, 0.7]), 10.0, AdaptiveOptions::new(1e-8, 1e-8)).unwrap();
        assert!(tr.states().iter().all(|s| s == &vec![0.3, 0.7]));
        let tr = replicator_from_payoffs(&g, &[0.0, 0.0], 10.0, AdaptiveOptions::new(1e-8, 1e-8)).unwrap();
        assert!(tr.states().iter().all(|s| s == &vec![0.5, 0.5]));
    }

    #[test]
    fn interior_equilibrium_is_fixed() {
        let g = game(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let tr = simulate_replicator(&g, &pt(&[0.5, 0.5]), 20.0, AdaptiveOptions::new(1e-10, 1e-10)).unwrap();
        for s in tr.states() {
            assert!((s[0] - 0.5).abs() < 1e-14);
        }
    }

    #[test]
    fn dominant_strategy_follows_logistic() {
        // x1' = x1 x2 ((Ax)_1 - (Ax)_2) = x1^2 (1 - x1), whose solution obeys
        // ln(x / (1 - x)) - 1/x = t - 2 from x = 1/2.
        let g = game(&[&[1.0, 0.0], &[0.0, 0.0]]);
        let tr = simulate_replicator(&g, &pt(&[0.5, 0.5]), 30.0, AdaptiveOptions::new(1e-10, 1e-10)).unwrap();
        let mut prev = 0.0;
        for (t, x) in tr.iter() {
            let (p, q) = (x[0], x[1]);
            if t <= 8.0 {
                assert!(((p / q).ln() - 1.0 / p - (t - 2.0)).abs() < 1e-6, "t = {t}");
            }
            assert!(x[0] >= prev);
            prev = x[0];
        }
        assert!(prev > 1.0 - 1e-9);
    }

    #[test]
    fn payoff_route_first_sample() {
        let g = game(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let tr = replicator_from_payoffs(&g, &[2f64.ln(), 0.0], 1.0, AdaptiveOptions::new(1e-8, 1e-8)).unwrap();
        let x0 = tr.first().1;
        assert!((x0[0] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn simulate_rejects_boundary_start() {
        let g = MatrixGame::zeros(2);
        assert!(simulate_replicator(&g, &pt(&[1.0, 0.0]), 1.0, AdaptiveOptions::new(1e-8, 1e-8)).is_err());
    }

    #[test]
    fn game_serialization() {
        let g = game(&[&[1.0, -2.5], &[0.0, 3.0]]);
        let j = g.to_json();
        assert!(j.contains("\"A\""));
        assert_eq!(MatrixGame::from_json(&j).unwrap(), g);
        assert_eq!(MatrixGame::read_csv(g.to_csv_string().as_bytes()).unwrap(), g);
        assert!(MatrixGame::from_json(r#"{"m": 3, "A": [[1, 2], [3, 4]]}"#).is_err());
        assert!(MatrixGame::read_csv("1,2\n3\n".as_bytes()).is_err());
        assert!(MatrixGame::read_csv("1,x\n3,4\n".as_bytes()).is_err());
    }
}
