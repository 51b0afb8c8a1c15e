//! Multiplicative weights as the Euler discretization of replicator dynamics
//! in cumulative-payoff coordinates, with its local and global error bounds.
//!
//! One MWU step is `y <- y + eta A logit(y)`, `x = logit(y)`. Errors are
//! measured in the infinity norm against the replicator flow integrated at
//! reference tolerances.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{logit_into, simulate_replicator_at, MatrixGame, SimplexPoint};
use crate::ode::{AdaptiveOptions, Trajectory};

/// Largest step size `select_step_size` will return.
pub const ETA_CAP: f64 = 0.1;
/// Smallest step size `select_step_size` will consider.
pub const ETA_FLOOR: f64 = 1e-9;
/// Slack allowed when checking that a game is normalized.
const NORMALIZED_TOL: f64 = 1e-12;

/// Divides by the largest absolute entry. The zero game is returned as is.
pub fn normalize_game(game: &MatrixGame) -> MatrixGame {
    let a = game.max_abs();
    if a == 0.0 {
        game.clone()
    } else {
        game.scaled(1.0 / a)
    }
}

fn check_normalized(game: &MatrixGame) -> Result<()> {
    let a = game.max_abs();
    if a > 1.0 + NORMALIZED_TOL {
        return Err(Error::RejectedInput(format!(
            "game is not normalized (max |A_ij| = {a}); call normalize_game first"
        )));
    }
    Ok(())
}

fn check_eta(eta: f64) -> Result<()> {
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(Error::RejectedInput(format!(
            "eta must be positive and finite, got {eta}"
        )));
    }
    Ok(())
}

fn inf_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max)
}

/// Cumulative payoffs, the strategy they induce, and the step counter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MwuState {
    pub y: Vec<f64>,
    pub x: SimplexPoint,
    pub step_index: u64,
    pub eta: f64,
}

impl MwuState {
    /// Starts at `x0` with `y0 = ln x0`.
    pub fn new(x0: &SimplexPoint, eta: f64) -> Result<Self> {
        check_eta(eta)?;
        if !x0.is_interior() {
            return Err(Error::RejectedInput("MWU needs a strictly interior start".into()));
        }
        let y: Vec<f64> = x0.as_slice().iter().map(|v| v.ln()).collect();
        Self::from_payoffs(y, eta)
    }

    /// Starts from explicit cumulative payoffs.
    pub fn from_payoffs(y: Vec<f64>, eta: f64) -> Result<Self> {
        check_eta(eta)?;
        let x = crate::game::logit(&y)?;
        Ok(MwuState {
            y,
            x,
            step_index: 0,
            eta,
        })
    }
}

/// One multiplicative-weights update.
pub fn mwu_step(game: &MatrixGame, state: &MwuState) -> Result<MwuState> {
    check_normalized(game)?;
    if state.y.len() != game.size() {
        return Err(Error::DimensionMismatch {
            expected: game.size(),
            got: state.y.len(),
        });
    }
    let mut next = state.clone();
    advance(game, &mut next)?;
    Ok(next)
}

fn advance(game: &MatrixGame, s: &mut MwuState) -> Result<()> {
    let payoff = game.payoffs(s.x.as_slice());
    for (y, p) in s.y.iter_mut().zip(&payoff) {
        *y += s.eta * p;
    }
    if let Some(v) = s.y.iter().find(|v| !v.is_finite()) {
        return Err(Error::NumericOverflow(format!(
            "cumulative payoff became {v} at step {}",
            s.step_index + 1
        )));
    }
    let mut x = vec![0.0; s.y.len()];
    logit_into(&s.y, &mut x);
    s.x = SimplexPoint::new(x)?;
    s.step_index += 1;
    Ok(())
}

/// Iterator over successive MWU states, starting with the initial one.
pub struct MwuOrbit<'a> {
    game: &'a MatrixGame,
    state: Option<MwuState>,
}

impl<'a> MwuOrbit<'a> {
    pub fn new(game: &'a MatrixGame, start: MwuState) -> Result<Self> {
        check_normalized(game)?;
        if start.y.len() != game.size() {
            return Err(Error::DimensionMismatch {
                expected: game.size(),
                got: start.y.len(),
            });
        }
        Ok(MwuOrbit {
            game,
            state: Some(start),
        })
    }
}

impl Iterator for MwuOrbit<'_> {
    type Item = Result<MwuState>;

    fn next(&mut self) -> Option<Self::Item> {
        let current = self.state.take()?;
        let mut next = current.clone();
        match advance(self.game, &mut next) {
            Ok(()) => self.state = Some(next),
            Err(e) => {
                // Report the current state, then the error, then stop.
                self.state = None;
                return Some(Err(e));
            }
        }
        Some(Ok(current))
    }
}

/// `steps` MWU iterations from `x0`, recorded at times `k eta`.
pub fn simulate_mwu(game: &MatrixGame, x0: &SimplexPoint, eta: f64, steps: usize) -> Result<Trajectory> {
    let mut s = MwuState::new(x0, eta)?;
    check_normalized(game)?;
    game_len(game, x0.len())?;
    let mut tr = Trajectory::new(0.0, s.x.as_slice().to_vec());
    for k in 1..=steps {
        advance(game, &mut s)?;
        tr.push(k as f64 * eta, s.x.as_slice().to_vec());
    }
    Ok(tr)
}

fn game_len(game: &MatrixGame, m: usize) -> Result<()> {
    if game.size() != m {
        return Err(Error::DimensionMismatch {
            expected: game.size(),
            got: m,
        });
    }
    Ok(())
}

/// `1 - exp(-2 eta)`.
pub fn local_error_bound(eta: f64) -> f64 {
    -(-2.0 * eta).exp_m1()
}

/// Infinity-norm gap between one MWU step and the replicator flow over
/// time `eta` from the same point.
pub fn measure_local_error(game: &MatrixGame, x: &SimplexPoint, eta: f64) -> Result<f64> {
    let s0 = MwuState::new(x, eta)?;
    let s1 = mwu_step(game, &s0)?;
    let flow = simulate_replicator_at(game, x, &[eta], AdaptiveOptions::reference())?;
    Ok(inf_dist(s1.x.as_slice(), &flow[0]))
}

/// Certified infinity-norm Lipschitz constant of the replicator field on
/// the simplex.
///
/// Row `i` of the Jacobian is `((Ax)_i - x.Ax) e_i + x_i (A_i. - A^T x - Ax)`.
/// With `a = max |A_ij|`, `R_i = sum_j |A_ij|` and `x_i <= 1` its absolute row
/// sum is at most `2a + R_i + 2 m a`.
pub fn lipschitz_bound(game: &MatrixGame) -> f64 {
    let a = game.max_abs();
    let m = game.size() as f64;
    let r = game
        .rows()
        .iter()
        .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    2.0 * a + r + 2.0 * m * a
}

/// Gronwall bound after `steps` iterations:
/// `(1 - e^{-2 eta}) (e^{steps eta L} - 1) / (e^{eta L} - 1)`.
pub fn global_error_bound(eta: f64, lipschitz: f64, steps: u64) -> f64 {
    let b = local_error_bound(eta);
    if steps == 0 {
        return 0.0;
    }
    let h = eta * lipschitz;
    if h == 0.0 {
        return b * steps as f64;
    }
    b * ((steps as f64 * h).exp_m1() / h.exp_m1())
}

/// Measured errors and their analytic bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub etas: Vec<f64>,
    pub measured_local: Vec<f64>,
    pub local_bounds: Vec<f64>,
    /// Step numbers `1..=steps` of the global series.
    pub steps: Vec<u64>,
    pub measured_global: Vec<f64>,
    pub global_bounds: Vec<f64>,
    #[serde(rename = "lipschitz_L")]
    pub lipschitz_l: f64,
    /// Tolerance of the reference flow.
    pub reference_tol: f64,
}

impl ErrorReport {
    /// True when every measured error is within its bound.
    pub fn within_bounds(&self) -> bool {
        self.measured_local.iter().zip(&self.local_bounds).all(|(m, b)| m <= b)
            && self
                .measured_global
                .iter()
                .zip(&self.global_bounds)
                .all(|(m, b)| m <= b)
    }

    /// First step whose measured global error exceeds the bound.
    pub fn first_violation(&self) -> Option<u64> {
        self.measured_global
            .iter()
            .zip(&self.global_bounds)
            .zip(&self.steps)
            .find(|((m, b), _)| m > b)
            .map(|(_, s)| *s)
    }

    /// Columns `step,measured,bound`.
    pub fn to_csv_string(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["step", "measured", "bound"]).expect("in-memory write");
        for ((s, m), b) in self.steps.iter().zip(&self.measured_global).zip(&self.global_bounds) {
            w.write_record([s.to_string(), format!("{m:?}"), format!("{b:?}")])
                .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Runs `steps` MWU iterations and compares each with the reference flow.
pub fn measure_global_error(game: &MatrixGame, x0: &SimplexPoint, eta: f64, steps: usize) -> Result<ErrorReport> {
    let mwu = simulate_mwu(game, x0, eta, steps)?;
    let lipschitz = lipschitz_bound(game);
    let times: Vec<f64> = (1..=steps).map(|k| k as f64 * eta).collect();
    let opts = AdaptiveOptions::reference();
    let flow = if steps == 0 {
        Vec::new()
    } else {
        simulate_replicator_at(game, x0, &times, opts)?
    };
    let measured: Vec<f64> = flow
        .iter()
        .zip(&mwu.states()[1..])
        .map(|(f, x)| inf_dist(f, x))
        .collect();
    let step_ids: Vec<u64> = (1..=steps as u64).collect();
    let bounds = step_ids
        .iter()
        .map(|&k| global_error_bound(eta, lipschitz, k))
        .collect();
    Ok(ErrorReport {
        etas: vec![eta],
        measured_local: measured.first().copied().into_iter().collect(),
        local_bounds: if steps > 0 {
            vec![local_error_bound(eta)]
        } else {
            vec![]
        },
        steps: step_ids,
        measured_global: measured,
        global_bounds: bounds,
        lipschitz_l: lipschitz,
        reference_tol: opts.rel_tol,
    })
}

/// One-step errors for a list of step sizes at a fixed point.
pub fn sweep_local_error(game: &MatrixGame, x: &SimplexPoint, etas: &[f64]) -> Result<ErrorReport> {
    let measured = etas
        .iter()
        .map(|&eta| measure_local_error(game, x, eta))
        .collect::<Result<Vec<_>>>()?;
    Ok(ErrorReport {
        etas: etas.to_vec(),
        measured_local: measured,
        local_bounds: etas.iter().map(|&e| local_error_bound(e)).collect(),
        steps: Vec::new(),
        measured_global: Vec::new(),
        global_bounds: Vec::new(),
        lipschitz_l: lipschitz_bound(game),
        reference_tol: AdaptiveOptions::reference().rel_tol,
    })
}

/// Number of MWU steps that cover the horizon.
pub fn steps_for_horizon(eta: f64, t_horizon: f64) -> u64 {
    (t_horizon / eta - 1e-9).ceil().max(1.0) as u64
}

fn horizon_bound(eta: f64, lipschitz: f64, t_horizon: f64) -> f64 {
    global_error_bound(eta, lipschitz, steps_for_horizon(eta, t_horizon))
}

/// Largest step size in `[ETA_FLOOR, ETA_CAP]` (bisection resolution
/// `1e-9`) whose global bound at the horizon is at most `epsilon`.
pub fn select_step_size(lipschitz: f64, t_horizon: f64, epsilon: f64) -> Result<f64> {
    for (name, v) in [("L", lipschitz), ("t_horizon", t_horizon), ("epsilon", epsilon)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::RejectedInput(format!(
                "{name} must be positive and finite, got {v}"
            )));
        }
    }
    let ok = |eta: f64| horizon_bound(eta, lipschitz, t_horizon) <= epsilon;
    if ok(ETA_CAP) {
        return Ok(ETA_CAP);
    }
    if !ok(ETA_FLOOR) {
        return Err(Error::Infeasible {
            eta_floor: ETA_FLOOR,
            bound_at_floor: horizon_bound(ETA_FLOOR, lipschitz, t_horizon),
            epsilon,
        });
    }
    let (mut lo, mut hi) = (ETA_FLOOR, ETA_CAP);
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn game(rows: &[&[f64]]) -> MatrixGame {
        MatrixGame::from_rows(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(
            normalize_game(&game(&[&[2.0, -4.0], &[0.0, 1.0]])).rows(),
            vec![vec![0.5, -1.0], vec![0.0, 0.25]]
        );
        assert_eq!(normalize_game(&MatrixGame::zeros(3)), MatrixGame::zeros(3));
        let g = game(&[&[1.0, -0.5], &[0.2, 0.0]]);
        assert_eq!(normalize_game(&g), g);
    }

    fn s0y(x: &SimplexPoint) -> Vec<f64> {
        x.as_slice().iter().map(|v| v.ln()).collect()
    }

    #[test]
    fn step_examples() {
        let z = MatrixGame::zeros(3);
        let x = SimplexPoint::new(vec![0.2, 0.3, 0.5]).unwrap();
        let s = mwu_step(&z, &MwuState::new(&x, 0.1).unwrap()).unwrap();
        assert_eq!(s.y, s0y(&x));
        assert!(inf_dist(s.x.as_slice(), x.as_slice()) < 1e-15);
        assert_eq!(s.step_index, 1);

        let g = game(&[&[1.0, 1.0], &[0.0, 0.0]]);
        let s0 = MwuState::from_payoffs(vec![0.0, 0.0], 2f64.ln()).unwrap();
        let s1 = mwu_step(&g, &s0).unwrap();
        assert!((s1.y[0] - 2f64.ln()).abs() < 1e-15 && s1.y[1] == 0.0);
        assert!((s1.x.as_slice()[0] - 2.0 / 3.0).abs() < 1e-15);

        let sym = game(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let s = mwu_step(&sym, &MwuState::new(&SimplexPoint::uniform(2), 0.3).unwrap()).unwrap();
        assert!((s.x.as_slice()[0] - 0.5).abs() < 1e-15);

        assert!(mwu_step(
            &game(&[&[2.0]]),
            &MwuState::new(&SimplexPoint::uniform(1), 0.1).unwrap()
        )
        .is_err());
    }

    #[test]
    fn bound_examples() {
        assert!((local_error_bound(0.1) - 0.18127).abs() < 1e-5);
        assert!(local_error_bound(1e-12) < 1e-11);
        assert!(local_error_bound(100.0) <= 1.0);
        for eta in [1e-3, 0.05, 0.3] {
            for l in [0.0, 0.5, 7.0] {
                assert_eq!(global_error_bound(eta, l, 1), local_error_bound(eta));
                assert!(global_error_bound(eta, l, 5) > global_error_bound(eta, l, 4));
            }
        }
        assert_eq!(global_error_bound(0.1, 2.0, 0), 0.0);
    }

    #[test]
    fn lipschitz_examples() {
        assert_eq!(lipschitz_bound(&MatrixGame::zeros(4)), 0.0);
        let g = game(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let l = lipschitz_bound(&g);
        assert!((lipschitz_bound(&g.scaled(3.0)) - 3.0 * l).abs() < 1e-12);
    }

    #[test]
    fn step_size_examples() {
        assert_eq!(select_step_size(1.0, 1.0, 1e6).unwrap(), ETA_CAP);
        let eta = select_step_size(1.0, 0.05, 0.15).unwrap();
        assert!((ETA_FLOOR..ETA_CAP).contains(&eta));
        assert!(horizon_bound(eta, 1.0, 0.05) <= 0.15);
        assert!(matches!(select_step_size(1.0, 1.0, 0.1), Err(Error::Infeasible { .. })));
        assert!(select_step_size(0.0, 1.0, 0.1).is_err());
    }

    #[test]
    fn orbit_and_report() {
        let g = game(&[&[0.0, -1.0, 1.0], &[1.0, 0.0, -1.0], &[-1.0, 1.0, 0.0]]);
        let x0 = SimplexPoint::new(vec![0.5, 0.3, 0.2]).unwrap();
        let s0 = MwuState::new(&x0, 0.01).unwrap();
        let states: Vec<_> = MwuOrbit::new(&g, s0).unwrap().take(4).collect::<Result<_>>().unwrap();
        let tr = simulate_mwu(&g, &x0, 0.01, 3).unwrap();
        for (s, x) in states.iter().zip(tr.states()) {
            assert_eq!(s.x.as_slice(), &x[..]);
        }
        let r = measure_global_error(&g, &x0, 0.01, 50).unwrap();
        assert!(r.within_bounds());
        let csv = r.to_csv_string();
        assert!(csv.starts_with("step,measured,bound\n1,"));
        assert_eq!(csv.lines().count(), 51);
        assert!(r.to_json().contains("lipschitz_L"));
    }
}
