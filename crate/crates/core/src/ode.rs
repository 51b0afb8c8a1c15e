//! Numerical integration of autonomous vector fields and bounded-horizon
//! reachability over sampled orbits.
//!
//! Two integrators are provided: classical fourth-order Runge-Kutta on a
//! fixed grid, and the Dormand-Prince 5(4) embedded pair with step control.
//! The adaptive integrator at tight tolerances serves as the reference flow
//! for every discretization error measurement in the crate.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An autonomous vector field `x' = F(x)` on (a subset of) `R^n`.
pub trait VectorField {
    fn dim(&self) -> usize;

    /// Writes `F(x)` into `dx`. Both slices have length `dim()`.
    fn eval_into(&self, x: &[f64], dx: &mut [f64]);

    /// Returns a description when `x` lies outside the declared domain.
    fn domain_violation(&self, _x: &[f64]) -> Option<String> {
        None
    }

    fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut dx = vec![0.0; self.dim()];
        self.eval_into(x, &mut dx);
        dx
    }
}

impl<T: VectorField + ?Sized> VectorField for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval_into(&self, x: &[f64], dx: &mut [f64]) {
        (**self).eval_into(x, dx)
    }
    fn domain_violation(&self, x: &[f64]) -> Option<String> {
        (**self).domain_violation(x)
    }
}

/// Adapts a closure `|x, dx|` into a [`VectorField`] on all of `R^n`.
pub struct FnField<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(&[f64], &mut [f64])> FnField<F> {
    pub fn new(dim: usize, f: F) -> Self {
        FnField { dim, f }
    }
}

impl<F: Fn(&[f64], &mut [f64])> VectorField for FnField<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval_into(&self, x: &[f64], dx: &mut [f64]) {
        (self.f)(x, dx)
    }
}

/// A sampled orbit: strictly increasing times and one state per time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TrajectoryDoc")]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct TrajectoryDoc {
    times: Vec<f64>,
    states: Vec<Vec<f64>>,
}

impl TryFrom<TrajectoryDoc> for Trajectory {
    type Error = Error;
    fn try_from(d: TrajectoryDoc) -> Result<Self> {
        Trajectory::from_parts(d.times, d.states)
    }
}

impl Trajectory {
    pub fn new(t0: f64, x0: Vec<f64>) -> Self {
        Trajectory {
            times: vec![t0],
            states: vec![x0],
        }
    }

    pub fn from_parts(times: Vec<f64>, states: Vec<Vec<f64>>) -> Result<Self> {
        if times.is_empty() || times.len() != states.len() {
            return Err(Error::RejectedInput(format!(
                "trajectory needs matching non-empty times/states ({} vs {})",
                times.len(),
                states.len()
            )));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::RejectedInput("times must be strictly increasing".into()));
        }
        let n = states[0].len();
        if let Some(s) = states.iter().find(|s| s.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: s.len(),
            });
        }
        Ok(Trajectory { times, states })
    }

    /// Appends a sample. Panics if `t` does not increase or the dimension changes.
    pub fn push(&mut self, t: f64, x: Vec<f64>) {
        assert!(t > *self.times.last().unwrap(), "times must increase");
        assert_eq!(x.len(), self.dim());
        self.times.push(t);
        self.states.push(x);
    }

    pub fn dim(&self) -> usize {
        self.states[0].len()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[Vec<f64>] {
        &self.states
    }

    pub fn first(&self) -> (f64, &[f64]) {
        (self.times[0], &self.states[0])
    }

    pub fn last(&self) -> (f64, &[f64]) {
        let i = self.times.len() - 1;
        (self.times[i], &self.states[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &[f64])> {
        self.times.iter().copied().zip(self.states.iter().map(Vec::as_slice))
    }

    /// Owned samples, the input shape [`reach`] consumes.
    pub fn samples(&self) -> impl Iterator<Item = (f64, Vec<f64>)> + '_ {
        self.times.iter().copied().zip(self.states.iter().cloned())
    }

    /// Applies `f` to every state, keeping the times.
    pub fn map_states<F>(&self, mut f: F) -> Result<Trajectory>
    where
        F: FnMut(&[f64]) -> Result<Vec<f64>>,
    {
        let states = self.states.iter().map(|s| f(s)).collect::<Result<Vec<_>>>()?;
        Trajectory::from_parts(self.times.clone(), states)
    }

    /// CSV with header `t,x1,...,xn`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let mut header = vec!["t".to_string()];
        header.extend((1..=self.dim()).map(|i| format!("x{i}")));
        wtr.write_record(&header)?;
        for (t, x) in self.iter() {
            let mut rec = vec![format!("{t:?}")];
            rec.extend(x.iter().map(|v| format!("{v:?}")));
            wtr.write_record(&rec)?;
        }
        wtr.flush().map_err(|e| Error::Parse(e.to_string()))?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("csv output is utf-8")
    }

    pub fn read_csv<R: std::io::Read>(r: R) -> Result<Trajectory> {
        let mut rdr = csv::Reader::from_reader(r);
        let mut times = Vec::new();
        let mut states = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let vals = rec
                .iter()
                .map(|f| f.trim().parse::<f64>().map_err(|e| Error::Parse(format!("{f:?}: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            if vals.is_empty() {
                continue;
            }
            times.push(vals[0]);
            states.push(vals[1..].to_vec());
        }
        Trajectory::from_parts(times, states)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("trajectory serializes")
    }

    pub fn from_json(s: &str) -> Result<Trajectory> {
        Ok(serde_json::from_str(s)?)
    }
}

fn check_start<F: VectorField>(field: &F, x0: &[f64]) -> Result<()> {
    if x0.len() != field.dim() {
        return Err(Error::DimensionMismatch {
            expected: field.dim(),
            got: x0.len(),
        });
    }
    if let Some(reason) = field.domain_violation(x0) {
        return Err(Error::DomainEscape { time: 0.0, reason });
    }
    Ok(())
}

/// One classical RK4 step of size `h`.
pub fn rk4_step<F: VectorField>(field: &F, x: &[f64], h: f64) -> Vec<f64> {
    let n = x.len();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    field.eval_into(x, &mut k1);
    for i in 0..n {
        tmp[i] = x[i] + 0.5 * h * k1[i];
    }
    field.eval_into(&tmp, &mut k2);
    for i in 0..n {
        tmp[i] = x[i] + 0.5 * h * k2[i];
    }
    field.eval_into(&tmp, &mut k3);
    for i in 0..n {
        tmp[i] = x[i] + h * k3[i];
    }
    field.eval_into(&tmp, &mut k4);
    (0..n)
        .map(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

/// Fixed-step RK4 from `t = 0` to `t_end`, sampled at multiples of `dt`.
///
/// When `t_end` is not a multiple of `dt` a final shorter step lands exactly
/// on `t_end`.
pub fn integrate_fixed<F: VectorField>(field: &F, x0: &[f64], t_end: f64, dt: f64) -> Result<Trajectory> {
    if !(dt > 0.0) || !(t_end > 0.0) {
        return Err(Error::RejectedInput(format!(
            "need dt > 0 and t_end > 0 (dt = {dt}, t_end = {t_end})"
        )));
    }
    check_start(field, x0)?;
    let mut traj = Trajectory::new(0.0, x0.to_vec());
    let full = (t_end / dt + 1e-9).floor() as u64;
    let mut x = x0.to_vec();
    for k in 1..=full {
        x = rk4_step(field, &x, dt);
        let t = k as f64 * dt;
        if let Some(reason) = field.domain_violation(&x) {
            return Err(Error::DomainEscape { time: t, reason });
        }
        traj.push(t, x.clone());
    }
    let t_last = full as f64 * dt;
    let rest = t_end - t_last;
    if rest > 1e-9 * dt {
        x = rk4_step(field, &x, rest);
        if let Some(reason) = field.domain_violation(&x) {
            return Err(Error::DomainEscape { time: t_end, reason });
        }
        traj.push(t_end, x);
    }
    Ok(traj)
}

/// Lazily generated RK4 orbit, usable as a stepwise source for [`reach`].
pub struct Rk4Orbit<F> {
    field: F,
    dt: f64,
    k: u64,
    x: Vec<f64>,
    done: bool,
}

impl<F: VectorField> Rk4Orbit<F> {
    pub fn new(field: F, x0: Vec<f64>, dt: f64) -> Self {
        Rk4Orbit {
            field,
            dt,
            k: 0,
            x: x0,
            done: false,
        }
    }
}

impl<F: VectorField> Iterator for Rk4Orbit<F> {
    type Item = (f64, Vec<f64>);

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        if self.k > 0 {
            self.x = rk4_step(&self.field, &self.x, self.dt);
            if self.field.domain_violation(&self.x).is_some() || self.x.iter().any(|v| !v.is_finite()) {
                self.done = true;
                return None;
            }
        }
        let t = self.k as f64 * self.dt;
        self.k += 1;
        Some((t, self.x.clone()))
    }
}

/// Tolerances and limits for the adaptive integrator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Largest allowed step; bounds the sampling gap of recorded orbits.
    pub h_max: f64,
    pub max_steps: usize,
}

impl AdaptiveOptions {
    pub fn new(rel_tol: f64, abs_tol: f64) -> Self {
        AdaptiveOptions {
            rel_tol,
            abs_tol,
            h_max: f64::INFINITY,
            max_steps: 5_000_000,
        }
    }

    /// The reference-flow setting, 1e-12 relative and absolute.
    pub fn reference() -> Self {
        Self::new(1e-12, 1e-12)
    }

    pub fn with_h_max(mut self, h_max: f64) -> Self {
        self.h_max = h_max;
        self
    }

    fn validate(&self) -> Result<()> {
        let ok = |t: f64| t > 0.0 && t <= 1e-2;
        if !ok(self.rel_tol) || !ok(self.abs_tol) {
            return Err(Error::RejectedInput(format!(
                "tolerances must lie in (0, 1e-2] (rel {}, abs {})",
                self.rel_tol, self.abs_tol
            )));
        }
        if !(self.h_max > 0.0) {
            return Err(Error::RejectedInput(format!(
                "h_max must be positive, got {}",
                self.h_max
            )));
        }
        Ok(())
    }
}

/// Smallest step the adaptive integrator may shrink to.
pub const STEP_FLOOR: f64 = 1e-14;

// Dormand-Prince 5(4) tableau. The system is autonomous, so the stage
// times are not needed.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Dormand-Prince stepper holding the current time, state and step size.
pub struct DormandPrince<F> {
    field: F,
    opts: AdaptiveOptions,
    t: f64,
    y: Vec<f64>,
    k1: Vec<f64>,
    h: Option<f64>,
    steps: usize,
    scratch: [Vec<f64>; 7],
}

impl<F: VectorField> DormandPrince<F> {
    pub fn new(field: F, x0: &[f64], t0: f64, opts: AdaptiveOptions) -> Result<Self> {
        opts.validate()?;
        check_start(&field, x0)?;
        let n = x0.len();
        let mut k1 = vec![0.0; n];
        field.eval_into(x0, &mut k1);
        Ok(DormandPrince {
            field,
            opts,
            t: t0,
            y: x0.to_vec(),
            k1,
            h: None,
            steps: 0,
            scratch: std::array::from_fn(|_| vec![0.0; n]),
        })
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn state(&self) -> &[f64] {
        &self.y
    }

    pub fn steps_taken(&self) -> usize {
        self.steps
    }

    fn scale(&self, a: f64) -> f64 {
        self.opts.abs_tol + self.opts.rel_tol * a.abs()
    }

    fn initial_step(&mut self, span: f64) -> f64 {
        let n = self.y.len();
        let d1 = (0..n)
            .map(|i| (self.k1[i] / self.scale(self.y[i])).abs())
            .fold(0.0, f64::max);
        if d1 == 0.0 {
            return span.min(self.opts.h_max);
        }
        let d0 = (0..n)
            .map(|i| (self.y[i] / self.scale(self.y[i])).abs())
            .fold(0.0, f64::max);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let h0 = h0.min(span);
        let y1: Vec<f64> = (0..n).map(|i| self.y[i] + h0 * self.k1[i]).collect();
        let mut f1 = vec![0.0; n];
        self.field.eval_into(&y1, &mut f1);
        let d2 = (0..n)
            .map(|i| ((f1[i] - self.k1[i]) / self.scale(self.y[i])).abs())
            .fold(0.0, f64::max)
            / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1).min(span).min(self.opts.h_max)
    }

    /// Advances exactly to `t_target`, calling `on_step(t, y)` after every
    /// accepted step.
    pub fn advance_to<C>(&mut self, t_target: f64, mut on_step: C) -> Result<()>
    where
        C: FnMut(f64, &[f64]),
    {
        let n = self.y.len();
        while self.t < t_target {
            let span = t_target - self.t;
            let mut h = match self.h {
                Some(h) => h,
                None => self.initial_step(span),
            };
            h = h.min(self.opts.h_max);
            let last = h >= span * (1.0 - 1e-12);
            if last {
                h = span;
            }
            if !last && (h < STEP_FLOOR || self.t + h == self.t) {
                return Err(Error::Stiffness { time: self.t, step: h });
            }
            if self.steps >= self.opts.max_steps {
                return Err(Error::MaxStepsExceeded {
                    time: self.t,
                    steps: self.steps,
                });
            }

            let [k2, k3, k4, k5, k6, k7, yt] = &mut self.scratch;
            let y = &self.y;
            let k1 = &self.k1;
            for i in 0..n {
                yt[i] = y[i] + h * A21 * k1[i];
            }
            self.field.eval_into(yt, k2);
            for i in 0..n {
                yt[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
            }
            self.field.eval_into(yt, k3);
            for i in 0..n {
                yt[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
            }
            self.field.eval_into(yt, k4);
            for i in 0..n {
                yt[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
            }
            self.field.eval_into(yt, k5);
            for i in 0..n {
                yt[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
            }
            self.field.eval_into(yt, k6);
            for i in 0..n {
                yt[i] = y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
            }
            self.field.eval_into(yt, k7);

            let mut err = 0.0f64;
            for i in 0..n {
                let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let sc = self.opts.abs_tol + self.opts.rel_tol * y[i].abs().max(yt[i].abs());
                err = err.max((e / sc).abs());
            }
            if !err.is_finite() || yt.iter().any(|v| !v.is_finite()) {
                err = f64::INFINITY;
            }

            if err <= 1.0 {
                self.steps += 1;
                self.t = if last { t_target } else { self.t + h };
                std::mem::swap(&mut self.y, yt);
                std::mem::swap(&mut self.k1, k7);
                if let Some(reason) = self.field.domain_violation(&self.y) {
                    return Err(Error::DomainEscape { time: self.t, reason });
                }
                on_step(self.t, &self.y);
                let fac = if err == 0.0 {
                    5.0
                } else {
                    (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                };
                // A clipped final step says nothing about the natural step size.
                let h_next = if last { self.h.unwrap_or(h).max(h) } else { h * fac };
                self.h = Some(h_next.min(self.opts.h_max));
            } else {
                let fac = if err.is_finite() {
                    (0.9 * err.powf(-0.2)).clamp(0.1, 0.9)
                } else {
                    0.1
                };
                let h_new = h * fac;
                if h_new < STEP_FLOOR {
                    return Err(Error::Stiffness {
                        time: self.t,
                        step: h_new,
                    });
                }
                self.h = Some(h_new);
            }
        }
        Ok(())
    }
}

/// Adaptive integration from `t = 0` to `t_end`, recording every accepted step.
pub fn integrate_adaptive<F: VectorField>(
    field: &F,
    x0: &[f64],
    t_end: f64,
    opts: AdaptiveOptions,
) -> Result<Trajectory> {
    if !(t_end > 0.0) {
        return Err(Error::RejectedInput(format!("t_end must be positive, got {t_end}")));
    }
    let mut dp = DormandPrince::new(field, x0, 0.0, opts)?;
    let mut traj = Trajectory::new(0.0, x0.to_vec());
    dp.advance_to(t_end, |t, y| traj.push(t, y.to_vec()))?;
    Ok(traj)
}

/// Adaptive integration reporting the state at each requested time
/// (nonnegative, nondecreasing). Steps land exactly on every output time.
pub fn integrate_adaptive_at<F: VectorField>(
    field: &F,
    x0: &[f64],
    times: &[f64],
    opts: AdaptiveOptions,
) -> Result<Vec<Vec<f64>>> {
    if times.iter().any(|t| !(*t >= 0.0)) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::RejectedInput(
            "output times must be nonnegative and nondecreasing".into(),
        ));
    }
    let mut dp = DormandPrince::new(field, x0, 0.0, opts)?;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        dp.advance_to(t, |_, _| {})?;
        out.push(dp.state().to_vec());
    }
    Ok(out)
}

/// Outcome of a bounded-horizon reachability query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Reached,
    NotReachedWithinHorizon,
}

/// Result of [`reach`]. A negative verdict never speaks past `horizon`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReachReport {
    pub reached: bool,
    pub hit_time: Option<f64>,
    pub hit_state: Option<Vec<f64>>,
    pub horizon: f64,
    pub verdict: Verdict,
    /// Number of samples the predicate was evaluated on.
    pub samples_checked: usize,
    /// Largest time gap between consecutive checked samples; crossings of
    /// the target shorter than this can be missed.
    pub max_sample_gap: f64,
}

impl ReachReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Checks the samples of an orbit, in time order, for membership in a target
/// set up to `horizon`. Samples past the horizon are never consumed.
pub fn try_reach<I, P, E>(samples: I, mut target: P, horizon: f64) -> std::result::Result<ReachReport, E>
where
    I: IntoIterator<Item = (f64, Vec<f64>)>,
    P: FnMut(&[f64]) -> std::result::Result<bool, E>,
    E: From<Error>,
{
    if !(horizon > 0.0) {
        return Err(Error::RejectedInput(format!("horizon must be positive, got {horizon}")).into());
    }
    let mut checked = 0;
    let mut gap = 0.0f64;
    let mut prev: Option<f64> = None;
    for (t, x) in samples {
        if t > horizon {
            break;
        }
        if let Some(p) = prev {
            gap = gap.max(t - p);
        }
        prev = Some(t);
        checked += 1;
        if target(&x)? {
            return Ok(ReachReport {
                reached: true,
                hit_time: Some(t),
                hit_state: Some(x),
                horizon,
                verdict: Verdict::Reached,
                samples_checked: checked,
                max_sample_gap: gap,
            });
        }
    }
    Ok(ReachReport {
        reached: false,
        hit_time: None,
        hit_state: None,
        horizon,
        verdict: Verdict::NotReachedWithinHorizon,
        samples_checked: checked,
        max_sample_gap: gap,
    })
}

/// [`try_reach`] with an infallible predicate.
pub fn reach<I, P>(samples: I, mut target: P, horizon: f64) -> Result<ReachReport>
where
    I: IntoIterator<Item = (f64, Vec<f64>)>,
    P: FnMut(&[f64]) -> bool,
{
    try_reach(samples, |x: &[f64]| Ok::<bool, Error>(target(x)), horizon)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp_field() -> FnField<impl Fn(&[f64], &mut [f64])> {
        FnField::new(1, |x: &[f64], dx: &mut [f64]| dx[0] = x[0])
    }

    fn zero_field(n: usize) -> FnField<impl Fn(&[f64], &mut [f64])> {
        FnField::new(n, |_: &[f64], dx: &mut [f64]| dx.fill(0.0))
    }

    #[test]
    fn fixed_zero_field_is_constant() {
        let tr = integrate_fixed(&zero_field(1), &[1.0], 1.0, 0.1).unwrap();
        assert!(tr.states().iter().all(|s| s[0] == 1.0));
        assert!((tr.last().0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fixed_exponential() {
        let tr = integrate_fixed(&exp_field(), &[1.0], 1.0, 1e-3).unwrap();
        let (t, x) = tr.last();
        assert!((t - 1.0).abs() < 1e-12);
        assert!((x[0] - std::f64::consts::E).abs() < 1e-9);
    }

    #[test]
    fn fixed_partial_last_step() {
        let tr = integrate_fixed(&exp_field(), &[1.0], 1.05, 0.1).unwrap();
        assert_eq!(tr.len(), 12);
        assert_eq!(tr.last().0, 1.05);
        assert!(tr.times().windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn fixed_rejects_bad_parameters() {
        assert!(integrate_fixed(&exp_field(), &[1.0], 1.0, 0.0).is_err());
        assert!(integrate_fixed(&exp_field(), &[1.0], -1.0, 0.1).is_err());
        assert!(integrate_fixed(&exp_field(), &[1.0, 2.0], 1.0, 0.1).is_err());
    }

    struct Positive;
    impl VectorField for Positive {
        fn dim(&self) -> usize {
            1
        }
        fn eval_into(&self, _x: &[f64], dx: &mut [f64]) {
            dx[0] = -1.0;
        }
        fn domain_violation(&self, x: &[f64]) -> Option<String> {
            (x[0] <= 0.0).then(|| format!("x = {}", x[0]))
        }
    }

    #[test]
    fn domain_escape_reports_time() {
        match integrate_fixed(&Positive, &[0.5], 2.0, 0.1) {
            Err(Error::DomainEscape { time, .. }) => assert!((0.5 - 1e-9..=0.6 + 1e-9).contains(&time)),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            integrate_adaptive(&Positive, &[0.5], 2.0, AdaptiveOptions::new(1e-8, 1e-8)),
            Err(Error::DomainEscape { .. })
        ));
    }

    #[test]
    fn adaptive_exponential() {
        let opts = AdaptiveOptions::new(1e-8, 1e-8);
        let tr = integrate_adaptive(&exp_field(), &[1.0], 1.0, opts).unwrap();
        let (t, x) = tr.last();
        assert_eq!(t, 1.0);
        assert!((x[0] - std::f64::consts::E).abs() <= 1e-7 * std::f64::consts::E);
    }

    #[test]
    fn adaptive_zero_field_single_step() {
        let tr = integrate_adaptive(&zero_field(2), &[0.3, 0.7], 5.0, AdaptiveOptions::new(1e-6, 1e-6)).unwrap();
        assert_eq!(tr.len(), 2);
        assert_eq!(tr.last(), (5.0, &[0.3, 0.7][..]));
    }

    #[test]
    fn adaptive_rejects_bad_tolerances() {
        for (r, a) in [(0.0, 1e-6), (1e-6, 0.5), (-1.0, 1e-6)] {
            assert!(integrate_adaptive(&exp_field(), &[1.0], 1.0, AdaptiveOptions::new(r, a)).is_err());
        }
    }

    #[test]
    fn adaptive_detects_blow_up() {
        // x' = x^2 from x = 1 blows up at t = 1.
        let f = FnField::new(1, |x: &[f64], dx: &mut [f64]| dx[0] = x[0] * x[0]);
        let r = integrate_adaptive(&f, &[1.0], 2.0, AdaptiveOptions::new(1e-8, 1e-8));
        assert!(matches!(
            r,
            Err(Error::Stiffness { .. }) | Err(Error::MaxStepsExceeded { .. })
        ));
    }

    #[test]
    fn adaptive_at_hits_requested_times() {
        let times = [0.0, 0.25, 0.5, 0.5, 1.0];
        let out = integrate_adaptive_at(&exp_field(), &[1.0], &times, AdaptiveOptions::reference()).unwrap();
        for (t, x) in times.iter().zip(&out) {
            assert!((x[0] - t.exp()).abs() < 1e-11);
        }
    }

    #[test]
    fn reach_examples() {
        let line = FnField::new(1, |_: &[f64], dx: &mut [f64]| dx[0] = 1.0);
        let r = reach(Rk4Orbit::new(&line, vec![0.0], 0.01), |x| x[0] >= 1.0, 2.0).unwrap();
        assert_eq!(r.verdict, Verdict::Reached);
        assert!((r.hit_time.unwrap() - 1.0).abs() <= 0.01 + 1e-9);

        let still = zero_field(1);
        let r = reach(Rk4Orbit::new(&still, vec![0.0], 0.1), |x| x[0] >= 1.0, 10.0).unwrap();
        assert_eq!(r.verdict, Verdict::NotReachedWithinHorizon);
        assert!(!r.reached && r.hit_time.is_none() && r.hit_state.is_none());
        assert!((r.max_sample_gap - 0.1).abs() < 1e-12);

        let r = reach(Rk4Orbit::new(&still, vec![0.0], 0.1), |x| x[0] <= 0.5, 10.0).unwrap();
        assert_eq!(r.hit_time, Some(0.0));

        assert!(reach(Rk4Orbit::new(&still, vec![0.0], 0.1), |_| true, 0.0).is_err());
    }

    #[test]
    fn reach_propagates_predicate_errors() {
        let still = zero_field(1);
        let r = try_reach(
            Rk4Orbit::new(&still, vec![0.0], 0.1),
            |_x: &[f64]| Err::<bool, Error>(Error::RejectedInput("boom".into())),
            1.0,
        );
        assert!(r.is_err());
    }

    #[test]
    fn trajectory_serialization() {
        let tr = Trajectory::from_parts(vec![0.0, 0.5], vec![vec![1.0, 2.0], vec![3.0, 4.5]]).unwrap();
        let csv = tr.to_csv_string();
        assert!(csv.starts_with("t,x1,x2\n"));
        assert_eq!(Trajectory::read_csv(csv.as_bytes()).unwrap(), tr);
        assert_eq!(Trajectory::from_json(&tr.to_json()).unwrap(), tr);
        assert!(Trajectory::from_json(r#"{"times":[1.0,0.5],"states":[[1],[2]]}"#).is_err());
        assert!(Trajectory::from_parts(vec![0.0], vec![]).is_err());
    }
}
