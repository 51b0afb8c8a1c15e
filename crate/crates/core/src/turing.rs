//! Turing machines over the alphabet `0..=9` (0 is blank), the integer
//! encoding of their configurations, and bounded-step halting queries.
//!
//! The head always sits at position 0; a move `s` replaces the tape by the
//! shifted tape `w_i <- w_{i+s}`. A configuration `(q, w)` is encoded as
//! `(y1, y2, q)` with `y1 = w_0 + 10 w_1 + ...` and `y2 = w_{-1} + 10 w_{-2} + ...`.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{ReachReport, Verdict};

/// Alphabet size.
pub const SYMBOLS: u8 = 10;
/// Default halting-window radius.
pub const DEFAULT_EPSILON: f64 = 0.25;

/// `delta(q, s) = (state, symbol, shift)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Transition {
    pub state: u32,
    pub symbol: u8,
    pub shift: i8,
}

/// A machine with states `1..=r`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "MachineDoc", into = "MachineDoc")]
pub struct TuringMachine {
    r: u32,
    q0: u32,
    q_halt: u32,
    /// Indexed by `(q - 1) * 10 + s`.
    table: Vec<Transition>,
}

#[derive(Serialize, Deserialize)]
struct MachineDoc {
    r: u32,
    q0: u32,
    q_halt: u32,
    /// Rows `[state, symbol, new_state, new_symbol, move]`.
    delta: Vec<[i64; 5]>,
}

impl TryFrom<MachineDoc> for TuringMachine {
    type Error = Error;
    fn try_from(d: MachineDoc) -> Result<Self> {
        TuringMachine::new(d.r, d.q0, d.q_halt, &d.delta)
    }
}

impl From<TuringMachine> for MachineDoc {
    fn from(m: TuringMachine) -> Self {
        let mut delta = Vec::new();
        for q in 1..=m.r {
            if q == m.q_halt {
                continue;
            }
            for s in 0..SYMBOLS {
                let t = m.transition(q, s);
                delta.push([q as i64, s as i64, t.state as i64, t.symbol as i64, t.shift as i64]);
            }
        }
        MachineDoc {
            r: m.r,
            q0: m.q0,
            q_halt: m.q_halt,
            delta,
        }
    }
}

impl TuringMachine {
    /// Builds a machine from rows `[state, symbol, new_state, new_symbol, move]`.
    ///
    /// Every `(state, symbol)` with `state != q_halt` needs exactly one row.
    /// Rows for `q_halt` are accepted and ignored: the halting state is fixed.
    pub fn new(r: u32, q0: u32, q_halt: u32, delta: &[[i64; 5]]) -> Result<Self> {
        if r == 0 {
            return Err(Error::RejectedInput("machine needs at least one state".into()));
        }
        for (name, q) in [("q0", q0), ("q_halt", q_halt)] {
            if q == 0 || q > r {
                return Err(Error::RejectedInput(format!("{name} = {q} is outside 1..={r}")));
            }
        }
        let state_ok = |v: i64| v >= 1 && v <= r as i64;
        let symbol_ok = |v: i64| (0..SYMBOLS as i64).contains(&v);
        let mut table: Vec<Option<Transition>> = vec![None; r as usize * SYMBOLS as usize];
        for row in delta {
            let [q, s, nq, ns, mv] = *row;
            if !state_ok(q) || !state_ok(nq) {
                return Err(Error::RejectedInput(format!("row {row:?}: state outside 1..={r}")));
            }
            if !symbol_ok(s) || !symbol_ok(ns) {
                return Err(Error::RejectedInput(format!("row {row:?}: symbol outside 0..=9")));
            }
            if !(-1..=1).contains(&mv) {
                return Err(Error::RejectedInput(format!("row {row:?}: move must be -1, 0 or 1")));
            }
            let idx = (q as usize - 1) * SYMBOLS as usize + s as usize;
            if table[idx].is_some() {
                return Err(Error::RejectedInput(format!("duplicate entry for ({q}, {s})")));
            }
            table[idx] = Some(Transition {
                state: nq as u32,
                symbol: ns as u8,
                shift: mv as i8,
            });
        }
        let mut missing = Vec::new();
        let mut full = Vec::with_capacity(table.len());
        for (idx, t) in table.into_iter().enumerate() {
            let q = idx as u32 / SYMBOLS as u32 + 1;
            let s = (idx % SYMBOLS as usize) as u8;
            if q == q_halt {
                full.push(Transition {
                    state: q,
                    symbol: s,
                    shift: 0,
                });
                continue;
            }
            match t {
                Some(t) => full.push(t),
                None => {
                    missing.push(format!("({q}, {s})"));
                    full.push(Transition {
                        state: q,
                        symbol: s,
                        shift: 0,
                    });
                }
            }
        }
        if !missing.is_empty() {
            return Err(Error::RejectedInput(format!(
                "transition table is missing (state, symbol) pairs: {}",
                missing.join(", ")
            )));
        }
        Ok(TuringMachine {
            r,
            q0,
            q_halt,
            table: full,
        })
    }

    /// Builds a machine from a closure over all non-halting `(state, symbol)`.
    pub fn from_fn<F>(r: u32, q0: u32, q_halt: u32, f: F) -> Result<Self>
    where
        F: Fn(u32, u8) -> (u32, u8, i8),
    {
        let mut rows = Vec::new();
        for q in 1..=r {
            if q == q_halt {
                continue;
            }
            for s in 0..SYMBOLS {
                let (nq, ns, mv) = f(q, s);
                rows.push([q as i64, s as i64, nq as i64, ns as i64, mv as i64]);
            }
        }
        Self::new(r, q0, q_halt, &rows)
    }

    pub fn states(&self) -> u32 {
        self.r
    }

    pub fn q0(&self) -> u32 {
        self.q0
    }

    pub fn q_halt(&self) -> u32 {
        self.q_halt
    }

    /// `delta(q, s)`; panics if `q` or `s` is out of range.
    pub fn transition(&self, q: u32, s: u8) -> Transition {
        assert!(q >= 1 && q <= self.r && s < SYMBOLS, "({q}, {s}) out of range");
        self.table[(q as usize - 1) * SYMBOLS as usize + s as usize]
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("machine serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// State plus tape, stored without trailing blanks.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct TapeConfig {
    pub q: u32,
    /// `w_0, w_1, ...`
    right: Vec<u8>,
    /// `w_{-1}, w_{-2}, ...`
    left: Vec<u8>,
}

fn trim(v: &mut Vec<u8>) {
    while v.last() == Some(&0) {
        v.pop();
    }
}

impl TapeConfig {
    /// A blank tape in state `q`.
    pub fn blank(q: u32) -> Self {
        TapeConfig {
            q,
            right: Vec::new(),
            left: Vec::new(),
        }
    }

    /// `right = [w_0, w_1, ...]`, `left = [w_{-1}, w_{-2}, ...]`.
    pub fn new(q: u32, right: Vec<u8>, left: Vec<u8>) -> Result<Self> {
        if let Some(s) = right.iter().chain(&left).find(|s| **s >= SYMBOLS) {
            return Err(Error::RejectedInput(format!("symbol {s} outside 0..=9")));
        }
        let mut c = TapeConfig { q, right, left };
        trim(&mut c.right);
        trim(&mut c.left);
        Ok(c)
    }

    /// Symbols for positions `-k..=k`, left to right.
    pub fn from_window(q: u32, window: &[u8]) -> Result<Self> {
        if window.len() % 2 == 0 {
            return Err(Error::RejectedInput("window length must be odd".into()));
        }
        let k = window.len() / 2;
        let right = window[k..].to_vec();
        let left = window[..k].iter().rev().copied().collect();
        Self::new(q, right, left)
    }

    /// `w_i`.
    pub fn symbol(&self, i: i64) -> u8 {
        if i >= 0 {
            self.right.get(i as usize).copied().unwrap_or(0)
        } else {
            self.left.get((-i - 1) as usize).copied().unwrap_or(0)
        }
    }

    /// Symbols at positions `-k..=k`.
    pub fn window(&self, k: usize) -> Vec<u8> {
        let k = k as i64;
        (-k..=k).map(|i| self.symbol(i)).collect()
    }

    /// Smallest `k0` with every nonblank symbol inside `-k0..=k0`.
    pub fn k0(&self) -> usize {
        self.right.len().saturating_sub(1).max(self.left.len())
    }

    pub fn right(&self) -> &[u8] {
        &self.right
    }

    pub fn left(&self) -> &[u8] {
        &self.left
    }

    fn shift(&mut self, s: i8) {
        match s {
            1 => {
                let w0 = if self.right.is_empty() { 0 } else { self.right.remove(0) };
                if w0 != 0 || !self.left.is_empty() {
                    self.left.insert(0, w0);
                }
            }
            -1 => {
                let wm1 = if self.left.is_empty() { 0 } else { self.left.remove(0) };
                if wm1 != 0 || !self.right.is_empty() {
                    self.right.insert(0, wm1);
                }
            }
            _ => {}
        }
        trim(&mut self.right);
        trim(&mut self.left);
    }
}

/// Digits with the head cell in brackets, e.g. `12[3]45` for
/// `w_{-2} w_{-1} [w_0] w_1 w_2`. Without brackets the head is on the first
/// digit. The state is not part of the string.
impl fmt::Display for TapeConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in self.left.iter().rev() {
            write!(f, "{s}")?;
        }
        write!(f, "[{}]", self.symbol(0))?;
        for s in self.right.iter().skip(1) {
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

/// Parses a tape string (state set to 1; override `q` afterwards).
impl FromStr for TapeConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let digits = |part: &str| -> Result<Vec<u8>> {
            part.chars()
                .map(|c| {
                    c.to_digit(10)
                        .map(|d| d as u8)
                        .ok_or_else(|| Error::Parse(format!("invalid tape character {c:?} in {s:?}")))
                })
                .collect()
        };
        match (s.find('['), s.find(']')) {
            (None, None) => Self::new(1, digits(s)?, Vec::new()),
            (Some(a), Some(b)) if b == a + 2 => {
                let left: Vec<u8> = digits(&s[..a])?.into_iter().rev().collect();
                let mut right = digits(&s[a + 1..b])?;
                right.extend(digits(&s[b + 1..])?);
                Self::new(1, right, left)
            }
            _ => Err(Error::Parse(format!(
                "tape {s:?} needs exactly one head marker around a single digit, like 12[3]4"
            ))),
        }
    }
}

fn check_state(tm: &TuringMachine, q: u32) -> Result<()> {
    if q == 0 || q > tm.r {
        return Err(Error::RejectedInput(format!("state {q} is outside 1..={}", tm.r)));
    }
    Ok(())
}

/// One application of the global transition map. Halting configurations
/// are fixed.
pub fn tm_step(tm: &TuringMachine, c: &TapeConfig) -> Result<TapeConfig> {
    check_state(tm, c.q)?;
    let mut next = c.clone();
    if c.q == tm.q_halt {
        return Ok(next);
    }
    let t = tm.transition(c.q, c.symbol(0));
    next.q = t.state;
    if next.right.is_empty() {
        next.right.push(t.symbol);
    } else {
        next.right[0] = t.symbol;
    }
    trim(&mut next.right);
    next.shift(t.shift);
    Ok(next)
}

/// Result of a bounded run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RunOutcome {
    /// The machine entered `q_halt` after `steps` transitions.
    Halted {
        config: TapeConfig,
        steps: u64,
    },
    Running {
        config: TapeConfig,
    },
}

impl RunOutcome {
    pub fn config(&self) -> &TapeConfig {
        match self {
            RunOutcome::Halted { config, .. } | RunOutcome::Running { config } => config,
        }
    }

    pub fn halted(&self) -> bool {
        matches!(self, RunOutcome::Halted { .. })
    }
}

/// Runs at most `k` transitions.
pub fn tm_run(tm: &TuringMachine, input: &TapeConfig, k: u64) -> Result<RunOutcome> {
    check_state(tm, input.q)?;
    let mut c = input.clone();
    if c.q == tm.q_halt {
        return Ok(RunOutcome::Halted { config: c, steps: 0 });
    }
    for step in 1..=k {
        c = tm_step(tm, &c)?;
        if c.q == tm.q_halt {
            return Ok(RunOutcome::Halted { config: c, steps: step });
        }
    }
    Ok(RunOutcome::Running { config: c })
}

/// A configuration as a point of `N^3`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EncodedConfig {
    pub y1: BigUint,
    pub y2: BigUint,
    pub q: u32,
}

impl EncodedConfig {
    pub fn new(y1: BigUint, y2: BigUint, q: u32) -> Self {
        EncodedConfig { y1, y2, q }
    }

    /// Floating-point coordinates (lossy above `2^53`).
    pub fn to_point(&self) -> [f64; 3] {
        [
            self.y1.to_f64().unwrap_or(f64::INFINITY),
            self.y2.to_f64().unwrap_or(f64::INFINITY),
            self.q as f64,
        ]
    }

    /// Number of decimal digits needed by the larger of `y1`, `y2`.
    fn digits(&self) -> usize {
        let d = |y: &BigUint| if y.is_zero() { 1 } else { y.to_radix_le(10).len() };
        d(&self.y1).max(d(&self.y2))
    }
}

impl Serialize for EncodedConfig {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("EncodedConfig", 3)?;
        st.serialize_field("y1", &self.y1.to_string())?;
        st.serialize_field("y2", &self.y2.to_string())?;
        st.serialize_field("q", &self.q)?;
        st.end()
    }
}

/// `(y1, y2, q)`.
pub fn encode(c: &TapeConfig) -> EncodedConfig {
    let num = |d: &[u8]| {
        if d.is_empty() {
            BigUint::zero()
        } else {
            BigUint::from_radix_le(d, 10).expect("digits are below 10")
        }
    };
    EncodedConfig {
        y1: num(&c.right),
        y2: num(&c.left),
        q: c.q,
    }
}

fn pow10(k: usize) -> BigUint {
    BigUint::from(10u32).pow(k as u32)
}

/// Inverse of [`encode`] for `y1, y2 < 10^{k0+1}`.
pub fn decode(e: &EncodedConfig, k0: usize) -> Result<TapeConfig> {
    let limit = pow10(k0 + 1);
    if e.y1 >= limit || e.y2 >= limit {
        return Err(Error::RejectedInput(format!(
            "encoded tape exceeds 10^{} (k0 = {k0})",
            k0 + 1
        )));
    }
    let digits = |y: &BigUint| if y.is_zero() { Vec::new() } else { y.to_radix_le(10) };
    TapeConfig::new(e.q, digits(&e.y1), digits(&e.y2))
}

/// Output of [`encoded_step`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EncodedStep {
    pub next: EncodedConfig,
    /// The input was outside the encoded image and was left unchanged.
    pub off_image: bool,
}

/// `encode . tm_step . decode`, extended by the identity off the image
/// (states outside `1..=r`, or tapes needing more than `k0` cells per side).
pub fn encoded_step(tm: &TuringMachine, e: &EncodedConfig, k0: usize) -> EncodedStep {
    let c = if e.q == 0 || e.q > tm.r {
        None
    } else {
        decode(e, k0).ok()
    };
    match c {
        None => EncodedStep {
            next: e.clone(),
            off_image: true,
        },
        Some(c) => EncodedStep {
            next: encode(&tm_step(tm, &c).expect("state checked above")),
            off_image: false,
        },
    }
}

/// The `epsilon`-neighborhood of encoded halting configurations whose tape
/// matches `w_star` on positions `-k..=k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HaltWindow {
    w_star: Vec<u8>,
    epsilon: f64,
}

impl HaltWindow {
    /// `w_star` lists positions `-k..=k` (odd length).
    pub fn new(w_star: Vec<u8>, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 0.5) {
            return Err(Error::RejectedInput(format!(
                "epsilon must lie in (0, 1/2), got {epsilon}"
            )));
        }
        if w_star.len() % 2 == 0 {
            return Err(Error::RejectedInput("w_star must have odd length 2k + 1".into()));
        }
        if let Some(s) = w_star.iter().find(|s| **s >= SYMBOLS) {
            return Err(Error::RejectedInput(format!("symbol {s} outside 0..=9")));
        }
        Ok(HaltWindow { w_star, epsilon })
    }

    /// Parses a tape string such as `0[1]1`; the bracketed cell is position 0
    /// and the string must be centered on it.
    pub fn parse(s: &str, epsilon: f64) -> Result<Self> {
        let c: TapeConfig = s.parse()?;
        let trimmed = s.trim();
        let (before, after) = match (trimmed.find('['), trimmed.find(']')) {
            (Some(a), Some(b)) => (a, trimmed.len() - b - 1),
            _ => (0, trimmed.len().saturating_sub(1)),
        };
        if before != after {
            return Err(Error::Parse(format!(
                "window {s:?} must have as many cells left of the head as right of it"
            )));
        }
        Self::new(c.window(before), epsilon)
    }

    pub fn radius(&self) -> usize {
        self.w_star.len() / 2
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn w_star(&self) -> &[u8] {
        &self.w_star
    }

    /// Exact membership of a lattice point.
    pub fn contains_encoded(&self, tm: &TuringMachine, e: &EncodedConfig, k0: usize) -> bool {
        if e.q != tm.q_halt {
            return false;
        }
        match decode(e, k0) {
            Ok(c) => c.window(self.radius()) == self.w_star,
            Err(_) => false,
        }
    }
}

/// Membership of a real point: within infinity-distance `epsilon` of an
/// encoded halting configuration matching the window.
pub fn halt_window_contains(u: &HaltWindow, tm: &TuringMachine, p: [f64; 3], k0: usize) -> bool {
    if p.iter().any(|v| !v.is_finite()) {
        return false;
    }
    let r = p.map(f64::round);
    let dist = p.iter().zip(&r).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    if !(dist < u.epsilon()) || r.iter().any(|v| *v < 0.0) || r[2] > u32::MAX as f64 {
        return false;
    }
    let big = |v: f64| BigUint::from(v as u128);
    if r[0] >= 2f64.powi(127) || r[1] >= 2f64.powi(127) {
        return false;
    }
    let e = EncodedConfig::new(big(r[0]), big(r[1]), r[2] as u32);
    u.contains_encoded(tm, &e, k0)
}

/// Follows the encoded orbit of `input` for at most `k` steps and reports
/// the first iterate inside the halting window. Times are step indices.
pub fn tm_reach_check(tm: &TuringMachine, input: &TapeConfig, window: &HaltWindow, k: u64) -> Result<ReachReport> {
    check_state(tm, input.q)?;
    let mut e = encode(input);
    let mut checked = 0usize;
    for step in 0..=k {
        let k0 = e.digits();
        checked += 1;
        if window.contains_encoded(tm, &e, k0) {
            let p = e.to_point();
            return Ok(ReachReport {
                reached: true,
                hit_time: Some(step as f64),
                hit_state: Some(p.to_vec()),
                horizon: k as f64,
                verdict: Verdict::Reached,
                samples_checked: checked,
                max_sample_gap: if step == 0 { 0.0 } else { 1.0 },
            });
        }
        if step < k {
            let next = encoded_step(tm, &e, k0).next;
            if next == e {
                // Fixed point (halted with a different window): nothing changes from here.
                break;
            }
            e = next;
        }
    }
    Ok(ReachReport {
        reached: false,
        hit_time: None,
        hit_state: None,
        horizon: k as f64,
        verdict: Verdict::NotReachedWithinHorizon,
        samples_checked: checked,
        max_sample_gap: if k == 0 { 0.0 } else { 1.0 },
    })
}

/// Hand-built machines used in examples and tests.
pub mod machines {
    use super::TuringMachine;

    /// Writes 1 and moves right until it reads a blank; two states.
    /// From a blank tape it halts after one step.
    pub fn unary_incrementer() -> TuringMachine {
        TuringMachine::from_fn(2, 1, 2, |_, s| if s == 0 { (2, 1, 0) } else { (1, s, 1) }).unwrap()
    }

    /// Halts at once and leaves the tape untouched.
    pub fn immediate_halt() -> TuringMachine {
        TuringMachine::from_fn(2, 1, 2, |_, s| (2, s, 0)).unwrap()
    }

    /// Bounces between two states forever without writing.
    pub fn cycler() -> TuringMachine {
        TuringMachine::from_fn(3, 1, 3, |q, s| if q == 1 { (2, s, 1) } else { (1, s, -1) }).unwrap()
    }

    /// Three-state two-symbol busy beaver: 14 steps, six 1s on a blank tape.
    /// Symbols `2..=9` send the machine straight to the halting state.
    pub fn busy_beaver_3() -> TuringMachine {
        TuringMachine::from_fn(4, 1, 4, |q, s| match (q, s) {
            (1, 0) => (2, 1, 1),
            (1, 1) => (4, 1, 1),
            (2, 0) => (3, 0, 1),
            (2, 1) => (2, 1, 1),
            (3, 0) => (3, 1, -1),
            (3, 1) => (1, 1, -1),
            (_, s) => (4, s, 0),
        })
        .unwrap()
    }

    /// Adds one to a decimal number whose least significant digit is under
    /// the head and whose higher digits lie at negative positions.
    pub fn decimal_increment() -> TuringMachine {
        TuringMachine::from_fn(2, 1, 2, |_, s| if s == 9 { (1, 0, -1) } else { (2, s + 1, 0) }).unwrap()
    }
}
