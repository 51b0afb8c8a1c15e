#![allow(dead_code)]

use rand::Rng;
use rdtm::game::{MatrixGame, SimplexPoint};
use rdtm::glv::{EmbeddingMap, GlvSystem};
use rdtm::ode::{integrate_adaptive, AdaptiveOptions, VectorField};
use rdtm::poly::{Polynomial, PolynomialField};

pub fn random_game<R: Rng>(rng: &mut R, m: usize) -> MatrixGame {
    let rows = (0..m)
        .map(|_| (0..m).map(|_| rng.gen_range(-1.0..=1.0)).collect())
        .collect();
    MatrixGame::from_rows(rows).unwrap()
}

/// Interior point with coordinates bounded away from the faces.
pub fn random_interior<R: Rng>(rng: &mut R, m: usize) -> SimplexPoint {
    let w: Vec<f64> = (0..m).map(|_| rng.gen_range(0.05..1.0)).collect();
    let s: f64 = w.iter().sum();
    SimplexPoint::new(w.into_iter().map(|v| v / s).collect()).unwrap()
}

pub fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    rng.gen_range(lo.ln()..=hi.ln()).exp()
}

pub fn inf_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max)
}

/// `Df(x) v` by central differences along `v`.
pub fn fd_push(map: &EmbeddingMap, x: &[f64], v: &[f64]) -> Vec<f64> {
    let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if nv == 0.0 {
        return vec![0.0; map.simplex_dim()];
    }
    let xmin = x.iter().cloned().fold(f64::INFINITY, f64::min);
    let h = 1e-5 * xmin / nv;
    let plus: Vec<f64> = x.iter().zip(v).map(|(a, b)| a + h * b).collect();
    let minus: Vec<f64> = x.iter().zip(v).map(|(a, b)| a - h * b).collect();
    let fp = map.forward(&plus).unwrap();
    let fm = map.forward(&minus).unwrap();
    fp.iter().zip(&fm).map(|(a, b)| (a - b) / (2.0 * h)).collect()
}

/// A field that leaves its domain outside `[1e-3, 1e3]^n`.
struct Boxed<'a>(&'a GlvSystem);

impl VectorField for Boxed<'_> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn eval_into(&self, x: &[f64], dx: &mut [f64]) {
        self.0.eval_into(x, dx)
    }

    fn domain_violation(&self, x: &[f64]) -> Option<String> {
        x.iter()
            .any(|v| !(*v > 1e-3 && *v < 1e3))
            .then(|| "left the box".to_string())
    }
}

/// A random GLV system whose orbit from `x0` stays inside `[1e-3, 1e3]^n`
/// up to `t_end`. Systems that leave the box are redrawn.
pub fn tame_glv<R: Rng>(rng: &mut R, t_end: f64) -> (GlvSystem, Vec<f64>) {
    loop {
        let n = rng.gen_range(1..=3);
        let m_mon = rng.gen_range(1..=if n == 1 { 4 } else { 5 });
        let sys = rdtm::presets::random_glv(rng, n, m_mon, 0.5);
        let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..2.0)).collect();
        let boxed = Boxed(&sys);
        let ok = match integrate_adaptive(&boxed, &x0, t_end, AdaptiveOptions::new(1e-8, 1e-10)) {
            Ok(tr) => tr.states().iter().all(|s| s.iter().all(|v| *v > 1e-3 && *v < 1e3)),
            Err(_) => false,
        };
        if ok {
            return (sys, x0);
        }
    }
}

/// `phi(x) = S(x) x` with `S(x)` antisymmetric and linear in `x`, in three
/// variables. Orthogonal to `x` everywhere.
pub fn cubic_orthogonal_field(c: [f64; 3]) -> PolynomialField {
    let n = 3;
    let x = |i: usize| Polynomial::variable(n, i);
    let k = |v: f64| Polynomial::constant(n, v);
    // S = [[0, s01, s02], [-s01, 0, s12], [-s02, -s12, 0]]
    let s01 = x(2).scale(c[0]).add(&k(1.0)).unwrap();
    let s02 = x(1).scale(c[1]).add(&k(-0.5)).unwrap();
    let s12 = x(0).scale(c[2]).add(&k(0.7)).unwrap();
    let row = |a: &Polynomial, ia: usize, b: &Polynomial, ib: usize| {
        a.mul(&x(ia)).unwrap().add(&b.mul(&x(ib)).unwrap()).unwrap()
    };
    let p0 = row(&s01, 1, &s02, 2);
    let p1 = row(&s01.scale(-1.0), 0, &s12, 2);
    let p2 = row(&s02.scale(-1.0), 0, &s12.scale(-1.0), 1);
    PolynomialField::new(vec![p0, p1, p2]).unwrap()
}
