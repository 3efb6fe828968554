//! Shared fixtures and independent oracles for the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::sync::Arc;

use delta_attrib::casestudy::{PanelDataset, PanelRow};
use delta_attrib::fcm::{Expr, FcmNode, InvertibleFcm};
use delta_attrib::{ChangeInstance, FnMechanism, LinearMechanism, MechanismRef, Player};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseKind {
    Linear,
    Polynomial,
    Nonlinear,
}

/// A random instance together with what the test knows about it.
pub struct Case {
    pub inst: ChangeInstance,
    /// Coefficients when both mechanisms are linear without intercept.
    pub linear: Option<(Vec<f64>, Vec<f64>)>,
    pub unchanged_inputs: Vec<usize>,
    pub mechanism_unchanged: bool,
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn coefficients(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.random_range(-5.0..5.0)).collect()
}

fn linear_mech(beta: Vec<f64>) -> MechanismRef {
    let d = beta.len();
    Arc::new(FnMechanism::new(d, "lin", move |x: &[f64]| {
        beta.iter().zip(x).map(|(b, v)| b * v).sum()
    }))
}

/// Random polynomial with up to six monomials of per-variable degree ≤ 2.
fn poly_mech(rng: &mut ChaCha8Rng, d: usize) -> MechanismRef {
    let terms: Vec<(f64, Vec<i32>)> = (0..rng.random_range(1..=6))
        .map(|_| {
            let c = rng.random_range(-3.0..3.0);
            let e = (0..d).map(|_| rng.random_range(0..=2)).collect();
            (c, e)
        })
        .collect();
    Arc::new(FnMechanism::new(d, "poly", move |x: &[f64]| {
        terms
            .iter()
            .map(|(c, e)| c * e.iter().zip(x).map(|(&k, v)| v.powi(k)).product::<f64>())
            .sum()
    }))
}

fn nonlinear_mech(rng: &mut ChaCha8Rng, d: usize) -> MechanismRef {
    let a = coefficients(rng, d);
    let b = coefficients(rng, d);
    let c: f64 = rng.random_range(-2.0..2.0);
    Arc::new(FnMechanism::new(d, "nonlin", move |x: &[f64]| {
        let lin: f64 = a.iter().zip(x).map(|(a, v)| a * v).sum();
        let prod: f64 = x.iter().take(2).product();
        lin.tanh() * 3.0 + b.iter().zip(x).map(|(b, v)| b * v.sin()).sum::<f64>() + c * prod
    }))
}

/// Random instance of dimension `d`; each input, and the mechanism, is left
/// unchanged with probability `p_unchanged`.
pub fn random_case(rng: &mut ChaCha8Rng, d: usize, kind: CaseKind, p_unchanged: f64) -> Case {
    let x_bg: Vec<f64> = (0..d).map(|_| rng.random_range(-3.0..3.0)).collect();
    let mut x_fg: Vec<f64> = (0..d).map(|_| rng.random_range(-3.0..3.0)).collect();
    let mut unchanged_inputs = Vec::new();
    for j in 0..d {
        if rng.random_bool(p_unchanged) {
            x_fg[j] = x_bg[j];
            unchanged_inputs.push(j);
        }
    }
    let mechanism_unchanged = rng.random_bool(p_unchanged);
    let (f_bg, f_fg, linear) = match kind {
        CaseKind::Linear => {
            let b1 = coefficients(rng, d);
            let b2 = if mechanism_unchanged {
                b1.clone()
            } else {
                coefficients(rng, d)
            };
            let f1 = linear_mech(b1.clone());
            let f2 = if mechanism_unchanged {
                f1.clone()
            } else {
                linear_mech(b2.clone())
            };
            (f1, f2, Some((b1, b2)))
        }
        CaseKind::Polynomial => {
            let f1 = poly_mech(rng, d);
            let f2 = if mechanism_unchanged {
                f1.clone()
            } else {
                poly_mech(rng, d)
            };
            (f1, f2, None)
        }
        CaseKind::Nonlinear => {
            let f1 = nonlinear_mech(rng, d);
            let f2 = if mechanism_unchanged {
                f1.clone()
            } else {
                nonlinear_mech(rng, d)
            };
            (f1, f2, None)
        }
    };
    Case {
        inst: ChangeInstance::new(x_bg, x_fg, f_bg, f_fg).unwrap(),
        linear,
        unchanged_inputs,
        mechanism_unchanged,
    }
}

/// Output with the players in `on` switched to foreground; player `d` is
/// the mechanism.
fn coalition_value(inst: &ChangeInstance, on: &[bool]) -> f64 {
    let d = inst.dim();
    let x: Vec<f64> = (0..d)
        .map(|j| if on[j] { inst.x_fg()[j] } else { inst.x_bg()[j] })
        .collect();
    let f = if on[d] { inst.f_fg() } else { inst.f_bg() };
    f.evaluate(&x).unwrap()
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// Average marginal contribution over all `(d+1)!` switching orders.
pub fn brute_force(inst: &ChangeInstance) -> BTreeMap<Player, f64> {
    let d = inst.dim();
    let perms = permutations(d + 1);
    let mut sums = vec![0.0; d + 1];
    for perm in &perms {
        let mut on = vec![false; d + 1];
        let mut prev = coalition_value(inst, &on);
        for &p in perm {
            on[p] = true;
            let v = coalition_value(inst, &on);
            sums[p] += v - prev;
            prev = v;
        }
    }
    let n = perms.len() as f64;
    let mut out: BTreeMap<Player, f64> = (0..d).map(|j| (Player::Input(j), sums[j] / n)).collect();
    out.insert(Player::Mechanism, sums[d] / n);
    out
}

/// Scale for relative completeness checks.
pub fn scale(inst: &ChangeInstance, credits: &BTreeMap<Player, f64>) -> f64 {
    let y1 = inst.y_bg().unwrap().abs();
    let y2 = inst.y_fg().unwrap().abs();
    let c: f64 = credits.values().map(|c| c.abs()).sum();
    1f64.max(y1).max(y2).max(c)
}

pub const GOLDEN_BETA_BG: [f64; 2] = [0.1, 0.05];
pub const GOLDEN_BETA_FG: [f64; 2] = [0.12, 0.04];

/// Two units over years 1 and 2 with features `edu, weeks`.
pub fn golden_panel() -> PanelDataset {
    let row = |id: &str, year, edu, weeks, wage| PanelRow {
        id: id.into(),
        year,
        features: vec![edu, weeks],
        wage,
    };
    PanelDataset::new(
        vec!["edu".into(), "weeks".into()],
        vec![
            row("A", 1, 12.0, 40.0, 6.0),
            row("A", 2, 12.0, 50.0, 6.5),
            row("B", 1, 10.0, 30.0, 5.0),
            row("B", 2, 11.0, 30.0, 5.2),
        ],
    )
    .unwrap()
}

pub fn golden_mechanisms() -> (LinearMechanism, LinearMechanism) {
    (
        LinearMechanism::new(GOLDEN_BETA_BG.to_vec()),
        LinearMechanism::new(GOLDEN_BETA_FG.to_vec()),
    )
}

/// Per-node parent terms `(parent, weight, exp_scale)`; an `exp_scale` of
/// `Some(s)` contributes `w·exp(s·pa)` instead of `w·pa`.
pub type Terms = Vec<Vec<(usize, f64, Option<f64>)>>;

pub fn random_dag(g: &mut ChaCha8Rng, n: usize) -> (InvertibleFcm, Terms) {
    let mut terms: Terms = Vec::new();
    let mut nodes = Vec::new();
    for i in 0..n {
        let mut t = Vec::new();
        for p in 0..i {
            if p == i - 1 && i == n - 1 || g.random_bool(0.5) {
                let w = g.random_range(-2.0..2.0);
                let s = g.random_bool(0.3).then(|| g.random_range(-0.5..0.5));
                t.push((p, w, s));
            }
        }
        let name = format!("v{i}");
        if t.is_empty() {
            nodes.push(FcmNode::root(name));
        } else {
            let mut mean: Option<Expr> = None;
            for (k, &(_, w, s)) in t.iter().enumerate() {
                let base = match s {
                    Some(s) => (Expr::num(s) * Expr::pa(k)).exp(),
                    None => Expr::pa(k),
                };
                let term = Expr::num(w) * base;
                mean = Some(match mean {
                    Some(m) => m + term,
                    None => term,
                });
            }
            let m = mean.unwrap();
            let parents = t.iter().map(|&(p, _, _)| p).collect();
            nodes.push(FcmNode::new(name, parents, m.clone() + Expr::Noise, Expr::X - m));
        }
        terms.push(t);
    }
    (InvertibleFcm::new(nodes, n - 1).unwrap(), terms)
}

pub fn simulate(terms: &Terms, noise: &[f64]) -> Vec<f64> {
    let mut x: Vec<f64> = Vec::with_capacity(noise.len());
    for (i, t) in terms.iter().enumerate() {
        let m: f64 = t
            .iter()
            .map(|&(p, w, s)| match s {
                Some(s) => w * (s * x[p]).exp(),
                None => w * x[p],
            })
            .sum();
        x.push(m + noise[i]);
    }
    x
}

pub fn ancestors_of_sink(terms: &Terms) -> Vec<bool> {
    let n = terms.len();
    let mut anc = vec![false; n];
    anc[n - 1] = true;
    for i in (0..n).rev() {
        if anc[i] {
            for &(p, _, _) in &terms[i] {
                anc[p] = true;
            }
        }
    }
    anc
}
