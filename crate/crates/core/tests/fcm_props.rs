mod common;

use common::{ancestors_of_sink, random_dag, rng, simulate};
use delta_attrib::attribution::{fine_attrib_exact, SamplingConfig};
use delta_attrib::fcm::{fcm_attrib, recover_noise, Expr, FcmNode, InvertibleFcm};
use delta_attrib::{ChangeInstance, FnMechanism, Player};
use proptest::prelude::*;
use rand::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn noise_attribution_is_complete_with_exact_dummies(seed in any::<u64>(), n in 1usize..=6) {
        let mut g = rng(seed);
        let (fcm, terms) = random_dag(&mut g, n);
        let n_bg: Vec<f64> = (0..n).map(|_| g.random_range(-2.0..2.0)).collect();
        let n_fg: Vec<f64> = n_bg.iter().map(|&v| if g.random_bool(0.3) { v } else { g.random_range(-2.0..2.0) }).collect();
        let x_bg = simulate(&terms, &n_bg);
        let x_fg = simulate(&terms, &n_fg);

        let r = fcm_attrib(&fcm, &x_bg, &x_fg, None).unwrap();
        let dy = x_fg[n - 1] - x_bg[n - 1];
        let scale = 1f64.max(x_bg[n - 1].abs()).max(x_fg[n - 1].abs()).max(r.credits.values().map(|c| c.abs()).sum());
        prop_assert!((r.total() - dy).abs() <= 1e-9 * scale, "total {} vs {}", r.total(), dy);

        let rec_bg = recover_noise(&fcm, &x_bg).unwrap();
        let rec_fg = recover_noise(&fcm, &x_fg).unwrap();
        let anc = ancestors_of_sink(&terms);
        for i in 0..n {
            if rec_bg[i] == rec_fg[i] || !anc[i] {
                prop_assert_eq!(r.credit(Player::NodeNoise(i)), 0.0, "node {}", i);
            }
        }
    }

    #[test]
    fn recovered_noise_round_trips(seed in any::<u64>(), n in 1usize..=6) {
        let mut g = rng(seed);
        let (fcm, terms) = random_dag(&mut g, n);
        let noise: Vec<f64> = (0..n).map(|_| g.random_range(-2.0..2.0)).collect();
        let x = simulate(&terms, &noise);
        let rec = recover_noise(&fcm, &x).unwrap();
        for (a, b) in rec.iter().zip(&noise) {
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + x.iter().map(|v| v.abs()).fold(0.0, f64::max)));
        }
    }

    #[test]
    fn root_inputs_reduce_to_fixed_mechanism_attribution(seed in any::<u64>(), d in 1usize..=4) {
        let mut g = rng(seed);
        let w: Vec<f64> = (0..d).map(|_| g.random_range(-2.0..2.0)).collect();
        let mut nodes: Vec<FcmNode> = (0..d).map(|j| FcmNode::root(format!("x{j}"))).collect();
        // y = Σ wⱼ·xⱼ + x₀·x_{d−1} + N
        let mut m = Expr::pa(d - 1) * Expr::pa(0);
        for (j, &wj) in w.iter().enumerate() {
            m = m + Expr::num(wj) * Expr::pa(j);
        }
        nodes.push(FcmNode::new("y", (0..d).collect(), m.clone() + Expr::Noise, Expr::X - m));
        let fcm = InvertibleFcm::new(nodes, d).unwrap();

        let wf = w.clone();
        let f = FnMechanism::new(d, "f", move |x: &[f64]| {
            x[d - 1] * x[0] + wf.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
        })
        .into_ref();
        let x1: Vec<f64> = (0..d).map(|_| g.random_range(-2.0..2.0)).collect();
        let x2: Vec<f64> = (0..d).map(|_| g.random_range(-2.0..2.0)).collect();
        let mut o1 = x1.clone();
        o1.push(f.evaluate(&x1).unwrap());
        let mut o2 = x2.clone();
        o2.push(f.evaluate(&x2).unwrap());

        let a = fcm_attrib(&fcm, &o1, &o2, None).unwrap();
        let b = fine_attrib_exact(&ChangeInstance::with_fixed_mechanism(x1, x2, f).unwrap()).unwrap();
        prop_assert_eq!(b.credit(Player::Mechanism), 0.0);
        for j in 0..d {
            prop_assert!((a.credit(Player::NodeNoise(j)) - b.credit(Player::Input(j))).abs() <= 1e-9);
        }
        prop_assert!(a.credit(Player::NodeNoise(d)).abs() <= 1e-9);
    }
}

fn chain() -> InvertibleFcm {
    InvertibleFcm::new(vec![FcmNode::root("x"), FcmNode::additive("y", vec![0], &[1.0])], 1).unwrap()
}

#[test]
fn chain_fixture() {
    // N_x: 0 -> 1, N_y: 0 -> 3
    let r = fcm_attrib(&chain(), &[0.0, 0.0], &[1.0, 4.0], None).unwrap();
    assert_eq!(r.credit(Player::NodeNoise(0)), 1.0);
    assert_eq!(r.credit(Player::NodeNoise(1)), 3.0);
    assert_eq!(r.delta_y, 4.0);
}

#[test]
fn sampled_fallback_converges_to_exact() {
    let mut g = rng(3);
    let (fcm, terms) = random_dag(&mut g, 6);
    let nb: Vec<f64> = (0..6).map(|_| g.random_range(-2.0..2.0)).collect();
    let nf: Vec<f64> = (0..6).map(|_| g.random_range(-2.0..2.0)).collect();
    let (xb, xf) = (simulate(&terms, &nb), simulate(&terms, &nf));
    let exact = fcm_attrib(&fcm, &xb, &xf, None).unwrap();
    let cfg = SamplingConfig::new(4000, 1).unwrap();
    let sampled = delta_attrib::fcm::fcm_attrib_with_limit(&fcm, &xb, &xf, 2, Some(&cfg)).unwrap();
    assert!((sampled.total() - exact.total()).abs() < 1e-9);
    let se = sampled.stderr.clone().unwrap();
    for (p, c) in &exact.credits {
        assert!((sampled.credit(*p) - c).abs() <= 5.0 * se[p] + 1e-12, "{p}");
    }
}

#[test]
fn over_limit_without_budget_is_an_error() {
    let mut g = rng(4);
    let (fcm, terms) = random_dag(&mut g, 4);
    let x = simulate(&terms, &[0.0; 4]);
    let err = delta_attrib::fcm::fcm_attrib_with_limit(&fcm, &x, &x, 3, None).unwrap_err();
    assert!(matches!(err, delta_attrib::Error::OverExactLimit { .. }));
}
