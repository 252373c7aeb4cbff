mod common;

use common::{chi_square_p, ks_one_sample};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use splitsample::{CumulativeWeight, WeightMode};

/// Strictly increasing knots from 0 and strictly increasing `ln Ω` from an
/// arbitrary root mass.
fn grid() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1usize..12).prop_flat_map(|n| {
        (
            prop::collection::vec(0.01f64..5.0, n),
            prop::collection::vec(0.01f64..8.0, n),
            -5.0f64..5.0,
        )
            .prop_map(|(gaps, rises, root)| {
                let mut knots = vec![0.0];
                let mut log_omega = vec![root];
                for (g, r) in gaps.iter().zip(&rises) {
                    knots.push(knots.last().unwrap() + g);
                    log_omega.push(log_omega.last().unwrap() + r);
                }
                (knots, log_omega)
            })
    })
}

fn bisect(w: &CumulativeWeight, target: f64, hi: f64) -> f64 {
    let (mut a, mut b) = (0.0, hi);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if w.ln_eval(mid) < target {
            a = mid;
        } else {
            b = mid;
        }
    }
    b
}

proptest! {
    #[test]
    fn evaluation_is_monotone((knots, log_omega) in grid(), a in 0.0f64..60.0, b in 0.0f64..60.0, continuous in any::<bool>()) {
        let mode = if continuous { WeightMode::Continuous } else { WeightMode::Discrete };
        let w = CumulativeWeight::piecewise(knots, log_omega.clone(), mode).unwrap();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(w.ln_eval(lo) <= w.ln_eval(hi));
        prop_assert!(w.ln_eval(lo) >= log_omega[0]);
        prop_assert!(w.ln_eval(hi) <= w.ln_sup());
    }

    #[test]
    fn continuous_weight_interpolates_and_inverts((knots, log_omega) in grid(), frac in 0.0f64..1.0) {
        let w = CumulativeWeight::piecewise(knots.clone(), log_omega.clone(), WeightMode::Continuous).unwrap();
        for (m, lw) in knots.iter().zip(&log_omega) {
            prop_assert!((w.ln_eval(*m) - lw).abs() < 1e-12 * lw.abs().max(1.0));
        }
        let top = *knots.last().unwrap();
        let m = frac * top;
        if m > 0.0 {
            let back = w.ln_invert(w.ln_eval(m)).unwrap();
            prop_assert!((back - m).abs() < 1e-9 * top.max(1.0), "{} vs {}", back, m);
            let target = w.ln_eval(m);
            prop_assert!((bisect(&w, target, top) - m).abs() < 1e-9 * top.max(1.0));
        }
        prop_assert!(w.ln_invert(w.ln_sup() + 1.0).is_err());
    }

    #[test]
    fn level_draws_stay_below_the_likelihood((knots, log_omega) in grid(), l in 1e-9f64..80.0, seed in any::<u64>(), continuous in any::<bool>()) {
        let mode = if continuous { WeightMode::Continuous } else { WeightMode::Discrete };
        let w = CumulativeWeight::piecewise(knots.clone(), log_omega, mode).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..50 {
            let m = w.sample_level(l, &mut rng);
            prop_assert!(m >= 0.0 && m < l);
            if !continuous {
                prop_assert!(knots.contains(&m));
            }
        }
    }
}

#[test]
fn discrete_level_index_is_multinomial() {
    let knots = vec![0.0, 1.0, 2.0, 3.0, 4.0];
    let omega: [f64; 5] = [1.0, 3.0, 4.0, 9.0, 20.0];
    let log_omega: Vec<f64> = omega.iter().map(|o| o.ln()).collect();
    let w = CumulativeWeight::piecewise(knots, log_omega, WeightMode::Discrete).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let l = 3.5;
    let mut counts = [0u64; 4];
    for _ in 0..200_000 {
        counts[w.sample_level_index(l, &mut rng).unwrap()] += 1;
    }
    let jumps = [1.0, 2.0, 1.0, 5.0];
    let probs: Vec<f64> = jumps.iter().map(|j| j / 9.0).collect();
    let p = chi_square_p(&counts, &probs);
    assert!(p > 0.001, "p = {p}, counts {counts:?}");
}

#[test]
fn continuous_level_draw_follows_weight() {
    let knots = vec![0.0, 1.0, 2.5];
    let log_omega = vec![0.0, 1.5, 2.0];
    let w = CumulativeWeight::piecewise(knots, log_omega, WeightMode::Continuous).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let l = 2.0;
    let draws: Vec<f64> = (0..200_000).map(|_| w.sample_level(l, &mut rng)).collect();
    let atom = draws.iter().filter(|&&m| m == 0.0).count() as f64 / draws.len() as f64;
    let expected_atom = 1.0 / w.eval(l);
    assert!((atom - expected_atom).abs() < 0.005, "{atom} vs {expected_atom}");
    let mut positive: Vec<f64> = draws.into_iter().filter(|&m| m > 0.0).collect();
    let d = ks_one_sample(&mut positive, |m| (w.eval(m) - 1.0) / (w.eval(l) - 1.0));
    assert!(d < 0.01, "KS distance {d}");
}

#[test]
fn exponential_and_uniform_shapes() {
    let w = CumulativeWeight::exponential(1.0, 10.0).unwrap();
    for m in [0.5, 3.0, 9.0] {
        assert!((w.eval(m) - (m.exp() - 1.0)).abs() < 1e-9 * m.exp());
        assert!((w.invert(w.eval(m)).unwrap() - m).abs() < 1e-12);
    }
    assert_eq!(w.eval(20.0), w.eval(10.0));
    let u = CumulativeWeight::uniform();
    assert!((u.eval(4.2) - 4.2).abs() < 1e-15);
    assert_eq!(u.density(7.0), 1.0);
}
