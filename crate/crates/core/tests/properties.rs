use obrs_core::dist::{FiniteDist, MassPair};
use obrs_core::fdiv::{divergence_finite, max_divergence_finite, Generator};
use obrs_core::landscape::{primal_identity_check, twobrs_loss};
use obrs_core::obrs::{acceptance_from_target, refine_pair, solve_c_k_pair, EXACT_EPS};
use obrs_core::oracle::random_instance_up_to;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn instance(seed: u64) -> (FiniteDist, FiniteDist, f64, f64) {
    let inst = random_instance_up_to(32, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
    (inst.p, inst.q, inst.k, inst.m)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn refined_rate_matches_budget(seed in any::<u64>()) {
        let (p, q, k, _) = instance(seed);
        let pair = MassPair::from_finite(&p, &q).unwrap();
        let sol = solve_c_k_pair(&pair, k).unwrap();
        let refined = refine_pair(&pair, &sol.spec()).unwrap();
        prop_assert!((refined.z() - 1.0 / k).abs() <= EXACT_EPS);
        prop_assert!(sol.c_k >= 1.0 - 1e-12);
        // the refined law lies in the ball of radius ln K around the proposal
        let tilde = refined.to_finite().unwrap();
        prop_assert!(max_divergence_finite(&tilde, &q).unwrap() <= k.ln() + 1e-9);
    }

    #[test]
    fn acceptance_round_trips_through_the_refined_law(seed in any::<u64>()) {
        let (p, q, k, _) = instance(seed);
        let pair = MassPair::from_finite(&p, &q).unwrap();
        let refined = refine_pair(&pair, &solve_c_k_pair(&pair, k).unwrap().spec()).unwrap();
        let table = acceptance_from_target(&refined.to_finite().unwrap(), &q, k).unwrap();
        for (a, b) in table.values.iter().zip(refined.acceptance()) {
            prop_assert!((a - b).abs() <= 1e-10, "{} vs {}", a, b);
        }
    }

    #[test]
    fn loss_is_nonincreasing_in_budget(seed in any::<u64>(), t in 0.0f64..1.0) {
        let (p, q, k, m) = instance(seed);
        let pair = MassPair::from_finite(&p, &q).unwrap();
        let k2 = k + t * (m - k);
        for g in [Generator::Kl, Generator::Gan, Generator::ReverseKl] {
            let lo = twobrs_loss(&g, &pair, k).unwrap();
            let hi = twobrs_loss(&g, &pair, k2).unwrap();
            prop_assert!(hi <= lo + 1e-10, "{}: {} > {}", g, hi, lo);
        }
    }

    #[test]
    fn loss_collapses_past_the_ratio_bound(seed in any::<u64>(), extra in 1.0f64..4.0) {
        let (p, q, _, m) = instance(seed);
        for g in Generator::all_primal() {
            let loss = twobrs_loss(&g, &MassPair::from_finite(&p, &q).unwrap(), m * extra).unwrap();
            prop_assert!((loss - g.offset()).abs() <= 1e-10, "{}: {}", g, loss);
        }
    }

    #[test]
    fn loss_agrees_with_the_refined_divergence(seed in any::<u64>()) {
        let (p, q, k, _) = instance(seed);
        for g in [Generator::Kl, Generator::Gan] {
            prop_assert!(primal_identity_check(&g, &p, &q, k).unwrap() <= 1e-10);
        }
    }

    #[test]
    fn unit_budget_is_the_plain_divergence(seed in any::<u64>()) {
        let (p, q, _, _) = instance(seed);
        for g in Generator::all_primal() {
            let plain = divergence_finite(&g, &p, &q).unwrap().value;
            let loss = twobrs_loss(&g, &MassPair::from_finite(&p, &q).unwrap(), 1.0).unwrap();
            prop_assert!((loss - plain).abs() <= 1e-12);
        }
    }
}
