#![allow(clippy::needless_range_loop)]

//! Cross-checks between independent implementations: pricing vs the
//! exhaustive oracle under branching decisions, dominance-mode equivalence,
//! and solver determinism across worker counts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lccp::bnb::{solve, SolverConfig};
use lccp::colgen::EdgeDecision;
use lccp::instance::generate_euclidean;
use lccp::labeling::{price_all, price_from_start, PricingConfig, PricingConstraints};
use lccp::oracle;

#[test]
fn forced_and_forbidden_pricing_matches_oracle() {
    for trial in 0..40u64 {
        let n = 5 + (trial as usize % 2);
        let inst = generate_euclidean(n, 100 + trial, 100.0, 150.0, 400.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(trial);
        let duals: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.5..1.5)).collect();
        let a = rng.gen_range(0..n - 1);
        let b = rng.gen_range(a + 1..n);
        let c = rng.gen_range(0..n - 1);
        let d = rng.gen_range(c + 1..n);
        let decisions = if (a, b) == (c, d) {
            vec![EdgeDecision::force(a, b)]
        } else {
            vec![EdgeDecision::force(a, b), EdgeDecision::forbid(c, d)]
        };
        let mut cons = PricingConstraints::unrestricted();
        for dec in &decisions {
            let e = dec.edge();
            if dec.forced {
                cons.forced_edges.insert(e);
            } else {
                cons.forbidden_edges.insert(e);
            }
        }
        for s in 0..n {
            let expect = oracle::min_redcost(&inst, &duals, s, &decisions).unwrap();
            let mut cs = cons.clone();
            cs.min_start = s;
            let (_, got, _) = price_from_start(s, &duals, &inst, &cs, &PricingConfig::default());
            if expect.is_infinite() {
                assert!(got.is_infinite(), "trial {trial} start {s}: {got} vs empty class");
            } else {
                assert!(
                    (got - expect).abs() <= 1e-6,
                    "trial {trial} start {s}: {got} vs oracle {expect}"
                );
            }
        }
    }
}

#[test]
fn heuristic_dominance_never_beats_exact_minimum() {
    // relaxed dominance may keep fewer labels but can only miss cycles,
    // never invent a lower minimum
    for trial in 0..20u64 {
        let n = 6;
        let inst = generate_euclidean(n, 500 + trial, 100.0, 150.0, 400.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(900 + trial);
        let duals: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.5..1.5)).collect();
        let cons = PricingConstraints::unrestricted();
        let exact = PricingConfig::default();
        let heur = PricingConfig {
            heuristic_dominance: true,
            ..PricingConfig::default()
        };
        let (_, m_exact, s_exact) = price_all(&duals, &inst, &cons, &exact, None);
        let (_, m_heur, s_heur) = price_all(&duals, &inst, &cons, &heur, None);
        let lo = m_exact.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = m_heur.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(hi >= lo - 1e-9, "trial {trial}: heuristic {hi} below exact {lo}");
        assert!(s_heur.labels_generated <= s_exact.labels_generated);
    }
}

#[test]
fn solve_deterministic_across_worker_counts() {
    for trial in 0..10u64 {
        let inst = generate_euclidean(9, 800 + trial, 100.0, 150.0, 400.0).unwrap();
        let mut parts = Vec::new();
        for workers in [1usize, 2, 4] {
            let cfg = SolverConfig {
                workers,
                ..SolverConfig::default()
            };
            let (part, _, _) = solve(&inst, &cfg).unwrap();
            parts.push(part);
        }
        let cycles0: Vec<Vec<usize>> = parts[0].cycles.iter().map(|c| c.nodes.clone()).collect();
        for p in &parts[1..] {
            let cycles: Vec<Vec<usize>> = p.cycles.iter().map(|c| c.nodes.clone()).collect();
            assert_eq!(cycles, cycles0, "trial {trial}: worker count changed the solution");
        }
    }
}

#[test]
fn metric_closure_never_worsens_optimum() {
    use lccp::instance::metric_closure;
    for trial in 0..20u64 {
        let n = 6;
        let mut rng = ChaCha8Rng::seed_from_u64(1300 + trial);
        let mut travel = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in (i + 1)..n {
                let t = rng.gen_range(1.0..100.0);
                travel[i][j] = t;
                travel[j][i] = t;
            }
        }
        let crit: Vec<f64> = (0..n).map(|_| rng.gen_range(80.0..300.0)).collect();
        let inst = lccp::instance::Instance::new(travel, crit, false).unwrap();
        let closed = metric_closure(&inst);
        let direct = oracle::optimal_partition(&inst).unwrap();
        let shortcut = oracle::optimal_partition(&closed).unwrap();
        assert!(shortcut <= direct, "trial {trial}: closure raised the optimum");
    }
}
