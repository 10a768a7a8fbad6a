mod common;

use haar_greedy::basis::dictionary;
use haar_greedy::cli::trial_rng;
use haar_greedy::oracle::{sigma_m_with, Schedule, SolverOptions};
use haar_greedy::{evaluate_atom, lp_norm};

use common::{naive_atom, naive_lp, random_grid, reference_sigma};

#[test]
fn atoms_match_the_tensor_formula() {
    for (d, level) in [(1, 0), (1, 4), (2, 1), (2, 3), (3, 2)] {
        for atom in dictionary(d, level) {
            let fast = evaluate_atom(&atom, level).unwrap();
            assert_eq!(fast.values(), naive_atom(&atom, d, level).as_slice(), "{atom}");
        }
    }
}

#[test]
fn norms_match_the_direct_sum() {
    let mut rng = trial_rng(11, 0);
    for p in [1.25, 1.5, 2.0, 3.0, 4.0] {
        let g = random_grid(&mut rng, 2, 3);
        let want = naive_lp(g.values(), p);
        assert!((lp_norm(&g, p).unwrap() - want).abs() <= 1e-12 * want);
    }
}

#[test]
fn sigma_matches_coordinate_descent() {
    for t in 0..6 {
        let mut rng = trial_rng(5, t);
        let (d, level) = if t % 2 == 0 { (1, 3) } else { (2, 1) };
        let g = random_grid(&mut rng, d, level);
        let atoms = dictionary(d, level);
        for p in [1.25, 1.5, 3.0, 4.0] {
            for m in 1..=3 {
                let got = sigma_m_with(&g, p, m, &SolverOptions::default(), Schedule::Serial).unwrap();
                let want = reference_sigma(&g, &atoms, p, m);
                assert!(
                    (got.sigma - want).abs() <= 1e-6 * want.max(1e-3),
                    "d={d} p={p} m={m}: {} vs {want}",
                    got.sigma
                );
                // The oracle's value can never exceed another feasible point.
                assert!(got.sigma <= want * (1.0 + 1e-9) + 1e-12);
            }
        }
    }
}
