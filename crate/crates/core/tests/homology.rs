mod common;

use common::*;
use num_traits::ToPrimitive;
use padlab::homology::{homology, AbelianPresentation, Coeffs, HomologyEngine};
use padlab::matrix::Int;

fn order(h: &AbelianPresentation) -> Option<u64> {
    if h.free_rank > 0 {
        return None;
    }
    Some(h.torsion.iter().map(|t| t.to_u64().unwrap()).product())
}

fn torsion(h: &AbelianPresentation) -> Vec<i64> {
    h.torsion.iter().map(|t| t.to_i64().unwrap()).collect()
}

#[test]
fn rational_rank_matches_bareiss() {
    for (name, x) in corpus() {
        for n in 0..=3 {
            let h = homology(&x, n, &Coeffs::Q).unwrap();
            assert!(h.torsion.is_empty(), "{name}: torsion over Q");
            assert_eq!(h.free_rank, betti_rational(&x, n), "{name} H_{n}(Q)");
            let z = homology(&x, n, &Coeffs::Z).unwrap();
            assert_eq!(z.free_rank, h.free_rank, "{name} H_{n}(Z) rank");
        }
    }
}

#[test]
fn mod_p_dimension_matches_elimination() {
    for (name, x) in corpus() {
        for p in [2i64, 3, 5] {
            for n in 0..=3 {
                let h = homology(&x, n, &Coeffs::zp(p as u64, 1)).unwrap();
                let want = (p as u64).pow(dim_mod_prime(&x, n, p) as u32);
                assert_eq!(order(&h), Some(want), "{name} H_{n}(Z/{p})");
            }
        }
    }
}

#[test]
fn integral_groups_predict_every_finite_coefficient() {
    for (name, x) in corpus() {
        let z: Vec<_> = (0..=3).map(|n| homology(&x, n, &Coeffs::Z).unwrap()).collect();
        for m in [2i64, 3, 4, 6, 9] {
            for n in 0..=3 {
                let below = if n == 0 { Vec::new() } else { torsion(&z[n - 1]) };
                let want = uct_order(z[n].free_rank, &torsion(&z[n]), &below, m);
                let h = homology(&x, n, &Coeffs::Zmod(Int::from(m))).unwrap();
                assert_eq!(order(&h), Some(want), "{name} H_{n}(Z/{m}) vs universal coefficients");
                if let Some(brute) = brute_homology_order(&x, n, m) {
                    assert_eq!(brute, want, "{name} H_{n}(Z/{m}) by enumeration");
                }
            }
        }
    }
}

#[test]
fn basis_cycles_are_cycles() {
    for (name, x) in corpus() {
        let eng = HomologyEngine::new(&x);
        for n in 0..=3 {
            for c in [Coeffs::Z, Coeffs::zp(2, 2)] {
                let h = eng.homology(n, &c).unwrap();
                for j in 0..h.presentation.num_generators() {
                    assert!(h.is_cycle(&h.generator(j)), "{name} H_{n}({c}) generator {j}");
                }
            }
        }
    }
}
