mod common;

use std::sync::Arc;

use common::*;
use padlab::cellmap::CellularMap;
use padlab::complex::{DComplex, Subcomplex};
use padlab::covering::{Covering, H1Epimorphism};
use padlab::homology::{homology, Coeffs};
use proptest::prelude::*;

fn check_cover(x: Arc<DComplex>, p: u64, s: u32, w: &[i64]) -> Result<(), TestCaseError> {
    let Ok(phi) = H1Epimorphism::from_cochain(&x, p, s, w) else { return Ok(()) };
    let n = phi.order();
    let cov = Covering::build(x.clone(), phi.clone()).unwrap();
    prop_assert_eq!(cov.total.euler_characteristic(), n as i64 * x.euler_characteristic());
    prop_assert_eq!(homology(&cov.total, 0, &Coeffs::Z).unwrap().free_rank, 1);
    cov.proj.check().unwrap();
    let deck = cov.deck();
    prop_assert_eq!(deck.then(&cov.proj).unwrap().chain_matrix(1), cov.proj.chain_matrix(1));
    let mut d = CellularMap::identity(cov.total.clone());
    for j in 1..=n {
        d = d.then(&deck).unwrap();
        let fixes_a_vertex = (0..cov.total.num_cells(0)).any(|v| d.vertex_image(v) == v);
        prop_assert_eq!(fixes_a_vertex, j == n);
    }
    let full = Subcomplex::full(&x);
    let mut degrees: Vec<usize> = cov.fiber_components(&full).iter().map(|c| c.degree).collect();
    degrees.sort();
    prop_assert_eq!(degrees, lifted_components(&x, &full, &phi.cochain, n));
    Ok(())
}

#[test]
fn fibers_over_edges_and_loops() {
    let t = Arc::new(DComplex::torus());
    let phi = H1Epimorphism::from_cochain(&t, 2, 2, &[1, 2, 3]).unwrap();
    let cov = Covering::build(t.clone(), phi.clone()).unwrap();
    for e in 0..3 {
        let a = t.closure(1, e);
        let mut got: Vec<usize> = cov.fiber_components(&a).iter().map(|c| c.degree).collect();
        got.sort();
        assert_eq!(got, lifted_components(&t, &a, &phi.cochain, 4), "edge {e}");
    }
}

#[test]
fn moore_cover_is_simply_connected() {
    for p in [2u64, 3, 5] {
        let m = Arc::new(DComplex::moore_word(p as usize));
        let cov = Covering::build(m.clone(), H1Epimorphism::from_cochain(&m, p, 1, &[1]).unwrap()).unwrap();
        assert!(homology(&cov.total, 1, &Coeffs::Z).unwrap().free_rank == 0);
        assert_eq!(betti_rational(&cov.total, 2), p as usize - 1);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn circle_covers(m in 1usize..5, w in prop::collection::vec(-5i64..5, 4), s in 1u32..3) {
        let x = Arc::new(DComplex::circle(m).unwrap());
        check_cover(x, 2, s, &w[..m])?;
    }

    #[test]
    fn torus_and_klein_covers(w in prop::collection::vec(0i64..9, 3), p in prop::sample::select(vec![2u64, 3])) {
        check_cover(Arc::new(DComplex::torus()), p, 1, &w)?;
        check_cover(Arc::new(klein()), p, 1, &w[..2])?;
    }

    #[test]
    fn wedge_of_moore_spaces(a in 0i64..4, b in 0i64..4) {
        check_cover(Arc::new(two_moore(4, 2)), 2, 1, &[a, b])?;
        check_cover(Arc::new(two_moore(4, 2)), 2, 2, &[a, b])?;
    }
}
