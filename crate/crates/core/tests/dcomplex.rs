mod common;

use std::sync::Arc;

use common::*;
use padlab::cellmap::CellularMap;
use padlab::complex::{ComplexBuilder, ComplexError, DComplex, Subcomplex};
use padlab::construct::{barycentric_subdivision, mapping_cylinder, Subdivision};
use padlab::homology::{homology, Coeffs, HomologyEngine};
use proptest::prelude::*;

fn shapes(x: &DComplex, c: &Coeffs) -> Vec<(usize, Vec<String>)> {
    (0..=3)
        .map(|n| {
            let h = homology(x, n, c).unwrap();
            (h.free_rank, h.torsion.iter().map(|t| t.to_string()).collect())
        })
        .collect()
}

#[test]
fn builder_reports_the_offending_cell() {
    let mut b = ComplexBuilder::new();
    let v = b.vertex(None);
    let w = b.vertex(None);
    let e = b.edge(v, w, None);
    b.face(vec![(e, 1)], None);
    assert_eq!(b.build().unwrap_err(), ComplexError::OpenWord { cell: 0, position: 0 });

    let mut b = ComplexBuilder::new();
    b.vertex(None);
    b.edge(0, 3, None);
    assert!(matches!(b.build(), Err(ComplexError::Dangling { dim: 1, cell: 0, face_dim: 0, face: 3 })));

    // a 3-cell on one hemisphere only is not closed
    let mut b = ComplexBuilder::new();
    let v = b.vertex(None);
    let a = b.edge(v, v, None);
    b.face(vec![(a, 1)], None);
    b.face(vec![(a, 1)], None);
    b.solid(vec![(0, 1)], None);
    assert!(matches!(b.build(), Err(ComplexError::BoundaryNotClosed { dim: 3, cell: 0 })));
}

#[test]
fn circles_and_disks() {
    assert!(DComplex::circle(0).is_err());
    for m in 1..6 {
        let c = DComplex::circle(m).unwrap();
        assert_eq!(c.euler_characteristic(), 0);
        assert_eq!(c.cell_counts(), [m, m, 0, 0]);
        let h = HomologyEngine::new(&c).homology(1, &Coeffs::Z).unwrap();
        assert!(h.presentation.is_infinite_cyclic());
        assert!(h.is_cycle(&padlab::chain::chain_from(&DComplex::circle_fundamental_cycle(m))));
    }
    assert_eq!(DComplex::simplex(2).unwrap().euler_characteristic(), 1);
    assert_eq!(DComplex::simplex_boundary(2).unwrap().euler_characteristic(), 0);
}

#[test]
fn skeleta_are_closed() {
    for (name, x) in corpus() {
        for k in 0..=3 {
            let s = Subcomplex::skeleton(&x, k);
            assert!(s.is_closed_in(&x), "{name}");
            assert_eq!(s.num_cells(), (0..=k).map(|d| x.num_cells(d)).sum::<usize>());
        }
        assert_eq!(Subcomplex::skeleton(&x, 3), Subcomplex::full(&x), "{name}");
    }
}

#[test]
fn subdivision_of_the_corpus_keeps_homology() {
    for (name, x) in corpus() {
        let sd = Subdivision::new(x.clone());
        assert!(sd.pi.is_combinatorial(), "{name}");
        assert_eq!(sd.complex.euler_characteristic(), x.euler_characteristic(), "{name}");
        for c in [Coeffs::Z, Coeffs::zp(2, 2), Coeffs::zp(3, 1)] {
            assert_eq!(shapes(&sd.complex, &c), shapes(&x, &c), "{name} over {c}");
        }
    }
}

#[test]
fn solid_cells_stay_balls_under_repeated_subdivision() {
    let x = Arc::new(DComplex::simplex(3).unwrap());
    let (y, pi) = barycentric_subdivision(x.clone(), 2);
    assert!((0..y.num_cells(3)).all(|s| y.ball(s).is_some()));
    assert!(pi.is_combinatorial());
    assert_eq!(shapes(&y, &Coeffs::Z), shapes(&x, &Coeffs::Z));
    // every closed 3-cell of sd² is contractible
    for s in 0..y.num_cells(3) {
        let (c, _) = y.extract(&y.closure(3, s));
        for n in 1..=3 {
            assert!(homology(&c, n, &Coeffs::Z).unwrap().free_rank == 0);
        }
    }
}

#[test]
fn mapping_cylinder_retracts_to_target() {
    for m in 1..4usize {
        for d in [-3i64, 0, 2] {
            let src = Arc::new(DComplex::circle(m).unwrap());
            let tgt = Arc::new(DComplex::circle(1).unwrap());
            let mut n = vec![0; m];
            n[0] = d;
            let f = CellularMap::from_loop_cochain(src, tgt.clone(), 0, &n).unwrap();
            let cyl = mapping_cylinder(&f).unwrap();
            assert_eq!(shapes(&cyl.complex, &Coeffs::Z), shapes(&tgt, &Coeffs::Z));
            assert_eq!(cyl.complex.euler_characteristic(), 0);
            assert!(cyl.bottom.is_closed_in(&cyl.complex) && cyl.top.is_closed_in(&cyl.complex));
            cyl.proj.check().unwrap();
        }
    }
}

/// One vertex, `loops` edges and 2-cells with random words.
fn one_vertex_complex() -> impl Strategy<Value = DComplex> {
    (1usize..4).prop_flat_map(|loops| {
        let letter = (0..loops, prop::bool::ANY).prop_map(|(e, s)| (e, if s { 1i8 } else { -1 }));
        prop::collection::vec(prop::collection::vec(letter, 1..5), 0..3).prop_map(move |words| {
            let mut b = ComplexBuilder::new();
            let v = b.vertex(None);
            for _ in 0..loops {
                b.edge(v, v, None);
            }
            for w in words {
                b.face(w, None);
            }
            b.build().unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn subdivision_preserves_homology(x in one_vertex_complex()) {
        let x = Arc::new(x);
        let sd = Subdivision::new(x.clone());
        sd.pi.check().unwrap();
        for c in [Coeffs::Z, Coeffs::Q, Coeffs::zp(2, 1), Coeffs::zp(2, 2), Coeffs::zp(3, 1)] {
            prop_assert_eq!(shapes(&sd.complex, &c), shapes(&x, &c));
        }
    }

    #[test]
    fn boundary_squares_to_zero(x in one_vertex_complex()) {
        for k in 2..=3 {
            let hi = boundary_dense(&x, k);
            let lo = boundary_dense(&x, k - 1);
            for j in 0..x.num_cells(k) {
                for row in &lo {
                    prop_assert_eq!(row.iter().enumerate().map(|(i, a)| a * hi[i][j]).sum::<i64>(), 0);
                }
            }
        }
    }

    #[test]
    fn json_round_trip(x in one_vertex_complex()) {
        let back = DComplex::from_json(&x.to_json()).unwrap();
        prop_assert_eq!(back, x);
    }
}
