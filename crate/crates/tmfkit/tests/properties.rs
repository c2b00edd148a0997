//! Property tests for scalar arithmetic, rewriting and the functor algebra.

use std::sync::{Arc, OnceLock};

use proptest::prelude::*;

use tmfkit::catalog::{build, Case, CatalogEntry};
use tmfkit::cover::{functor_a, functor_b, functor_c, make_cover};
use tmfkit::gradedmod::GradedMatrix;
use tmfkit::ncalgebra::{Algebra, Poly};
use tmfkit::scalars::{Gauss, Scalar};
use tmfkit::tmf::{reduce, Tmf, TrivialKind};

fn entries() -> &'static Vec<CatalogEntry> {
    static E: OnceLock<Vec<CatalogEntry>> = OnceLock::new();
    E.get_or_init(|| {
        let mut v = vec![
            build(Case::C, None).unwrap(),
            build(Case::H, None).unwrap(),
            build(Case::CommutativeA1, None).unwrap(),
        ];
        for n in 2..=4 {
            v.push(build(Case::G, Some(n)).unwrap());
        }
        for n in 2..=3 {
            v.push(build(Case::B, Some(n)).unwrap());
        }
        for n in [3, 5, 7] {
            v.push(build(Case::DOdd, Some(n)).unwrap());
        }
        v
    })
}

fn families() -> &'static Vec<Tmf> {
    static F: OnceLock<Vec<Tmf>> = OnceLock::new();
    F.get_or_init(|| entries().iter().flat_map(|e| e.families.iter().map(|f| f.tmf.clone())).collect())
}

fn scalar() -> impl Strategy<Value = Scalar> {
    let term = (-9i64..=9, 1i64..=4, -3i64..=3, any::<bool>()).prop_map(|(num, den, k, im)| {
        let c = Scalar::from_ratio(num, den).mul(&Scalar::t_pow(k));
        if im {
            c.mul(&Scalar::i())
        } else {
            c
        }
    });
    (prop::collection::vec(term, 1..=3), prop::option::of(-3i64..=3)).prop_map(|(ts, pole)| {
        let s = ts.iter().fold(Scalar::zero(), |a, b| a.add(b));
        match pole {
            Some(c) => s.div(&Scalar::t().add(&Scalar::from_i64(c))).unwrap(),
            None => s,
        }
    })
}

fn nonzero_scalar() -> impl Strategy<Value = Scalar> {
    scalar().prop_filter("nonzero", |s| !s.is_zero())
}

fn poly(alg: &Arc<Algebra>) -> impl Strategy<Value = Poly> {
    let alg = alg.clone();
    let n = alg.ngens();
    prop::collection::vec((prop::collection::vec(0u32..=2, n), scalar()), 0..=3).prop_map(move |terms| {
        terms.into_iter().fold(Poly::zero(&alg), |acc, (m, c)| acc.add(&Poly::monomial(&alg, m, c)))
    })
}

fn algebra_and_triple() -> impl Strategy<Value = (Poly, Poly, Poly)> {
    (0..entries().len()).prop_flat_map(|i| {
        let a = entries()[i].algebra().clone();
        (poly(&a), poly(&a), poly(&a))
    })
}

/// A catalog family plus injected trivial summands, given as `(shift, f-first)`.
fn padded() -> impl Strategy<Value = (usize, Vec<(i64, bool)>)> {
    (0..families().len(), prop::collection::vec((-3i64..=8, any::<bool>()), 0..=3))
}

fn with_trivials(i: usize, triv: &[(i64, bool)]) -> Tmf {
    let base = &families()[i];
    triv.iter().fold(base.clone(), |acc, (s, ff)| {
        let kind = if *ff { TrivialKind::FFirst } else { TrivialKind::UnitFirst };
        acc.direct_sum(&Tmf::trivial(&base.ctx, &[*s], kind)).unwrap()
    })
}

/// Reverse the generator order on both sides, so summands are interleaved.
fn scramble(t: &Tmf, c: &Scalar) -> Tmf {
    let alg = &t.ctx.algebra;
    let perm = |shifts: &[i64]| -> GradedMatrix {
        let n = shifts.len();
        let mut rows = vec![vec![Poly::zero(alg); n]; n];
        for (k, row) in rows.iter_mut().enumerate() {
            row[n - 1 - k] = Poly::constant(alg, c.clone());
        }
        let target: Vec<i64> = (0..n).map(|k| shifts[n - 1 - k]).collect();
        GradedMatrix::new(alg, shifts.to_vec(), target, rows).unwrap()
    };
    t.conjugate(&perm(t.f_shifts()), &perm(t.g_shifts())).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 100, ..ProptestConfig::default() })]

    #[test]
    fn field_axioms(a in scalar(), b in scalar(), c in scalar()) {
        prop_assert_eq!(a.add(&b), b.add(&a));
        prop_assert_eq!(a.mul(&b), b.mul(&a));
        prop_assert_eq!(a.add(&b).add(&c), a.add(&b.add(&c)));
        prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
        prop_assert_eq!(a.mul(&b.add(&c)), a.mul(&b).add(&a.mul(&c)));
        prop_assert_eq!(a.sub(&a), Scalar::zero());
        if !a.is_zero() {
            prop_assert_eq!(a.mul(&a.inv().unwrap()), Scalar::one());
        }
    }

    #[test]
    fn scalar_print_parse_round_trip(a in scalar()) {
        let s = a.to_string();
        let back = Scalar::parse(&s).unwrap();
        prop_assert_eq!(&back, &a);
        prop_assert_eq!(back.to_string(), s);
    }

    #[test]
    fn evaluation_is_a_homomorphism(a in scalar(), b in scalar(), x in -50i64..=50, y in -50i64..=50) {
        let t0 = Gauss::from_ints(x, y);
        if let (Ok(ea), Ok(eb)) = (a.evaluate(&t0), b.evaluate(&t0)) {
            prop_assert_eq!(a.mul(&b).evaluate(&t0).unwrap(), ea.mul(&eb));
            prop_assert_eq!(a.add(&b).evaluate(&t0).unwrap(), ea.add(&eb));
        }
    }

    #[test]
    fn square_root_of_square(a in nonzero_scalar()) {
        let r = a.mul(&a).try_sqrt().unwrap();
        prop_assert!(r == a || r == a.neg());
    }

    #[test]
    fn multiplication_is_associative((p, q, r) in algebra_and_triple()) {
        prop_assert_eq!(p.mul(&q).mul(&r), p.mul(&q.mul(&r)));
        prop_assert_eq!(p.mul(&q.add(&r)), p.mul(&q).add(&p.mul(&r)));
    }

    #[test]
    fn poly_print_parse_round_trip((p, _, _) in algebra_and_triple()) {
        let back = Poly::parse(p.algebra(), &p.to_string()).unwrap();
        prop_assert_eq!(back, p);
    }

    #[test]
    fn t_is_an_involution((i, triv) in padded()) {
        let t = with_trivials(i, &triv);
        let tt = t.t_functor().unwrap().t_functor().unwrap();
        prop_assert_eq!(&tt, &t);
        prop_assert_eq!(format!("{:?}", tt.phi.entries()), format!("{:?}", t.phi.entries()));
    }

    #[test]
    fn verify_is_preserved((i, triv) in padded(), n in -4i64..=4) {
        let t = with_trivials(i, &triv);
        prop_assert!(t.verify().pass);
        prop_assert!(t.shift(n).verify().pass);
        prop_assert!(t.tw_functor().verify().pass);
        prop_assert!(t.tw_inverse().verify().pass);
        prop_assert!(t.t_functor().unwrap().verify().pass);
        prop_assert!(t.direct_sum(&t.t_functor().unwrap()).unwrap().verify().pass);
        prop_assert_eq!(t.tw_functor().tw_inverse(), t);
    }

    #[test]
    fn reduce_strips_exactly_the_injected_trivials((i, triv) in padded(), c in nonzero_scalar()) {
        let base = &families()[i];
        let t = scramble(&with_trivials(i, &triv), &c);
        prop_assert!(t.verify().pass);
        let (r, counts) = reduce(&t);
        prop_assert_eq!(counts.total(), triv.len());
        prop_assert_eq!(counts.f_first, triv.iter().filter(|x| x.1).count());
        prop_assert!(r.verify().pass);
        prop_assert!(r.is_reduced());
        prop_assert!(r.probably_isomorphic(base, 8, 1).is_iso());
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn a_inverts_b((i, triv) in padded()) {
        let t = with_trivials(i, &triv);
        let cc = make_cover(&t.ctx, "z").unwrap();
        let m = functor_b(&cc, &t).unwrap();
        prop_assert_eq!(functor_a(&cc, &m).unwrap(), t);
    }

    #[test]
    fn cover_functor_verifies((i, triv) in padded()) {
        let t = with_trivials(i, &triv);
        let cc = make_cover(&t.ctx, "z").unwrap();
        prop_assert!(functor_c(&cc, &t).unwrap().verify().pass);
    }
}
