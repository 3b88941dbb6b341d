use std::sync::Arc;

use kisinlab::building::{lattice_to_point, phi_point, tree_d1, tree_d2, BuildingPoint};
use kisinlab::field::{Code, FieldCtx, FieldElem};
use kisinlab::kisin::{components, enumerate_admissible};
use kisinlab::latmod::{
    d1d2, hermite_form, mat_det, mat_inv, mat_mul, mat_phi, phi_image, rel_phi_matrix, rel_position, Lattice, Mat2,
};
use kisinlab::oracle::ball_enumerate;
use kisinlab::phimod::{maximize_gamma, transform, NormalForm, PhiModule, VParams};
use kisinlab::raynaud::{lattice_intersection, lattice_sum, twisted_dual};
use kisinlab::series::TruncatedSeries;
use proptest::prelude::*;

const FIELDS: [(u32, u32); 6] = [(2, 1), (3, 1), (5, 1), (7, 1), (2, 3), (3, 2)];

fn field() -> impl Strategy<Value = Arc<FieldCtx>> {
    (0..FIELDS.len()).prop_map(|i| FieldCtx::new(FIELDS[i].0, FIELDS[i].1).unwrap())
}

fn odd_field() -> impl Strategy<Value = Arc<FieldCtx>> {
    (1..FIELDS.len())
        .prop_filter("odd p", |i| FIELDS[*i].0 > 2)
        .prop_map(|i| FieldCtx::new(FIELDS[i].0, FIELDS[i].1).unwrap())
}

fn code(ctx: &Arc<FieldCtx>, raw: u32) -> Code {
    (raw % ctx.size()) as Code
}

/// Exact polynomial with exponents in `lo..lo + raw.len()`.
fn poly(ctx: &Arc<FieldCtx>, lo: i64, raw: &[u32]) -> TruncatedSeries {
    let terms: Vec<(i64, Code)> = raw
        .iter()
        .enumerate()
        .map(|(i, &r)| (lo + i as i64, code(ctx, r)))
        .collect();
    TruncatedSeries::from_terms(ctx, &terms, None)
}

fn lattice(ctx: &Arc<FieldCtx>, m: i64, n: i64, raw: &[u32]) -> Lattice {
    Lattice::new(m, n, &poly(ctx, n - 2, raw)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn field_axioms(ctx in field(), a in any::<u32>(), b in any::<u32>(), c in any::<u32>()) {
        let (a, b, c) = (code(&ctx, a), code(&ctx, b), code(&ctx, c));
        prop_assert_eq!(ctx.mul(ctx.mul(a, b), c), ctx.mul(a, ctx.mul(b, c)));
        prop_assert_eq!(ctx.add(ctx.add(a, b), c), ctx.add(a, ctx.add(b, c)));
        prop_assert_eq!(ctx.mul(a, ctx.add(b, c)), ctx.add(ctx.mul(a, b), ctx.mul(a, c)));
        prop_assert_eq!(ctx.sub(ctx.add(a, b), b), a);
        if a != 0 {
            prop_assert_eq!(ctx.mul(a, ctx.inv(a)), 1);
        }
        prop_assert_eq!(ctx.frob(ctx.mul(a, b)), ctx.mul(ctx.frob(a), ctx.frob(b)));
        prop_assert_eq!(ctx.frob(ctx.add(a, b)), ctx.add(ctx.frob(a), ctx.frob(b)));
        let mut x = a;
        for _ in 0..ctx.k() {
            x = ctx.frob(x);
        }
        prop_assert_eq!(x, a);
    }

    #[test]
    fn valuation_laws(ctx in field(), la in -3i64..4, lb in -3i64..4,
                      ra in prop::collection::vec(any::<u32>(), 1..6), rb in prop::collection::vec(any::<u32>(), 1..6)) {
        let a = poly(&ctx, la, &ra);
        let b = poly(&ctx, lb, &rb);
        let p = ctx.p() as i64;
        match (a.valuation(), b.valuation()) {
            (Some(va), Some(vb)) => {
                prop_assert_eq!((&a * &b).valuation(), Some(va + vb));
                let s = (&a + &b).valuation();
                if va != vb {
                    prop_assert_eq!(s, Some(va.min(vb)));
                } else if let Some(vs) = s {
                    prop_assert!(vs >= va);
                }
                prop_assert_eq!(a.phi().valuation(), Some(p * va));
            }
            _ => prop_assert!((&a * &b).is_zero()),
        }
        prop_assert_eq!((&a * &b).phi(), &a.phi() * &b.phi());
        prop_assert_eq!((&a + &b).phi(), &a.phi() + &b.phi());
    }

    #[test]
    fn inverse_round_trip(ctx in field(), lo in -2i64..3, raw in prop::collection::vec(any::<u32>(), 1..6), prec in 4i64..12) {
        let a = poly(&ctx, lo, &raw).truncate(lo + prec);
        prop_assume!(a.valuation().is_some());
        let inv = a.inv().unwrap();
        let one = &a * &inv;
        let n = one.prec().unwrap();
        prop_assert!(n > 0);
        prop_assert_eq!(one.exact_below(n).unwrap(), TruncatedSeries::one(&ctx));
    }

    #[test]
    fn relative_position_swaps(ctx in field(), m1 in -2i64..4, n1 in -2i64..4, m2 in -2i64..4, n2 in -2i64..4,
                               r1 in prop::collection::vec(any::<u32>(), 0..5), r2 in prop::collection::vec(any::<u32>(), 0..5)) {
        let a = lattice(&ctx, m1, n1, &r1);
        let b = lattice(&ctx, m2, n2, &r2);
        let ab = rel_position(&a, &b);
        let ba = rel_position(&b, &a);
        prop_assert_eq!((ba.a, ba.b), (-ab.b, -ab.a));
        prop_assert_eq!(ab.a + ab.b, b.y() - a.y());
    }

    #[test]
    fn hermite_form_is_canonical(ctx in field(), m in -2i64..4, n in -2i64..4, r in prop::collection::vec(any::<u32>(), 0..5),
                                 c in prop::collection::vec(any::<u32>(), 4), unit in 1u32..100) {
        // Right multiplication by an element of GL_2(F[[u]]) keeps the lattice.
        let l = lattice(&ctx, m, n, &r);
        let g = [
            [TruncatedSeries::monomial(&ctx, code(&ctx, unit).max(1), 0), poly(&ctx, 0, &c[..2])],
            [poly(&ctx, 1, &c[2..]), TruncatedSeries::one(&ctx)],
        ];
        let basis = mat_mul(&l.basis(), &g);
        prop_assert_eq!(hermite_form(&basis).unwrap(), l);
    }

    #[test]
    fn phi_image_commutes_with_canonical_form(ctx in odd_field(), m in -2i64..4, n in -2i64..4,
                                              r in prop::collection::vec(any::<u32>(), 0..4), c in prop::collection::vec(any::<u32>(), 2)) {
        let a: Mat2 = [
            [TruncatedSeries::u_pow(&ctx, 1), TruncatedSeries::one(&ctx)],
            [TruncatedSeries::zero(&ctx), poly(&ctx, 0, &[1, 2])],
        ];
        let l = lattice(&ctx, m, n, &r);
        let g = [
            [TruncatedSeries::one(&ctx), poly(&ctx, 0, &c)],
            [TruncatedSeries::zero(&ctx), TruncatedSeries::one(&ctx)],
        ];
        let x = mat_mul(&l.basis(), &g);
        prop_assert_eq!(phi_image(&a, &hermite_form(&x).unwrap()).unwrap(), hermite_form(&mat_mul(&a, &mat_phi(&x))).unwrap());
    }

    #[test]
    fn relative_matrix_transforms(ctx in odd_field(), m in -2i64..4, n in -2i64..4,
                                  r in prop::collection::vec(any::<u32>(), 0..4), c in prop::collection::vec(any::<u32>(), 3)) {
        let a: Mat2 = [
            [TruncatedSeries::zero(&ctx), TruncatedSeries::u_pow(&ctx, 1)],
            [TruncatedSeries::one(&ctx), poly(&ctx, 0, &[0, 1])],
        ];
        let l = lattice(&ctx, m, n, &r);
        let b = rel_phi_matrix(&a, &l);
        let cm = [
            [TruncatedSeries::one(&ctx), poly(&ctx, 0, &c[..2])],
            [TruncatedSeries::zero(&ctx), TruncatedSeries::monomial(&ctx, code(&ctx, c[2]).max(1), 0)],
        ];
        let b2 = transform(&PhiModule::new(b.clone()).unwrap(), &cm).unwrap();
        let direct = rel_phi_matrix(&a, &hermite_form(&mat_mul(&l.basis(), &cm)).unwrap());
        let lc = mat_mul(&l.basis(), &cm);
        let by_basis = mat_mul(&mat_inv(&lc).unwrap(), &mat_mul(&a, &mat_phi(&lc)));
        prop_assert_eq!(b2.matrix(), &by_basis);
        prop_assert_eq!(mat_det(b2.matrix()).valuation(), mat_det(&b).valuation());
        prop_assert_eq!(mat_det(&direct).valuation(), mat_det(&b).valuation());
    }

    #[test]
    fn tree_distance_is_a_metric(ctx in field(), pts in prop::collection::vec((-3i64..4, prop::collection::vec(any::<u32>(), 0..4)), 3)) {
        let p: Vec<BuildingPoint> = pts.iter().map(|(x, r)| {
            let q = poly(&ctx, 0, r);
            BuildingPoint::new(kisinlab::building::q(*x), kisinlab::building::q(0), &q).unwrap()
        }).collect();
        prop_assert_eq!(tree_d1(&p[0], &p[1]), tree_d1(&p[1], &p[0]));
        prop_assert!(tree_d1(&p[0], &p[2]) <= tree_d1(&p[0], &p[1]) + tree_d1(&p[1], &p[2]));
        prop_assert_eq!(tree_d1(&p[0], &p[0]), kisinlab::building::q(0));
    }

    #[test]
    fn sum_and_intersection_bound_both(ctx in field(), m1 in -2i64..4, n1 in -2i64..4, m2 in -2i64..4, n2 in -2i64..4,
                                       r1 in prop::collection::vec(any::<u32>(), 0..5), r2 in prop::collection::vec(any::<u32>(), 0..5)) {
        let a = lattice(&ctx, m1, n1, &r1);
        let b = lattice(&ctx, m2, n2, &r2);
        let s = lattice_sum(&a, &b).unwrap();
        let i = lattice_intersection(&a, &b).unwrap();
        prop_assert!(s.contains(&a) && s.contains(&b));
        prop_assert!(a.contains(&i) && b.contains(&i));
        prop_assert_eq!(twisted_dual(&twisted_dual(&a).unwrap()).unwrap(), a.clone());
        if a.contains(&b) {
            prop_assert!(twisted_dual(&b).unwrap().contains(&twisted_dual(&a).unwrap()));
            prop_assert_eq!(s, a);
        }
    }

    #[test]
    fn generated_balls_have_tree_counts(ctx in field(), m in -2i64..3, n in -2i64..3, r in prop::collection::vec(any::<u32>(), 0..3),
                                        radius in 0i64..4, fix in any::<bool>()) {
        prop_assume!(ctx.size() <= 9 || radius <= 2);
        let c = lattice(&ctx, m, n, &r);
        let y = fix.then(|| c.y() + 1);
        // The count is asserted inside; a success means it matched.
        let ball = ball_enumerate(&c, radius, y, 1 << 22).unwrap();
        if let Some(y) = y {
            prop_assert!(ball.iter().all(|l| l.y() == y));
        }
    }

    #[test]
    fn maximize_gamma_is_monotone(ctx in odd_field(), s in 0i64..6, t in 0i64..6, a in 1u32..50, b in 1u32..50,
                                  lo in 0i64..5, raw in prop::collection::vec(any::<u32>(), 1..5)) {
        let p = ctx.p() as i64;
        let (s, t) = (s % (p - 1), t % (p - 1));
        let a = FieldElem::from_code(&ctx, code(&ctx, a).max(1));
        let b = FieldElem::from_code(&ctx, code(&ctx, b).max(1));
        let gamma = poly(&ctx, lo, &raw);
        let (nf, steps) = maximize_gamma(&a, s, &b, t, &gamma).unwrap();
        if let (Some(first), Some(v0)) = (steps.first(), gamma.valuation()) {
            prop_assert!(first.m >= v0);
        }
        for w in steps.windows(2) {
            prop_assert!(w[1].m > w[0].m);
        }
        if let NormalForm::NonSplit { gamma: g, .. } = &nf {
            let v = g.valuation().unwrap();
            prop_assert!(v * (p - 1) <= p * t - s);
            prop_assert!(v >= gamma.valuation().unwrap());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn phi_action_matches_matrix_distances(ctx in odd_field(), kind in 0usize..3, s in 0i64..20,
                                           m in -3i64..4, n in -3i64..4, r in prop::collection::vec(any::<u32>(), 0..5)) {
        let p = ctx.p() as i64;
        let one = FieldElem::one(&ctx);
        let nf = match kind {
            0 => {
                let s = s % (p * p - 1);
                prop_assume!(s % (p + 1) != 0);
                NormalForm::simple(&one, s).unwrap()
            }
            1 => NormalForm::split(&one, s % (p - 1), &one, (s / 2) % (p - 1)).unwrap(),
            _ => NormalForm::triangular(&one, s % (p - 1), &one, s % (p - 1), &TruncatedSeries::one(&ctx)).unwrap(),
        };
        let l = lattice(&ctx, m, n, &r);
        let img = phi_image(&nf.matrix(), &l).unwrap();
        let (d1, d2) = d1d2(&l, &img);
        let pt = lattice_to_point(&l);
        let moved = phi_point(&nf.action(), &pt).unwrap();
        prop_assert_eq!(kisinlab::building::q(d1), tree_d1(&pt, &moved));
        prop_assert_eq!(kisinlab::building::q(d2), tree_d2(&pt, &moved));
    }

    #[test]
    fn admissible_sets_share_y_and_labels_partition(ctx in odd_field(), kind in 0usize..3, s in 0i64..20,
                                                    e in 1i64..7, r1 in 0i64..7, r2 in 0i64..7) {
        let p = ctx.p() as i64;
        prop_assume!(ctx.size() <= 9);
        prop_assume!(r2 <= r1 && r1 <= e);
        let one = FieldElem::one(&ctx);
        let nf = match kind {
            0 => {
                let s = s % (p * p - 1);
                prop_assume!(s % (p + 1) != 0);
                NormalForm::simple(&one, s).unwrap()
            }
            1 => NormalForm::split(&one, s % (p - 1), &one, (s / 3) % (p - 1)).unwrap(),
            _ => NormalForm::triangular(&one, 0, &one, 1 % (p - 1), &TruncatedSeries::one(&ctx)).unwrap(),
        };
        let v = VParams::new(e, r1, r2).unwrap();
        let set = enumerate_admissible(&nf, &v).unwrap();
        if let Some(y) = set.m_v {
            prop_assert!(set.points.iter().all(|l| l.y() == y));
        } else {
            prop_assert!(set.is_empty());
        }
        if !nf.is_simple() && !set.is_empty() {
            let rep = components(&set).unwrap();
            prop_assert_eq!(rep.labels.len(), set.len());
            prop_assert_eq!(rep.x0.len() + rep.labels.iter().filter(|x| x.1 != kisinlab::kisin::ComponentLabel::X0).count(), set.len());
            prop_assert!(rep.constants.len() <= 2);
        }
    }
}
