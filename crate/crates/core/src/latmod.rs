//! Lattices in `F((u))^2`, Hermite normal form and relative position.
//!
//! A lattice is stored in Hermite form `(m, n, r)`: it is spanned by the columns
//! `(u^m, 0)` and `(r, u^n)` with `r` an exact polynomial reduced mod `u^m`.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::field::{Code, FieldCtx};
use crate::series::TruncatedSeries;
use smallvec::{smallvec, SmallVec};

/// 2x2 matrix of series, row-major: `m[row][col]`.
pub type Mat2 = [[TruncatedSeries; 2]; 2];

pub fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let e = |i: usize, j: usize| &(&a[i][0] * &b[0][j]) + &(&a[i][1] * &b[1][j]);
    [[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]]
}

pub fn mat_phi(a: &Mat2) -> Mat2 {
    [[a[0][0].phi(), a[0][1].phi()], [a[1][0].phi(), a[1][1].phi()]]
}

pub fn mat_det(a: &Mat2) -> TruncatedSeries {
    &(&a[0][0] * &a[1][1]) - &(&a[0][1] * &a[1][0])
}

/// Entry of smallest valuation; `None` if every entry vanishes.
pub fn mat_min_valuation(a: &Mat2) -> Option<i64> {
    a.iter().flatten().filter_map(|x| x.valuation()).min()
}

/// Applies `M ↦ M v` to a column vector.
pub fn mat_vec(a: &Mat2, v: &[TruncatedSeries; 2]) -> [TruncatedSeries; 2] {
    [
        &(&a[0][0] * &v[0]) + &(&a[0][1] * &v[1]),
        &(&a[1][0] * &v[0]) + &(&a[1][1] * &v[1]),
    ]
}

/// Inverse of a 2x2 matrix. Exact monomial determinants give an exact inverse.
pub fn mat_inv(a: &Mat2) -> Result<Mat2> {
    let d = mat_det(a);
    if d.certified_valuation()?.is_none() {
        return Err(Error::Singular);
    }
    let di = d.inv()?;
    Ok([
        [&a[1][1] * &di, &(-&a[0][1]) * &di],
        [&(-&a[1][0]) * &di, &a[0][0] * &di],
    ])
}

/// Parses `"a,b;c,d"` into `[[a,b],[c,d]]`.
pub fn parse_matrix(ctx: &Arc<FieldCtx>, s: &str) -> Result<Mat2> {
    let rows: Vec<&str> = s.split(';').collect();
    if rows.len() != 2 {
        return Err(Error::Parse(format!("matrix '{s}' needs two rows separated by ';'")));
    }
    let mut out = Vec::new();
    for row in rows {
        let cells: Vec<&str> = row.split(',').collect();
        if cells.len() != 2 {
            return Err(Error::Parse(format!("matrix row '{row}' needs two entries")));
        }
        for c in cells {
            out.push(TruncatedSeries::parse(ctx, c)?);
        }
    }
    let mut it = out.into_iter();
    let mut next = || it.next().unwrap();
    Ok([[next(), next()], [next(), next()]])
}

pub fn format_matrix(a: &Mat2) -> String {
    format!("{},{};{},{}", a[0][0], a[0][1], a[1][0], a[1][1])
}

/// Elementary divisors `a >= b` of one lattice relative to another.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ElemDiv {
    pub a: i64,
    pub b: i64,
}

impl ElemDiv {
    /// `a - b`.
    pub fn d1(&self) -> i64 {
        self.a - self.b
    }
    /// `a + b`.
    pub fn d2(&self) -> i64 {
        self.a + self.b
    }
}

/// A lattice in Hermite form.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Lattice {
    m: i64,
    n: i64,
    r: TruncatedSeries,
}

impl Lattice {
    /// Builds `(m, n, r)`, reducing `r` modulo `u^m`.
    pub fn new(m: i64, n: i64, r: &TruncatedSeries) -> Result<Self> {
        Ok(Lattice {
            m,
            n,
            r: r.exact_below(m)?,
        })
    }

    /// The standard lattice `F[[u]]^2`.
    pub fn standard(ctx: &Arc<FieldCtx>) -> Self {
        Lattice {
            m: 0,
            n: 0,
            r: TruncatedSeries::zero(ctx),
        }
    }

    pub fn m(&self) -> i64 {
        self.m
    }
    pub fn n(&self) -> i64 {
        self.n
    }
    pub fn r(&self) -> &TruncatedSeries {
        &self.r
    }
    pub fn ctx(&self) -> &Arc<FieldCtx> {
        self.r.ctx()
    }
    /// `m - n`.
    pub fn x(&self) -> i64 {
        self.m - self.n
    }
    /// `m + n`.
    pub fn y(&self) -> i64 {
        self.m + self.n
    }
    /// Branch parameter `q = r u^{-n}`, defined modulo `u^x`.
    pub fn q(&self) -> TruncatedSeries {
        self.r.shift(-self.n)
    }

    /// Columns `(u^m, 0)` and `(r, u^n)`.
    pub fn basis(&self) -> Mat2 {
        let ctx = self.ctx();
        [
            [TruncatedSeries::u_pow(ctx, self.m), self.r.clone()],
            [TruncatedSeries::zero(ctx), TruncatedSeries::u_pow(ctx, self.n)],
        ]
    }

    /// Exact inverse of [`Lattice::basis`].
    pub fn basis_inverse(&self) -> Mat2 {
        let ctx = self.ctx();
        [
            [TruncatedSeries::u_pow(ctx, -self.m), (-&self.r).shift(-self.m - self.n)],
            [TruncatedSeries::zero(ctx), TruncatedSeries::u_pow(ctx, -self.n)],
        ]
    }

    /// True if `other ⊆ self`.
    pub fn contains(&self, other: &Lattice) -> bool {
        rel_position(self, other).b >= 0
    }

    /// Parses `lat(m,n,r)`.
    pub fn parse(ctx: &Arc<FieldCtx>, s: &str) -> Result<Self> {
        let t = s.trim();
        let inner = t
            .strip_prefix("lat(")
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(|| Error::Parse(format!("lattice literal '{s}' must look like lat(m,n,r)")))?;
        let parts: Vec<&str> = inner.splitn(3, ',').collect();
        if parts.len() != 3 {
            return Err(Error::Parse(format!("lattice literal '{s}' needs three fields")));
        }
        let num = |x: &str| {
            x.trim()
                .parse::<i64>()
                .map_err(|_| Error::Parse(format!("bad integer '{x}'")))
        };
        let r = TruncatedSeries::parse(ctx, parts[2])?;
        Lattice::new(num(parts[0])?, num(parts[1])?, &r)
    }

    /// Reads `{"m":int,"n":int,"r":"series"}`.
    pub fn from_json(ctx: &Arc<FieldCtx>, v: &serde_json::Value) -> Result<Self> {
        let bad = || Error::Parse(format!("bad lattice JSON {v}"));
        let m = v.get("m").and_then(|x| x.as_i64()).ok_or_else(bad)?;
        let n = v.get("n").and_then(|x| x.as_i64()).ok_or_else(bad)?;
        let r = v.get("r").and_then(|x| x.as_str()).ok_or_else(bad)?;
        Lattice::new(m, n, &TruncatedSeries::parse(ctx, r)?)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({"m": self.m, "n": self.n, "r": self.r.to_string()})
    }
}

impl fmt::Display for Lattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "lat({},{},{})", self.m, self.n, self.r)
    }
}

impl fmt::Debug for Lattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl Serialize for Lattice {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

/// Orders by `x`, then `y`, then the branch parameter `q`.
impl Ord for Lattice {
    fn cmp(&self, o: &Self) -> Ordering {
        self.x()
            .cmp(&o.x())
            .then(self.y().cmp(&o.y()))
            .then_with(|| self.q().cmp(&o.q()))
    }
}

impl PartialOrd for Lattice {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// Hermite form of the lattice spanned by the columns of `basis`.
pub fn hermite_form(basis: &Mat2) -> Result<Lattice> {
    let det = mat_det(basis);
    let vdet = det.certified_valuation()?.ok_or(Error::Singular)?;
    let v1 = basis[1][0].valuation();
    let v2 = basis[1][1].valuation();
    let pivot = match (v1, v2) {
        (Some(a), Some(b)) => {
            if a <= b {
                0
            } else {
                1
            }
        }
        (Some(_), None) => 0,
        (None, Some(_)) => 1,
        (None, None) => return Err(Error::Singular),
    };
    let lower = &basis[1][pivot];
    let upper = &basis[0][pivot];
    let n = lower.valuation().unwrap();
    let m = vdet - n;
    let ctx = lower.ctx();
    let r = match upper.valuation() {
        None => {
            if let Some(p) = upper.prec() {
                if p < m {
                    return Err(Error::InsufficientPrecision {
                        needed: m,
                        available: p,
                    });
                }
            }
            TruncatedSeries::zero(ctx)
        }
        Some(v1) if v1 >= m => TruncatedSeries::zero(ctx),
        Some(v1) => {
            let unit = lower.shift(-n);
            let w = unit.inv_rel(m - v1)?;
            let prod = upper * &w;
            prod.exact_below(m)?
        }
    };
    Ok(Lattice { m, n, r })
}

/// Elementary divisors of `B` relative to `A`.
pub fn rel_position(a: &Lattice, b: &Lattice) -> ElemDiv {
    let c = mat_mul(&a.basis_inverse(), &b.basis());
    let vdet = b.y() - a.y();
    let low = mat_min_valuation(&c).expect("lattice basis is invertible");
    ElemDiv { a: vdet - low, b: low }
}

/// Matrix of `Φ` on the basis of `L`: `L^{-1} A φ(L)`.
pub fn rel_phi_matrix(phi: &Mat2, l: &Lattice) -> Mat2 {
    let lb = l.basis();
    let aphi = mat_mul(phi, &mat_phi(&lb));
    mat_mul(&l.basis_inverse(), &aphi)
}

/// Hermite form of `⟨Φ(L)⟩`.
pub fn phi_image(phi: &Mat2, l: &Lattice) -> Result<Lattice> {
    hermite_form(&mat_mul(phi, &mat_phi(&l.basis())))
}

/// Elementary divisors of `⟨Φ(L)⟩` relative to `L`, read off the relative matrix.
/// `vdet` is the valuation of `det A`.
///
/// The entries of `L^{-1} A φ(L)` are expanded by hand for the Hermite basis
/// `[[u^m, r], [0, u^n]]`, which needs four products instead of sixteen. Exact
/// inputs take a scratch-buffer path without precision bookkeeping.
pub fn phi_divisors(phi: &Mat2, vdet: i64, l: &Lattice) -> Result<ElemDiv> {
    let p = l.ctx().p() as i64;
    let total = vdet + (p - 1) * l.y();
    let low = if phi.iter().flatten().all(|x| x.is_exact()) {
        exact_low(phi, l, p)
    } else {
        series_low(phi, l, p)?
    };
    match low {
        Some(low) => Ok(ElemDiv { a: total - low, b: low }),
        None => Err(Error::Singular),
    }
}

fn series_low(phi: &Mat2, l: &Lattice, p: i64) -> Result<Option<i64>> {
    let (m, n) = (l.m, l.n);
    let [[a00, a01], [a10, a11]] = phi;
    let rr = l.r.phi();
    let lower = &(a10 * &rr) + &a11.shift(p * n);
    let upper = &(a00 * &rr) + &a01.shift(p * n);
    let entries = [
        (a00 - &(&l.r * a10).shift(-n)).shift(p * m - m),
        (&upper - &(&l.r * &lower).shift(-n)).shift(-m),
        a10.shift(p * m - n),
        lower.shift(-n),
    ];
    // An entry that is O(u^N) only bounds the minimum from below.
    let low = entries.iter().filter_map(|x| x.valuation()).min();
    for x in entries.iter().filter(|x| x.is_zero()) {
        if let Some(b) = x.prec() {
            if low.is_none_or(|l| l >= b) {
                return Err(Error::InsufficientPrecision {
                    needed: b + 1,
                    available: b,
                });
            }
        }
    }
    Ok(low)
}

type PolyBuf = SmallVec<[Code; 64]>;

/// Dense exact Laurent polynomial; zero coefficients allowed anywhere.
struct Poly {
    ord: i64,
    c: PolyBuf,
}

impl Poly {
    fn of(s: &TruncatedSeries) -> Poly {
        let (ord, c) = s.raw();
        Poly {
            ord,
            c: PolyBuf::from_slice(c),
        }
    }

    fn val(&self) -> Option<i64> {
        self.c.iter().position(|&x| x != 0).map(|i| self.ord + i as i64)
    }

    fn phi(&self, p: i64) -> Poly {
        if self.c.is_empty() {
            return Poly {
                ord: 0,
                c: PolyBuf::new(),
            };
        }
        let mut c: PolyBuf = smallvec![0; (self.c.len() - 1) * p as usize + 1];
        for (i, &x) in self.c.iter().enumerate() {
            c[i * p as usize] = x;
        }
        Poly { ord: self.ord * p, c }
    }

    fn mul(&self, o: &Poly, ctx: &FieldCtx) -> Poly {
        if self.c.is_empty() || o.c.is_empty() {
            return Poly {
                ord: 0,
                c: PolyBuf::new(),
            };
        }
        let mut c: PolyBuf = smallvec![0; self.c.len() + o.c.len() - 1];
        for (i, &x) in self.c.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in o.c.iter().enumerate() {
                if y != 0 {
                    c[i + j] = ctx.add(c[i + j], ctx.mul(x, y));
                }
            }
        }
        Poly {
            ord: self.ord + o.ord,
            c,
        }
    }

    /// `self ± u^k o`.
    fn combine(&self, o: &Poly, k: i64, negate: bool, ctx: &FieldCtx) -> Poly {
        if o.c.is_empty() {
            return Poly {
                ord: self.ord,
                c: self.c.clone(),
            };
        }
        let oo = o.ord + k;
        if self.c.is_empty() {
            let c = o.c.iter().map(|&x| if negate { ctx.neg(x) } else { x }).collect();
            return Poly { ord: oo, c };
        }
        let lo = self.ord.min(oo);
        let hi = (self.ord + self.c.len() as i64).max(oo + o.c.len() as i64);
        let mut c: PolyBuf = smallvec![0; (hi - lo) as usize];
        for (i, &x) in self.c.iter().enumerate() {
            c[(self.ord - lo) as usize + i] = x;
        }
        for (i, &x) in o.c.iter().enumerate() {
            let j = (oo - lo) as usize + i;
            let y = if negate { ctx.neg(x) } else { x };
            c[j] = ctx.add(c[j], y);
        }
        Poly { ord: lo, c }
    }
}

fn exact_low(phi: &Mat2, l: &Lattice, p: i64) -> Option<i64> {
    let ctx = l.ctx().as_ref();
    let (m, n) = (l.m, l.n);
    let [[a00, a01], [a10, a11]] = phi;
    let (a00, a01, a10, a11) = (Poly::of(a00), Poly::of(a01), Poly::of(a10), Poly::of(a11));
    let r = Poly::of(&l.r);
    let rr = r.phi(p);
    let lower = a10.mul(&rr, ctx).combine(&a11, p * n, false, ctx);
    let upper = a00.mul(&rr, ctx).combine(&a01, p * n, false, ctx);
    let vals = [
        a00.combine(&r.mul(&a10, ctx), -n, true, ctx)
            .val()
            .map(|v| v + p * m - m),
        upper.combine(&r.mul(&lower, ctx), -n, true, ctx).val().map(|v| v - m),
        a10.val().map(|v| v + p * m - n),
        lower.val().map(|v| v - n),
    ];
    vals.into_iter().flatten().min()
}

/// `(a - b, a + b)` of `B` relative to `A`.
pub fn d1d2(a: &Lattice, b: &Lattice) -> (i64, i64) {
    let e = rel_position(a, b);
    (e.d1(), e.d2())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f3() -> Arc<FieldCtx> {
        FieldCtx::new(3, 1).unwrap()
    }

    fn s(ctx: &Arc<FieldCtx>, t: &str) -> TruncatedSeries {
        TruncatedSeries::parse(ctx, t).unwrap()
    }

    #[test]
    fn hermite_example() {
        let c = f3();
        let b = parse_matrix(&c, "u,1;0,u^2").unwrap();
        let l = hermite_form(&b).unwrap();
        assert_eq!((l.m(), l.n(), l.r().to_string()), (1, 2, "1".to_string()));
        let b2 = parse_matrix(&c, "u^2,1+u;0,u").unwrap();
        let l2 = hermite_form(&b2).unwrap();
        assert_eq!((l2.m(), l2.n(), l2.r().to_string()), (2, 1, "1 + u".to_string()));
    }

    #[test]
    fn hermite_is_basis_independent() {
        let c = f3();
        let l = Lattice::new(3, -1, &s(&c, "1 + 2*u^2")).unwrap();
        let mut b = l.basis();
        // Column operation: col0 += (1+u) col1, col1 *= 2.
        let t = s(&c, "1+u");
        b = [
            [&b[0][0] + &(&t * &b[0][1]), b[0][1].scale_code(2)],
            [&b[1][0] + &(&t * &b[1][1]), b[1][1].scale_code(2)],
        ];
        assert_eq!(hermite_form(&b).unwrap(), l);
    }

    #[test]
    fn rel_position_example() {
        let c = f3();
        let a = Lattice::standard(&c);
        let b = Lattice::new(2, -1, &TruncatedSeries::zero(&c)).unwrap();
        assert_eq!(rel_position(&a, &b), ElemDiv { a: 2, b: -1 });
        assert_eq!(d1d2(&a, &b), (3, 1));
        assert!(!a.contains(&b));
        let inner = Lattice::new(1, 1, &TruncatedSeries::zero(&c)).unwrap();
        assert!(a.contains(&inner));
    }

    #[test]
    fn phi_image_of_simple_form() {
        let c = f3();
        let a = parse_matrix(&c, "0,u^2;1,0").unwrap();
        let l = Lattice::standard(&c);
        let img = phi_image(&a, &l).unwrap();
        assert_eq!((img.m(), img.n()), (2, 0));
        assert_eq!(rel_position(&l, &img), ElemDiv { a: 2, b: 0 });
        assert_eq!(phi_divisors(&a, 2, &l).unwrap(), ElemDiv { a: 2, b: 0 });
    }

    #[test]
    fn literals() {
        let c = f3();
        let l = Lattice::parse(&c, "lat(2, -1, 1 + u^3)").unwrap();
        assert_eq!(l.to_string(), "lat(2,-1,1)");
        let j = l.to_json();
        assert_eq!(Lattice::from_json(&c, &j).unwrap(), l);
        assert_eq!(j.to_string(), r#"{"m":2,"n":-1,"r":"1"}"#);
    }

    #[test]
    fn singular_and_precision_errors() {
        let c = f3();
        let z = parse_matrix(&c, "1,1;1,1").unwrap();
        assert_eq!(hermite_form(&z), Err(Error::Singular));
        let t = [
            [s(&c, "u^3"), s(&c, "1 + O(u^1)")],
            [TruncatedSeries::zero(&c), s(&c, "1")],
        ];
        assert!(matches!(hermite_form(&t), Err(Error::InsufficientPrecision { .. })));
    }

    #[test]
    fn phi_divisors_match_image_position() {
        use crate::building::{lattices_in_ball, q, BuildingPoint};
        for (p, k, a) in [(3, 1, "u^2,1+u;u,2"), (3, 2, "0,1;u^3,g*u"), (5, 1, "u,1;0,u^2+3*u^4")] {
            let c = FieldCtx::new(p, k).unwrap();
            let phi = parse_matrix(&c, a).unwrap();
            let det = &(&phi[0][0] * &phi[1][1]) - &(&phi[0][1] * &phi[1][0]);
            let vdet = det.valuation().unwrap();
            let inexact: Mat2 = [
                [phi[0][0].truncate(80), phi[0][1].truncate(80)],
                [phi[1][0].truncate(80), phi[1][1].truncate(80)],
            ];
            for y in [-1, 0, 2] {
                let center = BuildingPoint::on_a0(&c, q(0), q(y));
                for l in lattices_in_ball(&center, q(3), y).unwrap() {
                    let want = rel_position(&l, &phi_image(&phi, &l).unwrap());
                    assert_eq!(phi_divisors(&phi, vdet, &l).unwrap(), want, "{l}");
                    assert_eq!(phi_divisors(&inexact, vdet, &l).unwrap(), want, "{l}");
                }
            }
        }
    }
}
