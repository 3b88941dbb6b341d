//! Coordinates on the Bruhat–Tits building of `GL_2(F((u)))`.
//!
//! A point `[x, y]_q` is the homothety-shifted lattice `⟨u^m e1, u^n (q e1 + e2)⟩`
//! with `x = m - n`, `y = m + n`. Only `q mod u^x` matters, so `q` is stored with
//! every exponent `< x`. Coordinates are exact rationals.

use std::fmt;
use std::sync::Arc;

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::Signed;

use crate::error::{Error, Result};
use crate::field::{Code, FieldCtx};
use crate::latmod::Lattice;
use crate::series::TruncatedSeries;

pub type Q = Ratio<i64>;

pub fn q(n: i64) -> Q {
    Q::from_integer(n)
}

pub fn qf(n: i64, d: i64) -> Q {
    Q::new(n, d)
}

fn ceil_i(x: Q) -> i64 {
    x.ceil().to_integer()
}

fn floor_i(x: Q) -> i64 {
    x.floor().to_integer()
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BuildingPoint {
    x: Q,
    y: Q,
    q: TruncatedSeries,
}

impl BuildingPoint {
    /// Builds `[x, y]_q`, dropping terms of `q` with exponent `>= x`.
    pub fn new(x: Q, y: Q, q: &TruncatedSeries) -> Result<Self> {
        Ok(BuildingPoint {
            x,
            y,
            q: q.exact_below(ceil_i(x))?,
        })
    }

    /// A point of the standard apartment `A_0`.
    pub fn on_a0(ctx: &Arc<FieldCtx>, x: Q, y: Q) -> Self {
        BuildingPoint {
            x,
            y,
            q: TruncatedSeries::zero(ctx),
        }
    }

    pub fn x(&self) -> Q {
        self.x
    }
    pub fn y(&self) -> Q {
        self.y
    }
    pub fn q(&self) -> &TruncatedSeries {
        &self.q
    }
    pub fn ctx(&self) -> &Arc<FieldCtx> {
        self.q.ctx()
    }

    /// Integral coordinates of matching parity.
    pub fn is_lattice(&self) -> bool {
        self.x.is_integer() && self.y.is_integer() && (self.x.to_integer() - self.y.to_integer()).is_even()
    }

    /// Integral `x` (a vertex of the tree at fixed `y`).
    pub fn is_vertex(&self) -> bool {
        self.x.is_integer()
    }

    pub fn on_a0_apartment(&self) -> bool {
        self.q.is_zero()
    }
}

impl fmt::Display for BuildingPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]_{}", self.x, self.y, self.q)
    }
}

impl fmt::Debug for BuildingPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

pub fn lattice_to_point(l: &Lattice) -> BuildingPoint {
    BuildingPoint {
        x: q(l.x()),
        y: q(l.y()),
        q: l.q(),
    }
}

pub fn point_to_lattice(p: &BuildingPoint) -> Result<Lattice> {
    if !p.is_lattice() {
        return Err(Error::NotALattice(p.to_string()));
    }
    let (x, y) = (p.x.to_integer(), p.y.to_integer());
    let m = (x + y) / 2;
    let n = (y - x) / 2;
    Lattice::new(m, n, &p.q.shift(n))
}

/// Valuation of `q - q'`, `None` for equal polynomials.
fn branch_val(a: &TruncatedSeries, b: &TruncatedSeries) -> Option<i64> {
    (a - b).valuation()
}

/// Tree distance at fixed `y`.
pub fn tree_d1(a: &BuildingPoint, b: &BuildingPoint) -> Q {
    let w = branch_val(&a.q, &b.q);
    let m1 = w.map_or(a.x, |w| a.x.min(q(w)));
    let m2 = w.map_or(b.x, |w| b.x.min(q(w)));
    (a.x - m1) + (b.x - m2) + (m1 - m2).abs()
}

/// `y' - y`.
pub fn tree_d2(a: &BuildingPoint, b: &BuildingPoint) -> Q {
    b.y - a.y
}

/// How `Φ` moves points, for the normal forms whose action has a closed formula.
#[derive(Clone, Debug)]
pub enum PhiAction {
    /// `A = [[0, a u^s], [1, 0]]`.
    Simple { a: Code, s: i64 },
    /// `A = [[a u^s, γ], [0, b u^t]]`.
    Triangular {
        a: Code,
        s: i64,
        b: Code,
        t: i64,
        gamma: TruncatedSeries,
    },
}

/// Image of a point under `Φ`.
pub fn phi_point(act: &PhiAction, pt: &BuildingPoint) -> Result<BuildingPoint> {
    let ctx = pt.ctx().clone();
    let p = ctx.p() as i64;
    let pq = q(p);
    match act {
        PhiAction::Simple { a, s } => {
            let s = q(*s);
            match pt.q.valuation() {
                None => Ok(BuildingPoint::on_a0(&ctx, -pq * pt.x + s, pq * pt.y + s)),
                Some(k) => {
                    // x > k here because q only keeps exponents below x.
                    let kk = q(k);
                    let nx = pq * pt.x - q(2 * p * k) + s;
                    let ny = pq * pt.y + s;
                    let alpha = pt.q.phi().shift(-p * k);
                    let rel = ceil_i(pq * (pt.x - kk));
                    let ainv = alpha.inv_rel(rel)?;
                    let nq = ainv.scale_code(*a).shift(s.to_integer() - p * k).truncate(ceil_i(nx));
                    BuildingPoint::new(nx, ny, &nq.as_exact())
                }
            }
        }
        PhiAction::Triangular { a, s, b, t, gamma } => {
            let nx = pq * pt.x + q(s - t);
            let ny = pq * pt.y + q(s + t);
            let binv = ctx.inv(*b);
            let inner = &pt.q.phi().shift(*s).scale_code(*a) + gamma;
            let nq = inner.shift(-t).scale_code(binv);
            BuildingPoint::new(nx, ny, &nq)
        }
    }
}

/// `P_irred = [s/(p+1), -s/(p-1)]_0`.
pub fn fixed_point_simple(ctx: &Arc<FieldCtx>, s: i64) -> BuildingPoint {
    let p = ctx.p() as i64;
    BuildingPoint::on_a0(ctx, qf(s, p + 1), qf(-s, p - 1))
}

/// `P_red = [(t-s)/(p-1), -(t+s)/(p-1)]_0`.
pub fn fixed_point_red(ctx: &Arc<FieldCtx>, s: i64, t: i64) -> BuildingPoint {
    let p = ctx.p() as i64;
    BuildingPoint::on_a0(ctx, qf(t - s, p - 1), qf(-(t + s), p - 1))
}

/// Nearest point of `A_0 ∩ B(y)`.
pub fn project_a0(pt: &BuildingPoint) -> BuildingPoint {
    let x = match pt.q.valuation() {
        None => pt.x,
        Some(w) => pt.x.min(q(w)),
    };
    BuildingPoint::on_a0(pt.ctx(), x, pt.y)
}

/// Nearest point of the union of the apartments `A_z`, `z` constant.
pub fn project_constant_apartments(pt: &BuildingPoint) -> Result<BuildingPoint> {
    let ctx = pt.ctx().clone();
    match pt.q.valuation() {
        None => Ok(pt.clone()),
        Some(w) if w < 0 => Ok(BuildingPoint::on_a0(&ctx, pt.x.min(q(w)), pt.y)),
        Some(_) => {
            let z = pt.q.coefficient_code(0)?;
            let zs = TruncatedSeries::monomial(&ctx, z, 0);
            let rest = &pt.q - &zs;
            let x = match rest.valuation() {
                None => pt.x,
                Some(w2) => pt.x.min(q(w2)),
            };
            BuildingPoint::new(x, pt.y, &zs)
        }
    }
}

/// Number of lattices at fixed `y` within distance `radius` of a vertex whose
/// parity agrees with the lattices iff `same_parity`.
pub fn vertex_ball_count(field_size: u64, radius: i64, same_parity: bool) -> u64 {
    let mut total = 0u64;
    for d in 0..=radius.max(-1) {
        if (d % 2 == 0) != same_parity {
            continue;
        }
        total += if d == 0 {
            1
        } else {
            (field_size + 1) * field_size.pow((d - 1) as u32)
        };
    }
    total
}

/// Visits every lattice `[x, y]_q` with `tree_d1` to `center` at most `radius`,
/// passing the distance along. Apartment points come before branches, `x` ascending.
pub fn for_each_lattice_in_ball<F>(center: &BuildingPoint, radius: Q, y: i64, mut f: F) -> Result<()>
where
    F: FnMut(Lattice, Q) -> Result<()>,
{
    let ctx = center.ctx().clone();
    let fq = ctx.size() as Code;
    let xc = center.x;
    let lo = ceil_i(xc - radius);
    let hi = floor_i(xc + radius);
    let qc = center.q.clone();
    for x in lo..=hi {
        if (x - y).is_odd() {
            continue;
        }
        let base = qc.exact_below(x)?;
        let mk = |qq: &TruncatedSeries| -> Result<Lattice> {
            let m = (x + y) / 2;
            let n = (y - x) / 2;
            Lattice::new(m, n, &qq.shift(n))
        };
        let d0 = (q(x) - xc).abs();
        if d0 <= radius {
            f(mk(&base)?, d0)?;
        }
        let wlo = ceil_i((q(x) + xc - radius) / 2);
        for w in wlo..x {
            let m2 = xc.min(q(w));
            let d = (q(x) - q(w)) + (xc - m2) + (q(w) - m2).abs();
            if d > radius {
                continue;
            }
            let len = (x - w) as usize;
            let mut digits = vec![0 as Code; len];
            digits[0] = 1;
            loop {
                let delta = TruncatedSeries::from_codes(&ctx, w, &digits, None);
                f(mk(&(&base + &delta))?, d)?;
                // Odometer: the leading digit runs over nonzero codes.
                let mut i = len - 1;
                let done = loop {
                    digits[i] += 1;
                    if digits[i] < fq {
                        break false;
                    }
                    if i == 0 {
                        break true;
                    }
                    digits[i] = 0;
                    i -= 1;
                };
                if done {
                    break;
                }
            }
        }
    }
    Ok(())
}

/// Collected and sorted version of [`for_each_lattice_in_ball`].
pub fn lattices_in_ball(center: &BuildingPoint, radius: Q, y: i64) -> Result<Vec<Lattice>> {
    let mut out = Vec::new();
    for_each_lattice_in_ball(center, radius, y, |l, _| {
        out.push(l);
        Ok(())
    })?;
    out.sort();
    Ok(out)
}

/// The `q + 1` vertices adjacent to the vertex `[x, y]_q` in the tree at fixed `y`.
pub fn neighbors(pt: &BuildingPoint) -> Result<Vec<BuildingPoint>> {
    if !pt.x.is_integer() {
        return Err(Error::InvalidParameter(format!("{pt} is not a vertex")));
    }
    let ctx = pt.ctx().clone();
    let x = pt.x.to_integer();
    let mut out = vec![BuildingPoint::new(q(x - 1), pt.y, &pt.q)?];
    for c in 0..ctx.size() as Code {
        let qq = &pt.q + &TruncatedSeries::monomial(&ctx, c, x);
        out.push(BuildingPoint::new(q(x + 1), pt.y, &qq)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::latmod::{d1d2, parse_matrix, phi_image};

    fn f3() -> Arc<FieldCtx> {
        FieldCtx::new(3, 1).unwrap()
    }

    fn s(ctx: &Arc<FieldCtx>, t: &str) -> TruncatedSeries {
        TruncatedSeries::parse(ctx, t).unwrap()
    }

    #[test]
    fn coordinate_example() {
        let c = f3();
        let l = Lattice::new(2, 0, &s(&c, "1 + u")).unwrap();
        let p = lattice_to_point(&l);
        assert_eq!((p.x(), p.y()), (q(2), q(2)));
        assert_eq!(p.q().to_string(), "1 + u");
        assert_eq!(point_to_lattice(&p).unwrap(), l);
    }

    #[test]
    fn distance_off_apartment() {
        let c = f3();
        // v(q) = k < 0: d1 to the origin is x - 2k.
        let p = BuildingPoint::new(q(3), q(1), &s(&c, "u^-1")).unwrap();
        let o = BuildingPoint::on_a0(&c, q(0), q(0));
        assert_eq!(tree_d1(&p, &o), q(5));
        assert_eq!(tree_d2(&o, &p), q(1));
    }

    #[test]
    fn distances_agree_with_divisors() {
        let c = f3();
        let pts = lattices_in_ball(&BuildingPoint::on_a0(&c, q(0), q(0)), q(4), 0).unwrap();
        assert_eq!(pts.len() as u64, vertex_ball_count(3, 4, true));
        for a in pts.iter().step_by(7) {
            for b in pts.iter().step_by(5) {
                let (d1, d2) = d1d2(a, b);
                let (pa, pb) = (lattice_to_point(a), lattice_to_point(b));
                assert_eq!(tree_d1(&pa, &pb), q(d1), "{a} {b}");
                assert_eq!(tree_d2(&pa, &pb), q(d2));
            }
        }
    }

    #[test]
    fn ball_sizes() {
        assert_eq!(vertex_ball_count(3, 2, true), 13);
        assert_eq!(vertex_ball_count(9, 2, true), 91);
        let c = f3();
        let half = BuildingPoint::on_a0(&c, qf(1, 2), q(0));
        // Lattices at distance 1/2 and 3/2 from an edge midpoint.
        let pts = lattices_in_ball(&half, qf(3, 2), 0).unwrap();
        assert_eq!(pts.len(), 1 + 3);
    }

    #[test]
    fn phi_point_matches_lattice_action() {
        let c = f3();
        let a = parse_matrix(&c, "0,2*u^2;1,0").unwrap();
        let act = PhiAction::Simple { a: 2, s: 2 };
        for l in lattices_in_ball(&BuildingPoint::on_a0(&c, q(0), q(0)), q(3), 1).unwrap() {
            let img = phi_image(&a, &l).unwrap();
            let pp = phi_point(&act, &lattice_to_point(&l)).unwrap();
            assert_eq!(pp, lattice_to_point(&img), "{l}");
        }
        let tri = parse_matrix(&c, "u,u^-1 + 1;0,2").unwrap();
        let act = PhiAction::Triangular {
            a: 1,
            s: 1,
            b: 2,
            t: 0,
            gamma: s(&c, "u^-1 + 1"),
        };
        for l in lattices_in_ball(&BuildingPoint::on_a0(&c, q(0), q(0)), q(3), 0).unwrap() {
            let img = phi_image(&tri, &l).unwrap();
            let pp = phi_point(&act, &lattice_to_point(&l)).unwrap();
            assert_eq!(pp, lattice_to_point(&img), "{l}");
        }
    }

    #[test]
    fn projections() {
        let c = f3();
        let p = BuildingPoint::new(q(4), q(0), &s(&c, "2 + u^2")).unwrap();
        assert_eq!(project_a0(&p), BuildingPoint::on_a0(&c, q(0), q(0)));
        let t = project_constant_apartments(&p).unwrap();
        assert_eq!(t, BuildingPoint::new(q(2), q(0), &s(&c, "2")).unwrap());
    }

    #[test]
    fn neighbor_count() {
        let c = f3();
        let v = BuildingPoint::on_a0(&c, q(1), q(0));
        let nb = neighbors(&v).unwrap();
        assert_eq!(nb.len(), 4);
        assert!(nb.iter().all(|n| tree_d1(n, &v) == q(1)));
    }
}
