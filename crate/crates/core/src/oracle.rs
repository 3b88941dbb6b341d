//! Brute-force second opinions. Nothing here uses the building coordinates or
//! the admissibility code of `kisin`: balls are grown by walking the tree
//! through index-`p` sublattices, admissibility is read off
//! `rel_position(L, ⟨ΦL⟩)`, and stable lines come from a dense `F_q`-linear
//! system solved by plain elimination.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{Code, FieldCtx, FieldElem};
use crate::latmod::{mat_mul, phi_image, rel_phi_matrix, rel_position, ElemDiv, Lattice, Mat2};
use crate::series::TruncatedSeries;

// ---------------------------------------------------------------------------
// Balls

/// Neighbours of the class of `l` in the tree, as index-`p` sublattices.
fn sublattice_neighbors(l: &Lattice) -> Result<Vec<Lattice>> {
    let ctx = l.ctx().clone();
    let (m, n) = (l.m(), l.n());
    let mut out = Vec::with_capacity(ctx.size() as usize + 1);
    // ⟨u b1, b2 + c b1⟩ for c ∈ F_q, and ⟨b1, u b2⟩.
    for c in 0..ctx.size() as Code {
        let r = l.r() + &TruncatedSeries::monomial(&ctx, c, m);
        out.push(Lattice::new(m + 1, n, &r)?);
    }
    out.push(Lattice::new(m, n + 1, &l.r().shift(1))?);
    Ok(out)
}

/// `u^k L`.
fn scaled(l: &Lattice, k: i64) -> Result<Lattice> {
    Lattice::new(l.m() + k, l.n() + k, &l.r().shift(k))
}

/// Representative of the class of `l` with `y` in `{y0, y0 + 1}`.
fn normalize(l: &Lattice, y0: i64) -> Result<Lattice> {
    scaled(l, -(l.y() - y0).div_euclid(2))
}

/// Number of tree vertices at distance at most `radius` from a vertex, counting
/// only distances of the given parity.
pub fn ball_count(field_size: u64, radius: i64, parity: i64) -> u64 {
    (0..=radius)
        .filter(|d| (d - parity).rem_euclid(2) == 0)
        .map(|d| {
            if d == 0 {
                1
            } else {
                (field_size + 1) * field_size.pow(d as u32 - 1)
            }
        })
        .sum()
}

/// All lattices whose classes lie within tree distance `radius` of the class of
/// `center`.
///
/// With `y_fixed`, returns the lattices with that `y`; this keeps the classes at
/// distances of parity `y_fixed - y(center)`. Without it, one lattice per class,
/// with `y` in `{y(center), y(center) + 1}`. The result size is checked against
/// [`ball_count`].
pub fn ball_enumerate(center: &Lattice, radius: i64, y_fixed: Option<i64>, budget: u64) -> Result<Vec<Lattice>> {
    if radius < 0 {
        return Err(Error::InvalidParameter("radius must be nonnegative".into()));
    }
    let y0 = center.y();
    let parity = y_fixed.map(|y| (y - y0).rem_euclid(2));
    let mut out = Vec::new();
    let mut seen = 0u64;
    // Depth-first over non-backtracking paths.
    let mut stack: Vec<(Lattice, Option<Lattice>, i64)> = vec![(center.clone(), None, 0)];
    while let Some((l, parent, d)) = stack.pop() {
        seen += 1;
        if seen > budget {
            return Err(Error::BudgetExceeded { limit: budget });
        }
        match (y_fixed, parity) {
            (Some(y), Some(par)) => {
                if (d - par).rem_euclid(2) == 0 {
                    out.push(scaled(&l, (y - l.y()) / 2)?);
                }
            }
            _ => out.push(l.clone()),
        }
        if d == radius {
            continue;
        }
        for nb in sublattice_neighbors(&l)? {
            let nb = normalize(&nb, y0)?;
            if parent.as_ref() != Some(&nb) {
                stack.push((nb, Some(l.clone()), d + 1));
            }
        }
    }
    let expected = ball_count(center.ctx().size() as u64, radius, parity.unwrap_or(0));
    let expected = if parity.is_none() {
        expected + ball_count(center.ctx().size() as u64, radius, 1)
    } else {
        expected
    };
    if out.len() as u64 != expected {
        return Err(Error::Invariant(format!(
            "ball has {} lattices, expected {expected}",
            out.len()
        )));
    }
    out.sort();
    Ok(out)
}

// ---------------------------------------------------------------------------
// Admissibility by matrix arithmetic

/// Divisors of `⟨ΦL⟩` relative to `L`, through the Hermite form of the image.
pub fn image_divisors(phi: &Mat2, l: &Lattice) -> Result<ElemDiv> {
    Ok(rel_position(l, &phi_image(phi, l)?))
}

/// `u^e L ⊂ ⟨ΦL⟩ ⊂ L` with the `v` conditions `a - b <= r1 - r2`, `a + b = 2e - d'`.
pub fn brute_v_admissible(phi: &Mat2, e: i64, r1: i64, r2: i64, l: &Lattice) -> Result<bool> {
    let d = image_divisors(phi, l)?;
    Ok(d.b >= 0 && d.a <= e && d.a - d.b <= r1 - r2 && d.a + d.b == 2 * e - r1 - r2)
}

/// The `v`-admissible lattices of a ball.
pub fn brute_admissible_in_ball(
    phi: &Mat2,
    (e, r1, r2): (i64, i64, i64),
    center: &Lattice,
    radius: i64,
    y: i64,
    budget: u64,
) -> Result<Vec<Lattice>> {
    let mut out = Vec::new();
    for l in ball_enumerate(center, radius, Some(y), budget)? {
        if brute_v_admissible(phi, e, r1, r2, &l)? {
            out.push(l);
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Stable lines

/// Dense matrix over `F_q`, reduced in place.
struct DenseSystem<'a> {
    ctx: &'a FieldCtx,
    rows: Vec<Vec<Code>>,
    ncols: usize,
}

impl DenseSystem<'_> {
    /// Basis of the kernel, by Gauss-Jordan elimination.
    fn kernel(mut self) -> Vec<Vec<Code>> {
        let ctx = self.ctx;
        let mut pivot_cols = Vec::new();
        let mut r = 0;
        for col in 0..self.ncols {
            let Some(pr) = (r..self.rows.len()).find(|&i| self.rows[i][col] != 0) else {
                continue;
            };
            self.rows.swap(r, pr);
            let inv = ctx.inv(self.rows[r][col]);
            for x in self.rows[r].iter_mut() {
                *x = ctx.mul(*x, inv);
            }
            for i in 0..self.rows.len() {
                let f = self.rows[i][col];
                if i != r && f != 0 {
                    for k in 0..self.ncols {
                        let sub = ctx.mul(f, self.rows[r][k]);
                        self.rows[i][k] = ctx.sub(self.rows[i][k], sub);
                    }
                }
            }
            pivot_cols.push(col);
            r += 1;
        }
        (0..self.ncols)
            .filter(|c| !pivot_cols.contains(c))
            .map(|fc| {
                let mut v = vec![0 as Code; self.ncols];
                v[fc] = 1;
                for (i, &pc) in pivot_cols.iter().enumerate() {
                    v[pc] = ctx.neg(self.rows[i][fc]);
                }
                v
            })
            .collect()
    }
}

/// A solution of `B φ(w) = c u^j w` in lattice coordinates, known modulo `u^N`.
#[derive(Clone, Debug)]
pub struct Witness {
    pub c: FieldElem,
    pub j: i64,
    pub w: [TruncatedSeries; 2],
}

/// Kernel of `w ↦ B φ(w) - c u^j w` on pairs of polynomials of degree `< n`,
/// as an `F_q`-linear map, on the exponents below `u^{n + j}`.
fn stable_kernel(b: &Mat2, c: Code, j: i64, n: i64) -> Result<Vec<[Vec<Code>; 2]>> {
    let ctx: Arc<FieldCtx> = b[0][0].ctx().clone();
    let p = ctx.p() as i64;
    let vb = b.iter().flatten().filter_map(|x| x.valuation()).min().unwrap_or(0);
    // Past degree (j - vb)/(p - 1) each coefficient of w is forced by the lower
    // ones, so a solution modulo u^n with n beyond that extends uniquely, and the
    // equations below u^{n + j} involve no unknown tail.
    if (p - 1) * n <= j - vb {
        let needed = (j - vb).div_euclid(p - 1) + 1;
        return Err(Error::InsufficientPrecision { needed, available: n });
    }
    let (lo, hi) = (vb.min(j), n + j);
    // Entries of B are read up to u^hi.
    for pr in b.iter().flatten().filter_map(|x| x.prec()) {
        if pr < hi {
            return Err(Error::InsufficientPrecision {
                needed: hi,
                available: pr,
            });
        }
    }
    let cfe = FieldElem::from_code(&ctx, c);
    let nrows = 2 * (hi - lo) as usize;
    let ncols = 2 * n as usize;
    let mut rows = vec![vec![0 as Code; ncols]; nrows];
    for comp in 0..2 {
        for i in 0..n {
            let col = comp * n as usize + i as usize;
            // Column of w = u^i in coordinate comp.
            let phi_w = TruncatedSeries::u_pow(&ctx, p * i);
            for row_comp in 0..2 {
                let mut img = &b[row_comp][comp] * &phi_w;
                if row_comp == comp {
                    img = &img - &TruncatedSeries::constant(&cfe).shift(i + j);
                }
                for ex in lo..hi {
                    rows[row_comp * (hi - lo) as usize + (ex - lo) as usize][col] = img.coefficient_code(ex)?;
                }
            }
        }
    }
    let kernel = DenseSystem { ctx: &ctx, rows, ncols }.kernel();
    Ok(kernel
        .into_iter()
        .map(|v| [v[..n as usize].to_vec(), v[n as usize..].to_vec()])
        .collect())
}

fn witness(ctx: &Arc<FieldCtx>, c: Code, j: i64, v: &[Vec<Code>; 2], n: i64) -> Witness {
    Witness {
        c: FieldElem::from_code(ctx, c),
        j,
        w: [
            TruncatedSeries::from_codes(ctx, 0, &v[0], Some(n)),
            TruncatedSeries::from_codes(ctx, 0, &v[1], Some(n)),
        ],
    }
}

/// Any `w ∈ L \ uL` with `Φ(w) = c u^j w` modulo `u^N`, trying every unit `c`.
/// `phi` is the matrix of `Φ` on the standard basis.
pub fn brute_stable_line(phi: &Mat2, l: &Lattice, j: i64, n: i64) -> Result<Option<Witness>> {
    let b = rel_phi_matrix(phi, l);
    brute_stable_line_rel(&b, j, n)
}

/// [`brute_stable_line`] for a matrix already in lattice coordinates.
pub fn brute_stable_line_rel(b: &Mat2, j: i64, n: i64) -> Result<Option<Witness>> {
    let ctx = b[0][0].ctx().clone();
    for c in 1..ctx.size() as Code {
        for v in stable_kernel(b, c, j, n)? {
            if v[0][0] != 0 || v[1][0] != 0 {
                return Ok(Some(witness(&ctx, c, j, &v, n)));
            }
        }
    }
    Ok(None)
}

/// Split test for `[[a u^s, γ], [0, b u^t]]`: a stable line off `⟨e1⟩`.
///
/// Such a line is spanned by `f e1 + g e2` with `g` a nonzero constant, and
/// `v(f) >= min(0, ⌊(v(γ) - s)/p⌋)`, so the search runs in `⟨u^v e1, e2⟩`.
pub fn brute_is_split(a: &FieldElem, s: i64, b: &FieldElem, t: i64, gamma: &TruncatedSeries, n: i64) -> Result<bool> {
    let ctx = a.ctx().clone();
    let p = ctx.p() as i64;
    let v = match gamma.valuation() {
        None => 0,
        Some(g) => 0.min((g - s).div_euclid(p)),
    };
    let phi = [
        [TruncatedSeries::monomial_elem(a, s), gamma.clone()],
        [TruncatedSeries::zero(&ctx), TruncatedSeries::monomial_elem(b, t)],
    ];
    let l = Lattice::new(v, 0, &TruncatedSeries::zero(&ctx))?;
    let rel = rel_phi_matrix(&phi, &l);
    for c in 1..ctx.size() as Code {
        if stable_kernel(&rel, c, t, n)?.iter().any(|w| w[1][0] != 0) {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Checks a witness against the defining equation at its precision.
pub fn check_witness(phi: &Mat2, l: &Lattice, wit: &Witness) -> Result<bool> {
    let b = rel_phi_matrix(phi, l);
    let lhs = mat_mul(
        &b,
        &[
            [wit.w[0].phi(), TruncatedSeries::zero(l.ctx())],
            [wit.w[1].phi(), TruncatedSeries::zero(l.ctx())],
        ],
    );
    for i in 0..2 {
        let rhs = wit.w[i].shift(wit.j).scale(&wit.c);
        let diff = &lhs[i][0] - &rhs;
        if !diff.is_zero() {
            return Ok(false);
        }
    }
    Ok(true)
}

// ---------------------------------------------------------------------------
// Report diffing

#[derive(Clone, Debug, Default, Serialize, PartialEq, Eq)]
pub struct CountMismatch {
    pub key: String,
    pub predicted: u64,
    pub observed: u64,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct ReportDiff {
    pub only_predicted: Vec<Lattice>,
    pub only_observed: Vec<Lattice>,
    pub counts: Vec<CountMismatch>,
    /// Least lattice in the symmetric difference.
    pub first_divergent: Option<Lattice>,
}

impl ReportDiff {
    pub fn is_empty(&self) -> bool {
        self.only_predicted.is_empty() && self.only_observed.is_empty() && self.counts.is_empty()
    }

    pub fn size(&self) -> usize {
        self.only_predicted.len() + self.only_observed.len() + self.counts.len()
    }
}

/// Symmetric difference of point sets plus per-key count mismatches.
pub fn diff_reports(
    predicted: &[Lattice],
    observed: &[Lattice],
    predicted_counts: &BTreeMap<String, u64>,
    observed_counts: &BTreeMap<String, u64>,
) -> ReportDiff {
    let a: BTreeSet<&Lattice> = predicted.iter().collect();
    let b: BTreeSet<&Lattice> = observed.iter().collect();
    let only_predicted: Vec<Lattice> = a.difference(&b).map(|l| (*l).clone()).collect();
    let only_observed: Vec<Lattice> = b.difference(&a).map(|l| (*l).clone()).collect();
    let first_divergent = only_predicted.iter().chain(&only_observed).min().cloned();
    let keys: BTreeSet<&String> = predicted_counts.keys().chain(observed_counts.keys()).collect();
    let counts = keys
        .into_iter()
        .filter_map(|k| {
            let p = predicted_counts.get(k).copied().unwrap_or(0);
            let o = observed_counts.get(k).copied().unwrap_or(0);
            (p != o).then(|| CountMismatch {
                key: k.clone(),
                predicted: p,
                observed: o,
            })
        })
        .collect();
    ReportDiff {
        only_predicted,
        only_observed,
        counts,
        first_divergent,
    }
}
