//! Rank-2 φ-modules, their normal forms and the numerical parameters `v`.

use std::fmt;
use std::sync::Arc;

use serde_json::{json, Value};

use crate::building::{fixed_point_red, fixed_point_simple, BuildingPoint, PhiAction};
use crate::error::{Error, Result};
use crate::field::{Code, FieldCtx, FieldElem};
use crate::latmod::{mat_det, mat_inv, mat_min_valuation, mat_mul, mat_phi, rel_phi_matrix, Lattice, Mat2};
use crate::series::TruncatedSeries;

/// `Φ(v) = A φ(v)` on `F((u))^2`.
#[derive(Clone, Debug)]
pub struct PhiModule {
    a: Mat2,
    vdet: i64,
}

impl PhiModule {
    pub fn new(a: Mat2) -> Result<Self> {
        let vdet = mat_det(&a).certified_valuation()?.ok_or(Error::Singular)?;
        Ok(PhiModule { a, vdet })
    }
    pub fn matrix(&self) -> &Mat2 {
        &self.a
    }
    /// Valuation of `det A`.
    pub fn vdet(&self) -> i64 {
        self.vdet
    }
    pub fn ctx(&self) -> &Arc<FieldCtx> {
        self.a[0][0].ctx()
    }
}

/// Change of basis: returns the matrix `C^{-1} A φ(C)`.
pub fn transform(phi: &PhiModule, c: &Mat2) -> Result<PhiModule> {
    PhiModule::new(mat_mul(&mat_inv(c)?, &mat_mul(&phi.a, &mat_phi(c))))
}

/// Numerical parameters `(e, r1, r2)` with `d' = r1 + r2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct VParams {
    pub e: i64,
    pub r1: i64,
    pub r2: i64,
}

impl VParams {
    pub fn new(e: i64, r1: i64, r2: i64) -> Result<Self> {
        if e < 1 || r2 < 0 || r1 < r2 || r1 > e {
            return Err(Error::InvalidParameter(format!(
                "need e >= 1 and 0 <= r2 <= r1 <= e, got e={e}, r1={r1}, r2={r2}"
            )));
        }
        Ok(VParams { e, r1, r2 })
    }
    pub fn dprime(&self) -> i64 {
        self.r1 + self.r2
    }
    /// Parameters whose admissibility condition reads `0 <= b <= a <= e` at `a + b = 2e - d'`.
    pub fn extremal(e: i64, dprime: i64) -> Result<Self> {
        let r1 = dprime.min(e);
        Self::new(e, r1, dprime - r1)
    }
}

/// Normal forms of rank-2 φ-modules.
#[derive(Clone, PartialEq, Eq)]
pub enum NormalForm {
    /// `[[0, a u^s], [1, 0]]`, `0 <= s < p^2 - 1`, `s ≢ 0 mod p + 1`.
    Simple { a: FieldElem, s: i64 },
    /// `diag(a u^s, a u^s)`.
    SplitIso { a: FieldElem, s: i64 },
    /// `diag(a u^s, b u^t)` with `(a, s) != (b, t)`.
    SplitNonIso { a: FieldElem, s: i64, b: FieldElem, t: i64 },
    /// `[[a u^s, γ], [0, b u^t]]` with `γ` of maximal valuation and no complementary line.
    NonSplit {
        a: FieldElem,
        s: i64,
        b: FieldElem,
        t: i64,
        gamma: TruncatedSeries,
    },
}

impl fmt::Debug for NormalForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_literal())
    }
}

impl NormalForm {
    pub fn simple(a: &FieldElem, s: i64) -> Result<Self> {
        let p = a.ctx().p() as i64;
        if a.is_zero() || s < 0 || s >= p * p - 1 || s % (p + 1) == 0 {
            return Err(Error::UnsupportedNormalForm(format!(
                "simple form needs a != 0, 0 <= s < {} and s not divisible by {}",
                p * p - 1,
                p + 1
            )));
        }
        Ok(NormalForm::Simple { a: a.clone(), s })
    }

    /// Split form; chooses the isomorphic variant when `(a, s) = (b, t)`.
    pub fn split(a: &FieldElem, s: i64, b: &FieldElem, t: i64) -> Result<Self> {
        check_diag(a, s, b, t)?;
        if a == b && s == t {
            Ok(NormalForm::SplitIso { a: a.clone(), s })
        } else {
            Ok(NormalForm::SplitNonIso {
                a: a.clone(),
                s,
                b: b.clone(),
                t,
            })
        }
    }

    /// Triangular form, normalized by maximizing the valuation of `γ`.
    pub fn triangular(a: &FieldElem, s: i64, b: &FieldElem, t: i64, gamma: &TruncatedSeries) -> Result<Self> {
        Ok(maximize_gamma(a, s, b, t, gamma)?.0)
    }

    pub fn ctx(&self) -> &Arc<FieldCtx> {
        match self {
            NormalForm::Simple { a, .. }
            | NormalForm::SplitIso { a, .. }
            | NormalForm::SplitNonIso { a, .. }
            | NormalForm::NonSplit { a, .. } => a.ctx(),
        }
    }

    pub fn p(&self) -> i64 {
        self.ctx().p() as i64
    }

    pub fn case_name(&self) -> &'static str {
        match self {
            NormalForm::Simple { .. } => "simple",
            NormalForm::SplitIso { .. } => "split_iso",
            NormalForm::SplitNonIso { .. } => "split_noniso",
            NormalForm::NonSplit { .. } => "nonsplit",
        }
    }

    pub fn is_simple(&self) -> bool {
        matches!(self, NormalForm::Simple { .. })
    }

    /// `(a, s, b, t)` of the triangular shapes; the isomorphic case repeats `(a, s)`.
    pub fn diagonal(&self) -> Option<(FieldElem, i64, FieldElem, i64)> {
        match self {
            NormalForm::Simple { .. } => None,
            NormalForm::SplitIso { a, s } => Some((a.clone(), *s, a.clone(), *s)),
            NormalForm::SplitNonIso { a, s, b, t } | NormalForm::NonSplit { a, s, b, t, .. } => {
                Some((a.clone(), *s, b.clone(), *t))
            }
        }
    }

    pub fn gamma(&self) -> Option<&TruncatedSeries> {
        match self {
            NormalForm::NonSplit { gamma, .. } => Some(gamma),
            _ => None,
        }
    }

    /// `v(γ)` for the non-split form.
    pub fn k(&self) -> Option<i64> {
        self.gamma().and_then(|g| g.valuation())
    }

    /// `s` for the simple form, `s + t` otherwise: the valuation of `det A`.
    pub fn vdet(&self) -> i64 {
        match self {
            NormalForm::Simple { s, .. } => *s,
            _ => {
                let (_, s, _, t) = self.diagonal().unwrap();
                s + t
            }
        }
    }

    pub fn matrix(&self) -> Mat2 {
        let ctx = self.ctx();
        let z = || TruncatedSeries::zero(ctx);
        match self {
            NormalForm::Simple { a, s } => [
                [z(), TruncatedSeries::monomial_elem(a, *s)],
                [TruncatedSeries::one(ctx), z()],
            ],
            _ => {
                let (a, s, b, t) = self.diagonal().unwrap();
                let g = self.gamma().cloned().unwrap_or_else(z);
                [
                    [TruncatedSeries::monomial_elem(&a, s), g],
                    [z(), TruncatedSeries::monomial_elem(&b, t)],
                ]
            }
        }
    }

    pub fn phi_module(&self) -> PhiModule {
        PhiModule::new(self.matrix()).expect("normal forms are invertible")
    }

    pub fn action(&self) -> PhiAction {
        match self {
            NormalForm::Simple { a, s } => PhiAction::Simple { a: a.code(), s: *s },
            _ => {
                let (a, s, b, t) = self.diagonal().unwrap();
                let gamma = self
                    .gamma()
                    .cloned()
                    .unwrap_or_else(|| TruncatedSeries::zero(self.ctx()));
                PhiAction::Triangular {
                    a: a.code(),
                    s,
                    b: b.code(),
                    t,
                    gamma,
                }
            }
        }
    }

    /// The point fixed by `Φ`: `P_irred` or `P_red`.
    pub fn fixed_point(&self) -> BuildingPoint {
        match self {
            NormalForm::Simple { s, .. } => fixed_point_simple(self.ctx(), *s),
            _ => {
                let (_, s, _, t) = self.diagonal().unwrap();
                fixed_point_red(self.ctx(), s, t)
            }
        }
    }

    pub fn to_literal(&self) -> String {
        match self {
            NormalForm::Simple { a, s } => format!("simple:a={a},s={s}"),
            NormalForm::SplitIso { a, s } => format!("split:a={a},s={s},b={a},t={s}"),
            NormalForm::SplitNonIso { a, s, b, t } => format!("split:a={a},s={s},b={b},t={t}"),
            NormalForm::NonSplit { a, s, b, t, gamma } => {
                format!("nonsplit:a={a},s={s},b={b},t={t},gamma={gamma}")
            }
        }
    }

    pub fn to_json(&self) -> Value {
        let mut v = json!({"case": self.case_name()});
        let o = v.as_object_mut().unwrap();
        match self {
            NormalForm::Simple { a, s } | NormalForm::SplitIso { a, s } => {
                o.insert("a".into(), json!(a.to_string()));
                o.insert("s".into(), json!(s));
            }
            NormalForm::SplitNonIso { a, s, b, t } => {
                o.insert("a".into(), json!(a.to_string()));
                o.insert("s".into(), json!(s));
                o.insert("b".into(), json!(b.to_string()));
                o.insert("t".into(), json!(t));
            }
            NormalForm::NonSplit { a, s, b, t, gamma } => {
                o.insert("a".into(), json!(a.to_string()));
                o.insert("s".into(), json!(s));
                o.insert("b".into(), json!(b.to_string()));
                o.insert("t".into(), json!(t));
                o.insert("gamma".into(), json!(gamma.to_string()));
                o.insert("k".into(), json!(self.k()));
            }
        }
        v
    }

    /// Parses `simple:a=1,s=2`, `split:a=1,s=0,b=1,t=1` or
    /// `nonsplit:a=1,s=0,b=1,t=1,gamma=u`. Triangular input is normalized.
    pub fn parse(ctx: &Arc<FieldCtx>, lit: &str) -> Result<Self> {
        let bad = |m: &str| Error::Parse(format!("normal form '{lit}': {m}"));
        let (kind, rest) = lit.split_once(':').ok_or_else(|| bad("missing ':'"))?;
        let mut fields = std::collections::BTreeMap::new();
        for kv in rest.split(',') {
            let (k, v) = kv.split_once('=').ok_or_else(|| bad("expected key=value"))?;
            fields.insert(k.trim().to_string(), v.trim().to_string());
        }
        let get = |k: &str| fields.get(k).cloned().ok_or_else(|| bad(&format!("missing '{k}'")));
        let elem = |k: &str| -> Result<FieldElem> { FieldElem::parse(ctx, &get(k)?) };
        let int = |k: &str| -> Result<i64> { get(k)?.parse().map_err(|_| bad(&format!("'{k}' must be an integer"))) };
        match kind.trim() {
            "simple" => NormalForm::simple(&elem("a")?, int("s")?),
            "split" => NormalForm::split(&elem("a")?, int("s")?, &elem("b")?, int("t")?),
            "nonsplit" => {
                let g = TruncatedSeries::parse(ctx, &get("gamma")?)?;
                NormalForm::triangular(&elem("a")?, int("s")?, &elem("b")?, int("t")?, &g)
            }
            other => Err(bad(&format!("unknown kind '{other}'"))),
        }
    }
}

fn check_diag(a: &FieldElem, s: i64, b: &FieldElem, t: i64) -> Result<()> {
    let p = a.ctx().p() as i64;
    if a.is_zero() || b.is_zero() || !(0..p - 1).contains(&s) || !(0..p - 1).contains(&t) {
        return Err(Error::UnsupportedNormalForm(format!(
            "diagonal entries need nonzero constants and exponents in [0, {})",
            p - 1
        )));
    }
    Ok(())
}

/// `m(v)`, or `None` when the defining congruence fails.
pub fn m_of_v(nf: &NormalForm, v: &VParams) -> Option<i64> {
    let p = nf.p();
    let num = 2 * v.e - v.dprime() - nf.vdet();
    if num % (p - 1) == 0 {
        Some(num / (p - 1))
    } else {
        None
    }
}

/// One cancellation performed while maximizing `v(γ)`.
#[derive(Debug, Clone)]
pub struct GammaStep {
    /// Valuation of `γ` before the step.
    pub m: i64,
    /// Exponent of the monomial `q = c u^κ` used in the base change `e2 ↦ q e1 + e2`.
    pub kappa: i64,
    pub c: FieldElem,
    pub branch: &'static str,
}

/// Greedily raises `v(γ)` through `γ ↦ γ + a u^s φ(q) - b u^t q`.
///
/// Once `v(γ)` exceeds `(pt - s)/(p - 1)` the module is split; if the leading
/// term cannot be cancelled first, `γ` is maximal and the module is non-split.
pub fn maximize_gamma(
    a: &FieldElem,
    s: i64,
    b: &FieldElem,
    t: i64,
    gamma: &TruncatedSeries,
) -> Result<(NormalForm, Vec<GammaStep>)> {
    check_diag(a, s, b, t)?;
    let ctx = a.ctx().clone();
    let p = ctx.p() as i64;
    // m > bound  <=>  m (p-1) > pt - s.
    let beyond = |m: i64| m * (p - 1) > p * t - s;
    let mut g = gamma.clone();
    let mut steps = Vec::new();
    loop {
        let m = match g.valuation() {
            Some(m) => m,
            None => match g.prec() {
                Some(pr) if !beyond(pr) => {
                    return Err(Error::InsufficientPrecision {
                        needed: (p * t - s) / (p - 1) + 1,
                        available: pr,
                    })
                }
                _ => return Ok((NormalForm::split(a, s, b, t)?, steps)),
            },
        };
        if beyond(m) {
            return Ok((NormalForm::split(a, s, b, t)?, steps));
        }
        let lead = g.lead_code();
        let mut choice: Option<(i64, Code, &'static str)> = None;
        if (m - s) % p == 0 {
            let kappa = (m - s) / p;
            let lhs = kappa * (p - 1);
            if lhs < t - s {
                choice = Some((kappa, ctx.neg(ctx.mul(lead, ctx.inv(a.code()))), "frobenius"));
            } else if lhs == t - s && a != b {
                let diff = ctx.sub(a.code(), b.code());
                choice = Some((kappa, ctx.neg(ctx.mul(lead, ctx.inv(diff))), "collision"));
            }
        }
        let Some((kappa, c, branch)) = choice else {
            return Ok((
                NormalForm::NonSplit {
                    a: a.clone(),
                    s,
                    b: b.clone(),
                    t,
                    gamma: g,
                },
                steps,
            ));
        };
        let qq = TruncatedSeries::monomial(&ctx, c, kappa);
        let add = &qq.phi().shift(s).scale(a) - &qq.shift(t).scale(b);
        g = &g + &add;
        steps.push(GammaStep {
            m,
            kappa,
            c: FieldElem::from_code(&ctx, c),
            branch,
        });
    }
}

/// Classifies a φ-module into a normal form.
///
/// Recognizes the simple shape, upper and lower triangular shapes with monomial
/// diagonal, and otherwise looks for a stable line to triangularize with.
pub fn classify(phi: &PhiModule) -> Result<NormalForm> {
    classify_with_prec(phi, 48)
}

pub fn classify_with_prec(phi: &PhiModule, prec: i64) -> Result<NormalForm> {
    let a = phi.matrix();
    let ctx = phi.ctx().clone();
    let p = ctx.p() as i64;
    let mono = |x: &TruncatedSeries| -> Option<(FieldElem, i64)> {
        if x.is_monomial() {
            Some((FieldElem::from_code(&ctx, x.lead_code()), x.valuation().unwrap()))
        } else {
            None
        }
    };
    if a[0][0].is_exact_zero() && a[1][1].is_exact_zero() {
        if let (Some((c, s)), Some((d, j))) = (mono(&a[0][1]), mono(&a[1][0])) {
            // Conjugating by diag(1, d u^j) makes the lower-left entry 1, and
            // diag(u^w, u^{pw}) then moves the exponent by multiples of p^2 - 1.
            // Swapping the basis vectors replaces s by ps, so take the smaller.
            let e = s + p * j;
            let n = p * p - 1;
            let s_red = e.rem_euclid(n).min((p * e).rem_euclid(n));
            return NormalForm::simple(&c.mul(&d), s_red).map_err(|e| Error::UnrecognizedShape(e.to_string()));
        }
    }
    if a[1][0].is_exact_zero() {
        return triangular_from(phi);
    }
    if a[0][1].is_exact_zero() {
        let z = TruncatedSeries::zero(&ctx);
        let one = TruncatedSeries::one(&ctx);
        let swap = [[z.clone(), one.clone()], [one, z]];
        return triangular_from(&transform(phi, &swap)?);
    }
    // Best effort: find a stable line, complete it to a basis of determinant 1.
    let a_inv = mat_inv(a)?;
    let lo = mat_min_valuation(a).ok_or(Error::Singular)?;
    let hi = -mat_min_valuation(&a_inv).ok_or(Error::Singular)?;
    for j in lo..=hi {
        for c in crate::field::units(&ctx) {
            if let Some(line) = stable_line_solver(phi, &c, j, prec)? {
                let w = line.vector;
                let col2 = if w[0].valuation() == Some(0) {
                    [TruncatedSeries::zero(&ctx), w[0].inv()?]
                } else {
                    [(-&w[1]).inv()?, TruncatedSeries::zero(&ctx)]
                };
                let cmat = [[w[0].clone(), col2[0].clone()], [w[1].clone(), col2[1].clone()]];
                let t = transform(phi, &cmat)?;
                let det = mat_det(a);
                if !det.is_monomial() {
                    return Err(Error::UnrecognizedShape("determinant is not a monomial".into()));
                }
                let quot = det.shift(-j).scale_code(ctx.inv(c.code()));
                let tm = t.matrix();
                let fixed = [
                    [TruncatedSeries::monomial_elem(&c, j), tm[0][1].clone()],
                    [TruncatedSeries::zero(&ctx), quot],
                ];
                return triangular_from(&PhiModule::new(fixed)?);
            }
        }
    }
    Err(Error::UnrecognizedShape(format!(
        "no stable line found for {}",
        crate::latmod::format_matrix(a)
    )))
}

/// Normalizes an upper triangular module with monomial diagonal.
fn triangular_from(phi: &PhiModule) -> Result<NormalForm> {
    let a = phi.matrix();
    let ctx = phi.ctx().clone();
    let p = ctx.p() as i64;
    if !a[1][0].is_exact_zero() || !a[0][0].is_monomial() || !a[1][1].is_monomial() {
        return Err(Error::NotTriangular);
    }
    let (s0, t0) = (a[0][0].valuation().unwrap(), a[1][1].valuation().unwrap());
    // Conjugating by diag(u^v1, u^v2) shifts the diagonal exponents by (p-1) v_i.
    let v1 = -s0.div_euclid(p - 1);
    let v2 = -t0.div_euclid(p - 1);
    let ca = FieldElem::from_code(&ctx, a[0][0].lead_code());
    let cb = FieldElem::from_code(&ctx, a[1][1].lead_code());
    let s = s0 + (p - 1) * v1;
    let t = t0 + (p - 1) * v2;
    let gamma = a[0][1].shift(p * v2 - v1);
    Ok(maximize_gamma(&ca, s, &cb, t, &gamma)?.0)
}

/// A solution of `A φ(w) = c u^j w` with `w` primitive in `F[[u]]^2`.
#[derive(Debug, Clone)]
pub struct StableLine {
    pub c: FieldElem,
    pub j: i64,
    /// Coordinates known to `O(u^N)`.
    pub vector: [TruncatedSeries; 2],
}

/// Solves `B φ(ω) = c u^j ω` for `ω ∈ F[[u]]^2` with a unit coordinate.
///
/// Coefficients of degree above `n0 = ⌊(j - μ)/(p - 1)⌋` (with `μ` the least
/// valuation in `B`) are forced by the lower ones, so existence is decided by a
/// finite linear system; the witness is then extended degree by degree.
/// Returns a basis of the solutions of the finite system and `n0`.
fn stable_core(b: &Mat2, c: Code, j: i64) -> Result<Option<(Vec<Vec<Code>>, i64)>> {
    let ctx = b[0][0].ctx().clone();
    let p = ctx.p() as i64;
    let mu = match mat_min_valuation(b) {
        Some(m) => m,
        None => return Err(Error::Singular),
    };
    if j < mu {
        return Ok(None);
    }
    let n0 = (j - mu).div_euclid(p - 1);
    let nunk = 2 * (n0 as usize + 1);
    let mut rows: Vec<Vec<Code>> = Vec::new();
    for d in mu..=n0 + j {
        for i in 0..2 {
            let mut row = vec![0 as Code; nunk];
            for k in 0..2 {
                for f in 0..=n0 {
                    let e = d - p * f;
                    if e < mu {
                        break;
                    }
                    let coef = b[i][k].coefficient_code(e)?;
                    let idx = 2 * f as usize + k;
                    row[idx] = ctx.add(row[idx], coef);
                }
            }
            let n = d - j;
            if (0..=n0).contains(&n) {
                let idx = 2 * n as usize + i;
                row[idx] = ctx.sub(row[idx], c);
            }
            if row.iter().any(|&x| x != 0) {
                rows.push(row);
            }
        }
    }
    Ok(Some((nullspace(&ctx, rows, nunk), n0)))
}

/// Extends a core solution `ω_0..ω_{n0}` to `O(u^n)`.
fn extend_solution(b: &Mat2, c: Code, j: i64, core: &[Code], n0: i64, n: i64) -> Result<[TruncatedSeries; 2]> {
    let ctx = b[0][0].ctx().clone();
    let p = ctx.p() as i64;
    let total = n.max(n0 + 1) as usize;
    let mut w = vec![[0 as Code; 2]; total];
    for f in 0..=n0 as usize {
        w[f] = [core[2 * f], core[2 * f + 1]];
    }
    let cinv = ctx.inv(c);
    for m in (n0 + 1) as usize..total {
        let d = m as i64 + j;
        for i in 0..2 {
            let mut acc: Code = 0;
            for k in 0..2 {
                for f in 0..m {
                    let e = d - p * f as i64;
                    let coef = b[i][k].coefficient_code(e)?;
                    if coef != 0 && w[f][k] != 0 {
                        acc = ctx.add(acc, ctx.mul(coef, w[f][k]));
                    }
                }
            }
            w[m][i] = ctx.mul(cinv, acc);
        }
    }
    let col = |i: usize| {
        let v: Vec<Code> = w.iter().map(|x| x[i]).collect();
        TruncatedSeries::from_codes(&ctx, 0, &v, Some(total as i64))
    };
    Ok([col(0), col(1)])
}

/// Decides whether `A φ(w) = c u^j w` has a solution `w` with a unit coordinate,
/// returning one known to `O(u^prec)`.
pub fn stable_line_solver(phi: &PhiModule, c: &FieldElem, j: i64, prec: i64) -> Result<Option<StableLine>> {
    stable_line_in(phi.matrix(), c, j, prec)
}

/// [`stable_line_solver`] for an arbitrary matrix, e.g. a relative Φ-matrix.
pub fn stable_line_in(b: &Mat2, c: &FieldElem, j: i64, prec: i64) -> Result<Option<StableLine>> {
    if c.is_zero() {
        return Err(Error::InvalidParameter("eigenvalue must be nonzero".into()));
    }
    let Some((basis, n0)) = stable_core(b, c.code(), j)? else {
        return Ok(None);
    };
    let Some(v) = basis.iter().find(|v| v[0] != 0 || v[1] != 0) else {
        return Ok(None);
    };
    let vector = extend_solution(b, c.code(), j, v, n0, prec)?;
    Ok(Some(StableLine {
        c: c.clone(),
        j,
        vector,
    }))
}

/// Whether some solution of `B φ(ω) = c u^j ω` has a nonzero second coordinate.
/// Only meaningful for upper triangular `B`, where the second coordinate solves a
/// scalar equation of its own.
pub fn has_line_off_first_axis(b: &Mat2, c: &FieldElem, j: i64) -> Result<bool> {
    let Some((basis, _)) = stable_core(b, c.code(), j)? else {
        return Ok(false);
    };
    Ok(basis.iter().any(|v| v.iter().skip(1).step_by(2).any(|&x| x != 0)))
}

/// Split test through stable lines: is there a line other than `⟨e1⟩`?
///
/// Any such line is `⟨q e1 + e2⟩` with `Φ`-eigenvalue `b u^t`, and `v(q)` is bounded
/// below by `min(0, ⌊(v(γ) - s)/p⌋)`, so working in `⟨u^v e1, e2⟩` makes it primitive.
pub fn split_by_stable_lines(a: &FieldElem, s: i64, b: &FieldElem, t: i64, gamma: &TruncatedSeries) -> Result<bool> {
    let ctx = a.ctx().clone();
    let p = ctx.p() as i64;
    let v = match gamma.valuation() {
        None => 0,
        Some(g) => 0.min((g - s).div_euclid(p)),
    };
    let m = [
        [TruncatedSeries::monomial_elem(a, s), gamma.clone()],
        [TruncatedSeries::zero(&ctx), TruncatedSeries::monomial_elem(b, t)],
    ];
    let l = Lattice::new(v, 0, &TruncatedSeries::zero(&ctx))?;
    let rel = rel_phi_matrix(&m, &l);
    has_line_off_first_axis(&rel, b, t)
}

/// Basis of the right kernel of `rows` (each of length `ncols`) over the field.
fn nullspace(ctx: &Arc<FieldCtx>, mut rows: Vec<Vec<Code>>, ncols: usize) -> Vec<Vec<Code>> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..ncols {
        let Some(pr) = (r..rows.len()).find(|&i| rows[i][col] != 0) else {
            continue;
        };
        rows.swap(r, pr);
        let inv = ctx.inv(rows[r][col]);
        for x in rows[r].iter_mut() {
            *x = ctx.mul(*x, inv);
        }
        for i in 0..rows.len() {
            if i != r && rows[i][col] != 0 {
                let f = rows[i][col];
                for k in 0..ncols {
                    let sub = ctx.mul(f, rows[r][k]);
                    rows[i][k] = ctx.sub(rows[i][k], sub);
                }
            }
        }
        pivots.push(col);
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    let mut basis = Vec::new();
    for free in (0..ncols).filter(|c| !pivots.contains(c)) {
        let mut v = vec![0 as Code; ncols];
        v[free] = 1;
        for (i, &pc) in pivots.iter().enumerate() {
            v[pc] = ctx.neg(rows[i][free]);
        }
        basis.push(v);
    }
    basis
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::latmod::parse_matrix;

    fn f3() -> Arc<FieldCtx> {
        FieldCtx::new(3, 1).unwrap()
    }

    fn module(ctx: &Arc<FieldCtx>, s: &str) -> PhiModule {
        PhiModule::new(parse_matrix(ctx, s).unwrap()).unwrap()
    }

    #[test]
    fn classify_examples() {
        let c = f3();
        let nf = classify(&module(&c, "0,u^2;1,0")).unwrap();
        assert_eq!(nf.to_json().to_string(), r#"{"a":"1","case":"simple","s":2}"#);
        let nf = classify(&module(&c, "1,1;0,u")).unwrap();
        assert_eq!(nf.case_name(), "nonsplit");
        assert_eq!(nf.gamma().unwrap().to_string(), "u");
        let nf = classify(&module(&c, "1,u;0,u")).unwrap();
        assert_eq!(nf.to_literal(), "nonsplit:a=1,s=0,b=1,t=1,gamma=u");
        let nf = classify(&module(&c, "1,u^2;0,u")).unwrap();
        assert_eq!(nf.case_name(), "split_noniso");
    }

    #[test]
    fn simple_exponent_ignores_basis_order() {
        let c = f3();
        for s in 0..8 {
            if s % 4 == 0 {
                continue;
            }
            let a = classify(&module(&c, &format!("0,2*u^{s};1,0"))).unwrap();
            let b = classify(&module(&c, &format!("0,1;2*u^{s},0"))).unwrap();
            assert_eq!(a.to_literal(), b.to_literal());
        }
    }

    #[test]
    fn gamma_cancellation_steps() {
        let c = f3();
        let one = FieldElem::one(&c);
        let g = TruncatedSeries::parse(&c, "1").unwrap();
        let (nf, steps) = maximize_gamma(&one, 0, &one, 1, &g).unwrap();
        assert_eq!(steps.len(), 1);
        assert_eq!(steps[0].c.to_string(), "2");
        assert_eq!(nf.gamma().unwrap().to_string(), "u");
    }

    #[test]
    fn collision_needs_distinct_constants() {
        let c = FieldCtx::new(5, 1).unwrap();
        let (a, b) = (FieldElem::from_int(&c, 1), FieldElem::from_int(&c, 2));
        let g = TruncatedSeries::parse(&c, "u^2").unwrap();
        // s = t = 2: bound is 2, collision at m = 2.
        let (nf, _) = maximize_gamma(&a, 2, &b, 2, &g).unwrap();
        assert_eq!(nf.case_name(), "split_noniso");
        let (nf, _) = maximize_gamma(&a, 2, &a, 2, &g).unwrap();
        assert_eq!(nf.case_name(), "nonsplit");
    }

    #[test]
    fn stable_lines_of_simple_form_absent() {
        let c = f3();
        let m = module(&c, "0,u^2;1,0");
        for j in -4..8 {
            for x in crate::field::units(&c) {
                assert!(stable_line_solver(&m, &x, j, 10).unwrap().is_none());
            }
        }
    }

    #[test]
    fn stable_line_of_diagonal() {
        let c = f3();
        let m = module(&c, "2*u,0;0,1");
        let two = FieldElem::from_int(&c, 2);
        let w = stable_line_solver(&m, &two, 1, 6).unwrap().unwrap();
        assert_eq!(w.vector[0].valuation(), Some(0));
        assert!(w.vector[1].is_zero());
    }

    #[test]
    fn split_agreement_small() {
        let c = f3();
        let one = FieldElem::one(&c);
        for g in ["1", "u", "u^2", "u^-1", "1 + u", "u^-3 + u"] {
            let gamma = TruncatedSeries::parse(&c, g).unwrap();
            let (nf, _) = maximize_gamma(&one, 0, &one, 1, &gamma).unwrap();
            let split = split_by_stable_lines(&one, 0, &one, 1, &gamma).unwrap();
            assert_eq!(nf.case_name() != "nonsplit", split, "{g}");
        }
    }

    #[test]
    fn m_of_v_congruence() {
        let c = f3();
        let nf = NormalForm::simple(&FieldElem::one(&c), 2).unwrap();
        assert_eq!(m_of_v(&nf, &VParams::new(5, 4, 0).unwrap()), Some(2));
        assert_eq!(m_of_v(&nf, &VParams::new(5, 3, 0).unwrap()), None);
    }

    #[test]
    fn literal_roundtrip() {
        let c = FieldCtx::new(5, 1).unwrap();
        for lit in [
            "simple:a=2,s=3",
            "split:a=1,s=0,b=1,t=1",
            "split:a=1,s=2,b=1,t=2",
            "nonsplit:a=1,s=0,b=1,t=1,gamma=u",
        ] {
            let nf = NormalForm::parse(&c, lit).unwrap();
            assert_eq!(nf.to_literal(), lit);
        }
    }
}
