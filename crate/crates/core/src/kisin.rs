//! v-admissible lattices: enumeration, strata `G(a, b)`, the ordinary components
//! `X_[M']` and the non-ordinary part `X0`, together with the closed-form
//! predictions they are checked against.
//!
//! Ground truth (`is_v_admissible`, `s_rank`) goes through the relative Φ-matrix
//! only. Everything named `predict_*` is pure arithmetic on the parameters.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::fmt;
use std::sync::Arc;

use num_integer::Integer;
use serde::Serialize;

use crate::building::{
    self, for_each_lattice_in_ball, lattice_to_point, lattices_in_ball, point_to_lattice, BuildingPoint, Q,
};
use crate::error::{Error, Result};
use crate::field::{units, FieldCtx, FieldElem};
use crate::latmod::{hermite_form, phi_divisors, rel_phi_matrix, ElemDiv, Lattice, Mat2};
use crate::phimod::{m_of_v, stable_line_in, NormalForm, StableLine, VParams};
use crate::series::TruncatedSeries;

/// Default cap on the number of lattices visited by one enumeration.
pub const DEFAULT_BUDGET: u64 = 1_000_000;

/// Precision to which stable-line witnesses are expanded.
pub const WITNESS_PREC: i64 = 12;

fn floor_i(x: Q) -> i64 {
    x.floor().to_integer()
}

fn ceil_i(x: Q) -> i64 {
    x.ceil().to_integer()
}

/// Largest integer `<= bound` congruent to `m` mod 2.
fn max_congruent(bound: Q, m: i64) -> i64 {
    let n = floor_i(bound);
    if (n - m).is_odd() {
        n - 1
    } else {
        n
    }
}

/// Smallest integer `>= bound` congruent to `m` mod 2.
fn min_congruent(bound: Q, m: i64) -> i64 {
    let n = ceil_i(bound);
    if (n - m).is_odd() {
        n + 1
    } else {
        n
    }
}

fn diag_of(nf: &NormalForm) -> Result<(FieldElem, i64, FieldElem, i64)> {
    nf.diagonal()
        .ok_or_else(|| Error::UnsupportedNormalForm("this operation needs a reducible normal form".into()))
}

// ---------------------------------------------------------------------------
// Admissibility and enumeration

/// The v-admissible lattices of one normal form.
#[derive(Clone, Debug)]
pub struct AdmissibleSet {
    pub params: VParams,
    pub nf: NormalForm,
    /// Common `y` of all members, `None` when the congruence fails.
    pub m_v: Option<i64>,
    /// Sorted by `(x, y, q)`.
    pub points: Vec<Lattice>,
}

impl AdmissibleSet {
    pub fn ctx(&self) -> &Arc<FieldCtx> {
        self.nf.ctx()
    }
    pub fn len(&self) -> usize {
        self.points.len()
    }
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn divisors_ok(d: ElemDiv, v: &VParams) -> bool {
    d.d1() <= v.r1 - v.r2 && d.d2() == 2 * v.e - v.dprime()
}

/// Elementary divisors of `⟨Φ(L)⟩` relative to `L`.
pub fn phi_divisors_nf(nf: &NormalForm, l: &Lattice) -> Result<ElemDiv> {
    phi_divisors(&nf.matrix(), nf.vdet(), l)
}

/// `d1(L, ⟨ΦL⟩) <= r1 - r2` and `d2(L, ⟨ΦL⟩) = 2e - d'`.
pub fn is_v_admissible(nf: &NormalForm, v: &VParams, l: &Lattice) -> Result<bool> {
    Ok(divisors_ok(phi_divisors_nf(nf, l)?, v))
}

/// Radius of the search ball around the fixed point.
pub fn enumeration_radius(nf: &NormalForm, v: &VParams) -> i64 {
    let p = nf.p();
    let d = v.r1 - v.r2;
    if nf.is_simple() {
        ceil_i(Q::new(d, p + 1)) + 1
    } else {
        ceil_i(Q::new(d, p - 1)) + 2
    }
}

/// Visits every lattice of the search ball with its divisors, stopping after
/// `budget` lattices.
fn scan_ball<F>(nf: &NormalForm, y: i64, radius: i64, budget: u64, mut f: F) -> Result<()>
where
    F: FnMut(Lattice, Q, ElemDiv) -> Result<()>,
{
    let a = nf.matrix();
    let vdet = nf.vdet();
    let center = nf.fixed_point();
    let mut seen = 0u64;
    for_each_lattice_in_ball(&center, building::q(radius), y, |l, d| {
        seen += 1;
        if seen > budget {
            return Err(Error::BudgetExceeded { limit: budget });
        }
        let div = phi_divisors(&a, vdet, &l)?;
        f(l, d, div)
    })
}

pub fn enumerate_admissible(nf: &NormalForm, v: &VParams) -> Result<AdmissibleSet> {
    enumerate_admissible_with_budget(nf, v, DEFAULT_BUDGET)
}

/// All v-admissible lattices over the field of `nf`.
///
/// The ball is one unit wider than the distance bound; finding a member in that
/// outer shell means the bound failed and is reported as an error.
pub fn enumerate_admissible_with_budget(nf: &NormalForm, v: &VParams, budget: u64) -> Result<AdmissibleSet> {
    let m_v = m_of_v(nf, v);
    let mut points = Vec::new();
    if let Some(y) = m_v {
        let radius = enumeration_radius(nf, v);
        let shell = building::q(radius - 1);
        scan_ball(nf, y, radius, budget, |l, d, div| {
            if divisors_ok(div, v) {
                if d > shell {
                    return Err(Error::EnumerationIncomplete {
                        distance: d.to_string(),
                    });
                }
                points.push(l);
            }
            Ok(())
        })?;
        points.sort();
    }
    Ok(AdmissibleSet {
        params: *v,
        nf: nf.clone(),
        m_v,
        points,
    })
}

// ---------------------------------------------------------------------------
// Distance identities

/// Right-hand sides of the distance identities for `d(L, ⟨ΦL⟩)`, computed from
/// the coordinates of `L` and the fixed point `P` alone.
///
/// Every fixed point lies on `A_0`, so the branch point of `L` and `P` is read
/// off `v(q)`. Coordinates are scaled by `p^2 - 1` to stay in integers.
#[derive(Clone, Debug)]
pub struct DistancePredictor {
    p: i64,
    scale: i64,
    px: i64,
    py: i64,
    kind: PredKind,
}

#[derive(Clone, Copy, Debug)]
enum PredKind {
    Simple,
    SplitIso,
    SplitNonIso,
    /// `θ = (k - s)/p` scaled, and `s + t - 2k`.
    NonSplit {
        theta: Q,
        offset: i64,
    },
}

/// The part of `q` the predictions depend on.
#[derive(Clone, Copy, Debug)]
struct Branch {
    /// `v(q)`.
    w: Option<i64>,
    /// `v(q - q_0)` for the constant term `q_0`, when `v(q) ≥ 0`.
    w_rest: Option<i64>,
}

impl Branch {
    fn from_terms(mut terms: impl Iterator<Item = i64>) -> Branch {
        let w = terms.next();
        let w_rest = match w {
            Some(0) => terms.next(),
            _ => w,
        };
        Branch { w, w_rest }
    }
}

impl DistancePredictor {
    pub fn new(nf: &NormalForm) -> DistancePredictor {
        let p = nf.p();
        let scale = p * p - 1;
        let fixed = nf.fixed_point();
        let sc = |v: Q| (v * scale).to_integer();
        let kind = match nf {
            NormalForm::Simple { .. } => PredKind::Simple,
            NormalForm::SplitIso { .. } => PredKind::SplitIso,
            NormalForm::SplitNonIso { .. } => PredKind::SplitNonIso,
            NormalForm::NonSplit { s, t, gamma, .. } => {
                let k = gamma.valuation().unwrap_or(0);
                PredKind::NonSplit {
                    theta: Q::new(k - s, p),
                    offset: s + t - 2 * k,
                }
            }
        };
        DistancePredictor {
            p,
            scale,
            px: sc(fixed.x()),
            py: sc(fixed.y()),
            kind,
        }
    }

    /// Scaled tree distance to `P` from `[x, y]_q` with `x` scaled.
    fn dist(&self, x: i64, w: Option<i64>) -> i64 {
        let m1 = w.map_or(x, |w| x.min(w * self.scale));
        let m2 = w.map_or(self.px, |w| self.px.min(w * self.scale));
        (x - m1) + (self.px - m2) + (m1 - m2).abs()
    }

    fn d1_scaled(&self, x: i64, br: Branch) -> i64 {
        let p = self.p;
        let d = self.dist(x, br.w);
        // Distance from the projection of the point to P; both lie on one apartment.
        let proj = |w: Option<i64>| {
            let xp = w.map_or(x, |w| x.min(w * self.scale));
            (xp - self.px).abs()
        };
        match self.kind {
            PredKind::Simple => (p + 1) * d,
            PredKind::SplitIso => {
                // Projection to the apartments A_z with z constant.
                let (xp, wp) = match br.w {
                    Some(w) if w >= 0 => {
                        let xp = br.w_rest.map_or(x, |v| x.min(v * self.scale));
                        (xp, if w == 0 { Some(0) } else { None })
                    }
                    w => (w.map_or(x, |w| x.min(w * self.scale)), None),
                };
                (p + 1) * d - 2 * self.dist(xp, wp)
            }
            PredKind::SplitNonIso => (p + 1) * d - 2 * proj(br.w),
            PredKind::NonSplit { theta, offset } => {
                let th = theta * self.scale;
                let inner = Q::from(x) >= th && br.w.is_none_or(|w| Q::from(w * self.scale) >= th);
                if inner {
                    (p + 1) * x + offset * self.scale
                } else {
                    (p + 1) * d - 2 * proj(br.w)
                }
            }
        }
    }

    /// Predicted `d1(L, ⟨ΦL⟩)` for a lattice.
    pub fn d1(&self, l: &Lattice) -> Q {
        let n = l.n();
        let br = Branch::from_terms(l.r().terms().map(|(e, _)| e - n));
        Q::new(self.d1_scaled(l.x() * self.scale, br), self.scale)
    }

    /// Predicted `d1(L, ⟨ΦL⟩)` for any point of the building.
    pub fn d1_point(&self, pt: &BuildingPoint) -> Q {
        let br = Branch::from_terms(pt.q().terms().map(|(e, _)| e));
        Q::new(self.d1_scaled((pt.x() * self.scale).to_integer(), br), self.scale)
    }

    /// Predicted `d2(L, ⟨ΦL⟩) = (p - 1)(y - y_P)`.
    pub fn d2(&self, y: Q) -> Q {
        (y * self.scale - self.py) * (self.p - 1) / self.scale
    }
}

/// Outcome of comparing the divisors of `⟨ΦL⟩` with the predicted distances.
#[derive(Clone, Debug, Default, Serialize)]
pub struct IdentityReport {
    pub checked: u64,
    pub d1_failures: u64,
    pub d2_failures: u64,
    /// First failing lattice, if any.
    pub first_failure: Option<String>,
}

impl IdentityReport {
    pub fn ok(&self) -> bool {
        self.d1_failures == 0 && self.d2_failures == 0
    }
}

/// Checks both distance identities on every lattice of the ball of the given
/// radius around the fixed point, at determinant valuation `y`.
///
/// The left side comes from the relative Φ-matrix, the right side from
/// [`DistancePredictor`]. Lattices are streamed, so no budget applies.
pub fn check_distance_identities(nf: &NormalForm, radius: i64, y: i64) -> Result<IdentityReport> {
    let pred = DistancePredictor::new(nf);
    let a = nf.matrix();
    let vdet = nf.vdet();
    let mut rep = IdentityReport::default();
    for_each_lattice_in_ball(&nf.fixed_point(), building::q(radius), y, |l, _| {
        rep.checked += 1;
        let div = phi_divisors(&a, vdet, &l)?;
        let bad1 = pred.d1(&l) != Q::from(div.d1());
        let bad2 = pred.d2(Q::from(l.y())) != Q::from(div.a + div.b);
        rep.d1_failures += bad1 as u64;
        rep.d2_failures += bad2 as u64;
        if (bad1 || bad2) && rep.first_failure.is_none() {
            rep.first_failure = Some(l.to_string());
        }
        Ok(())
    })?;
    Ok(rep)
}

/// `d1(L, ⟨ΦL⟩)` from building distances alone.
pub fn predicted_phi_d1(nf: &NormalForm, pt: &BuildingPoint) -> Q {
    DistancePredictor::new(nf).d1_point(pt)
}

/// `d2(L, ⟨ΦL⟩) = (p - 1)(y - y_P)`.
pub fn predicted_phi_d2(nf: &NormalForm, pt: &BuildingPoint) -> Q {
    DistancePredictor::new(nf).d2(pt.y())
}

// ---------------------------------------------------------------------------
// Strata

#[derive(Clone, Debug, Serialize)]
pub struct StratumReport {
    pub divisors: ElemDiv,
    /// `⌊(a - b)/(p + 1)⌋` (simple case only).
    pub predicted_dim: Option<i64>,
    /// `p^{k n}` when the congruences predict a nonempty stratum, else 0.
    pub predicted_count: Option<u64>,
    pub predicted_nonempty: Option<bool>,
    pub actual_count: u64,
    pub members: Vec<Lattice>,
}

/// Congruence criterion for `G(a, b) ≠ ∅` in the simple case.
pub fn simple_stratum_nonempty(p: i64, s: i64, a: i64, b: i64) -> bool {
    let big = p * p - 1;
    (a + b - s).rem_euclid(p - 1) == 0
        && ((p * a + b - s).rem_euclid(big) == 0 || (p * a + b - p * s).rem_euclid(big) == 0)
}

/// Groups an admissible set by the divisors of `⟨ΦL⟩`.
///
/// In the simple case every pair `(a, b)` allowed by `v` is listed, including
/// the predicted-empty ones; reducible cases list observed strata only.
pub fn stratify(set: &AdmissibleSet) -> Result<Vec<StratumReport>> {
    let nf = &set.nf;
    let v = &set.params;
    let mut groups: BTreeMap<ElemDiv, Vec<Lattice>> = BTreeMap::new();
    for l in &set.points {
        groups.entry(phi_divisors_nf(nf, l)?).or_default().push(l.clone());
    }
    let q = set.ctx().size() as u64;
    if let NormalForm::Simple { s, .. } = nf {
        let p = nf.p();
        let total = 2 * v.e - v.dprime();
        let mut out = Vec::new();
        let mut diff = total.rem_euclid(2);
        while diff <= v.r1 - v.r2 {
            let a = (total + diff) / 2;
            let div = ElemDiv { a, b: total - a };
            let members = groups.remove(&div).unwrap_or_default();
            let n = diff.div_euclid(p + 1);
            let nonempty = set.m_v.is_some() && simple_stratum_nonempty(p, *s, div.a, div.b);
            out.push(StratumReport {
                divisors: div,
                predicted_dim: Some(n),
                predicted_count: Some(if nonempty { q.pow(n as u32) } else { 0 }),
                predicted_nonempty: Some(nonempty),
                actual_count: members.len() as u64,
                members,
            });
            diff += 2;
        }
        // Anything left over violates admissibility and shows up as a stray stratum.
        for (div, members) in groups {
            out.push(StratumReport {
                divisors: div,
                predicted_dim: None,
                predicted_count: Some(0),
                predicted_nonempty: Some(false),
                actual_count: members.len() as u64,
                members,
            });
        }
        return Ok(out);
    }
    Ok(groups
        .into_iter()
        .map(|(div, members)| StratumReport {
            divisors: div,
            predicted_dim: None,
            predicted_count: None,
            predicted_nonempty: None,
            actual_count: members.len() as u64,
            members,
        })
        .collect())
}

/// Dimension of the variety in the simple case; `-1` means empty.
pub fn simple_dimension(p: i64, s: i64, v: &VParams) -> Option<i64> {
    let m = (2 * v.e - v.dprime() - s).checked_rem(p - 1)?;
    if m != 0 {
        return None;
    }
    let mv = (2 * v.e - v.dprime() - s) / (p - 1);
    let rho = Q::new(v.r1 - v.r2, p + 1);
    let sigma = Q::new(s, p + 1);
    let eps = floor_i(rho) + floor_i(sigma) + mv;
    let signed = if eps.is_even() { sigma } else { -sigma };
    Some(floor_i(rho - signed) + floor_i(signed))
}

// ---------------------------------------------------------------------------
// Cardinality

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Cardinality {
    Empty,
    Singleton,
    Larger,
}

impl Cardinality {
    pub fn of_count(n: usize) -> Self {
        match n {
            0 => Cardinality::Empty,
            1 => Cardinality::Singleton,
            _ => Cardinality::Larger,
        }
    }
}

/// Empty / single point / more, from the closed-form criteria.
///
/// `ρ` is `r1 - r2` scaled by the distance identity of the case, `c` the point
/// whose neighborhood decides, `ξ` its distance to the nearest lattice column.
fn near_fixed_point(rho: Q, xi: Q, same_parity: bool) -> Cardinality {
    let one = building::q(1);
    let two = building::q(2);
    if same_parity {
        if rho < xi {
            Cardinality::Empty
        } else if rho < two - xi {
            Cardinality::Singleton
        } else {
            Cardinality::Larger
        }
    } else if rho < one - xi {
        Cardinality::Empty
    } else if rho < one + xi {
        Cardinality::Singleton
    } else {
        Cardinality::Larger
    }
}

/// Predicted cardinality class, or `None` for the non-split case, which has no
/// closed-form criterion.
pub fn predict_cardinality(nf: &NormalForm, v: &VParams) -> Option<Cardinality> {
    let Some(m) = m_of_v(nf, v) else {
        return Some(Cardinality::Empty);
    };
    let p = nf.p();
    let d = v.r1 - v.r2;
    match nf {
        NormalForm::Simple { s, .. } => {
            let sig = Q::new(*s, p + 1);
            let x0 = floor_i(sig);
            Some(near_fixed_point(Q::new(d, p + 1), sig - x0, (x0 - m).is_even()))
        }
        NormalForm::SplitIso { .. } | NormalForm::SplitNonIso { .. }
            if nf.diagonal().map(|x| x.1 == x.3) == Some(true) =>
        {
            let rho = Q::new(d, p - 1);
            if m.is_even() {
                Some(if rho < building::q(2) {
                    Cardinality::Singleton
                } else {
                    Cardinality::Larger
                })
            } else if rho < building::q(1) {
                Some(Cardinality::Empty)
            } else {
                Some(Cardinality::Larger)
            }
        }
        NormalForm::SplitNonIso { s, t, .. } => {
            let tau = Q::new(t - s, p - 1);
            let x0 = floor_i(tau);
            Some(near_fixed_point(Q::new(d, p - 1), tau - x0, (x0 - m).is_even()))
        }
        _ => None,
    }
}

// ---------------------------------------------------------------------------
// Ordinary components

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum ComponentLabel {
    X0,
    Ma,
    Mb,
    MaMb,
}

impl ComponentLabel {
    pub fn has_a(self) -> bool {
        matches!(self, ComponentLabel::Ma | ComponentLabel::MaMb)
    }
    pub fn has_b(self) -> bool {
        matches!(self, ComponentLabel::Mb | ComponentLabel::MaMb)
    }
}

impl fmt::Display for ComponentLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ComponentLabel::X0 => "X0",
            ComponentLabel::Ma => "X_Ma",
            ComponentLabel::Mb => "X_Mb",
            ComponentLabel::MaMb => "X_Ma+X_Mb",
        })
    }
}

/// Rank of the maximal Φ-stable submodule with `⟨Φ L1⟩ = u^{e - r1} L1`.
#[derive(Debug, Clone)]
pub struct SRank {
    pub rank: u8,
    pub label: ComponentLabel,
    /// One line per eigenvalue found, coordinates relative to the lattice basis.
    pub witnesses: Vec<StableLine>,
}

/// Which of `M_a`, `M_b` a stable line with eigenvalue `c u^{e - r1}` realizes.
fn line_label(nf: &NormalForm, v: &VParams, c: &FieldElem) -> Result<ComponentLabel> {
    match nf {
        NormalForm::Simple { .. } => Err(Error::Invariant("stable line in a simple φ-module".into())),
        NormalForm::SplitIso { .. } => Ok(ComponentLabel::Ma),
        _ => {
            let (a, s, b, _) = diag_of(nf)?;
            if a != b {
                if *c == a {
                    Ok(ComponentLabel::Ma)
                } else if *c == b {
                    Ok(ComponentLabel::Mb)
                } else {
                    Err(Error::Invariant(format!("stable line with unexpected eigenvalue {c}")))
                }
            } else if *c != a {
                Err(Error::Invariant(format!("stable line with unexpected eigenvalue {c}")))
            } else if (v.e - v.r1 - s).rem_euclid(nf.p() - 1) == 0 {
                // Equal constants: the exponent congruence tells the lines apart.
                Ok(ComponentLabel::Ma)
            } else {
                Ok(ComponentLabel::Mb)
            }
        }
    }
}

/// s-rank of a v-admissible lattice, by sweeping the eigenvalue over the field.
pub fn s_rank(nf: &NormalForm, v: &VParams, l: &Lattice) -> Result<SRank> {
    let a = nf.matrix();
    let div = phi_divisors(&a, nf.vdet(), l)?;
    let j = v.e - v.r1;
    let none = SRank {
        rank: 0,
        label: ComponentLabel::X0,
        witnesses: Vec::new(),
    };
    if div.b != j {
        return Ok(none);
    }
    let rel = rel_phi_matrix(&a, l);
    let mut witnesses = Vec::new();
    for c in units(nf.ctx()) {
        if let Some(w) = stable_line_in(&rel, &c, j, WITNESS_PREC)? {
            witnesses.push(w);
        }
    }
    if witnesses.is_empty() {
        return Ok(none);
    }
    let mut has_a = false;
    let mut has_b = false;
    for w in &witnesses {
        match line_label(nf, v, &w.c)? {
            ComponentLabel::Ma => has_a = true,
            ComponentLabel::Mb => has_b = true,
            _ => {}
        }
    }
    let label = match (has_a, has_b) {
        (true, true) => ComponentLabel::MaMb,
        (true, false) => ComponentLabel::Ma,
        _ => ComponentLabel::Mb,
    };
    let rank = if div.a == j { 2 } else { 1 };
    Ok(SRank { rank, label, witnesses })
}

#[derive(Clone, Debug)]
pub struct ComponentReport {
    pub labels: Vec<(Lattice, ComponentLabel)>,
    pub x0: Vec<Lattice>,
    /// Lattices carrying an `M_a` line (labels `Ma` and `MaMb`).
    pub ma: Vec<Lattice>,
    pub mb: Vec<Lattice>,
    /// Distinct eigenvalues seen among the stable lines.
    pub constants: Vec<FieldElem>,
}

/// Labels every member of an admissible set by its s-rank.
pub fn components(set: &AdmissibleSet) -> Result<ComponentReport> {
    let mut labels = Vec::new();
    let (mut x0, mut ma, mut mb) = (Vec::new(), Vec::new(), Vec::new());
    let mut constants: Vec<FieldElem> = Vec::new();
    for l in &set.points {
        let r = s_rank(&set.nf, &set.params, l)?;
        for w in &r.witnesses {
            if !constants.contains(&w.c) {
                constants.push(w.c.clone());
            }
        }
        match r.label {
            ComponentLabel::X0 => x0.push(l.clone()),
            lab => {
                if lab.has_a() {
                    ma.push(l.clone());
                }
                if lab.has_b() {
                    mb.push(l.clone());
                }
            }
        }
        labels.push((l.clone(), r.label));
    }
    constants.sort_by_key(|c| c.code());
    Ok(ComponentReport {
        labels,
        x0,
        ma,
        mb,
        constants,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Empty,
    Point,
    P1,
}

#[derive(Clone, Debug)]
pub struct ComponentPrediction {
    pub label: ComponentLabel,
    pub shape: Shape,
    /// The predicted rational points.
    pub points: Vec<Lattice>,
}

impl ComponentPrediction {
    pub fn count(&self) -> usize {
        self.points.len()
    }
}

fn lattice_at(ctx: &Arc<FieldCtx>, x: i64, y: i64, z: u16) -> Result<Lattice> {
    let q = TruncatedSeries::monomial(ctx, z, 0);
    point_to_lattice(&BuildingPoint::new(building::q(x), building::q(y), &q)?)
}

fn single(ctx: &Arc<FieldCtx>, label: ComponentLabel, x: Q, m: i64) -> Result<ComponentPrediction> {
    if x.is_integer() && (x.to_integer() - m).is_even() {
        Ok(ComponentPrediction {
            label,
            shape: Shape::Point,
            points: vec![lattice_at(ctx, x.to_integer(), m, 0)?],
        })
    } else {
        Ok(ComponentPrediction {
            label,
            shape: Shape::Empty,
            points: Vec::new(),
        })
    }
}

fn empty(label: ComponentLabel) -> ComponentPrediction {
    ComponentPrediction {
        label,
        shape: Shape::Empty,
        points: Vec::new(),
    }
}

/// Predicted `X_[M_a]` and `X_[M_b]` for a reducible normal form.
pub fn predict_components(nf: &NormalForm, v: &VParams) -> Result<[ComponentPrediction; 2]> {
    let (_, s, _, t) = diag_of(nf)?;
    let ctx = nf.ctx();
    let p = nf.p();
    let Some(m) = m_of_v(nf, v) else {
        return Ok([empty(ComponentLabel::Ma), empty(ComponentLabel::Mb)]);
    };
    let rho = Q::new(v.r1 - v.r2, p - 1);
    let tau = Q::new(t - s, p - 1);
    match nf {
        NormalForm::SplitIso { .. } => {
            let ma = if !rho.is_integer() || (rho.to_integer() + m).is_odd() {
                empty(ComponentLabel::Ma)
            } else if rho.to_integer() == 0 {
                ComponentPrediction {
                    label: ComponentLabel::Ma,
                    shape: Shape::Point,
                    points: vec![lattice_at(ctx, 0, m, 0)?],
                }
            } else {
                let r = rho.to_integer();
                let mut points = vec![lattice_at(ctx, -r, m, 0)?];
                for z in 0..ctx.size() as u16 {
                    points.push(lattice_at(ctx, r, m, z)?);
                }
                points.sort();
                ComponentPrediction {
                    label: ComponentLabel::Ma,
                    shape: Shape::P1,
                    points,
                }
            };
            Ok([ma, empty(ComponentLabel::Mb)])
        }
        NormalForm::SplitNonIso { .. } => Ok([
            single(ctx, ComponentLabel::Ma, tau - rho, m)?,
            single(ctx, ComponentLabel::Mb, tau + rho, m)?,
        ]),
        NormalForm::NonSplit { .. } => Ok([
            single(ctx, ComponentLabel::Ma, tau - rho, m)?,
            empty(ComponentLabel::Mb),
        ]),
        NormalForm::Simple { .. } => unreachable!(),
    }
}

// ---------------------------------------------------------------------------
// Decomposition of X0

/// A Schubert ball: lattices at `y = m(v)` within `radius` of `center`.
#[derive(Clone, Debug)]
pub struct SchubertBall {
    pub name: String,
    pub center: BuildingPoint,
    pub radius: i64,
    /// Listed as an irreducible component.
    pub flagged: bool,
}

impl SchubertBall {
    pub fn points(&self) -> Result<Vec<Lattice>> {
        if self.radius < 0 {
            return Ok(Vec::new());
        }
        lattices_in_ball(&self.center, building::q(self.radius), floor_i(self.center.y()))
    }

    /// Point count as a sum over Schubert cells: the sphere of radius `d >= 1`
    /// is `A^d ⊔ A^{d-1}`.
    pub fn cell_count(&self, field_size: u64) -> u64 {
        let c = self.center.x();
        let lattice_center = c.is_integer() && (c.to_integer() - floor_i(self.center.y())).is_even();
        let mut total = 0;
        for d in 0..=self.radius {
            if d.is_even() != lattice_center {
                continue;
            }
            total += if d == 0 {
                1
            } else {
                field_size.pow(d as u32) + field_size.pow(d as u32 - 1)
            };
        }
        total
    }
}

/// The decomposition parameters of one case, for reports.
#[derive(Clone, Debug, Default, Serialize)]
pub struct X0Constants {
    pub n: i64,
    pub l: Option<i64>,
    pub n_plus: Option<i64>,
    pub n_minus: Option<i64>,
    pub l_plus: Option<i64>,
    pub l_minus: Option<i64>,
    pub x1: Option<i64>,
}

#[derive(Clone, Debug)]
pub struct X0Decomposition {
    pub constants: X0Constants,
    pub balls: Vec<SchubertBall>,
}

fn a0_point(ctx: &Arc<FieldCtx>, x: i64, m: i64) -> BuildingPoint {
    BuildingPoint::on_a0(ctx, building::q(x), building::q(m))
}

/// Tubes `Z_j` along one half line: centers `start ± (p+1) j`, radius
/// `r0 - (p-1) j`, while the radius stays nonnegative.
fn tubes(
    ctx: &Arc<FieldCtx>,
    name: &str,
    start: i64,
    sign: i64,
    r0: i64,
    m: i64,
    branch: Option<u16>,
    p: i64,
) -> Result<Vec<SchubertBall>> {
    let mut out = Vec::new();
    let mut j = 0;
    loop {
        let radius = r0 - (p - 1) * j;
        if radius < 0 {
            break;
        }
        let x = start + sign * (p + 1) * j;
        let center = match branch {
            Some(z) if z != 0 => {
                BuildingPoint::new(building::q(x), building::q(m), &TruncatedSeries::monomial(ctx, z, 0))?
            }
            _ => a0_point(ctx, x, m),
        };
        out.push(SchubertBall {
            name: format!("{name}_{j}"),
            center,
            radius,
            flagged: true,
        });
        j += 1;
    }
    Ok(out)
}

fn union_points(balls: &[&SchubertBall]) -> Result<HashSet<Lattice>> {
    let mut out = HashSet::new();
    for b in balls {
        out.extend(b.points()?);
    }
    Ok(out)
}

/// Schubert balls whose union is `X0`, with irreducible components flagged.
pub fn predict_x0_decomposition(nf: &NormalForm, v: &VParams) -> Result<X0Decomposition> {
    let (_, s, _, t) = diag_of(nf)?;
    let ctx = nf.ctx();
    let p = nf.p();
    let big = p + 1;
    let Some(m) = m_of_v(nf, v) else {
        return Ok(X0Decomposition {
            constants: X0Constants::default(),
            balls: Vec::new(),
        });
    };
    let d = v.r1 - v.r2;
    let mut consts = X0Constants::default();
    let mut balls = Vec::new();
    match nf {
        NormalForm::SplitIso { .. } | NormalForm::SplitNonIso { .. } if s == t => {
            let iso = matches!(nf, NormalForm::SplitIso { .. });
            let n = if iso {
                max_congruent(Q::new(d + 2, big), m)
            } else {
                max_congruent(Q::new(d, big), m)
            };
            let l = ceil_i(Q::new((n + 2) * big - d, 2));
            consts.n = n;
            consts.l = Some(l);
            let exceptional = if iso { l == 2 } else { l == 1 };
            if n >= 0 {
                balls.push(SchubertBall {
                    name: "Z".into(),
                    center: a0_point(ctx, 0, m),
                    radius: n,
                    flagged: !exceptional,
                });
            }
            let r0 = n + 2 - l;
            if iso {
                for z in 0..ctx.size() as u16 {
                    balls.extend(tubes(
                        ctx,
                        &format!("Z^{}", ctx.format_code(z)),
                        l,
                        1,
                        r0,
                        m,
                        Some(z),
                        p,
                    )?);
                }
                balls.extend(tubes(ctx, "Z^inf", -l, -1, r0, m, None, p)?);
            } else {
                balls.extend(tubes(ctx, "Z+", l, 1, r0, m, None, p)?);
                balls.extend(tubes(ctx, "Z-", -l, -1, r0, m, None, p)?);
            }
        }
        NormalForm::SplitNonIso { .. } => {
            let tau = Q::new(t - s, p - 1);
            let x0 = floor_i(tau);
            let dq = building::q(d);
            let np = max_congruent(tau + (dq + (building::q(x0 + 1) - tau) * 2) / big, m);
            let nm = min_congruent(tau - (dq + (tau - x0) * 2) / big, m);
            let lp = ceil_i(((building::q(np + 2) - tau) * big - dq) / 2 + tau);
            let lm = floor_i(((building::q(nm - 2) - tau) * big + dq) / 2 + tau);
            let (x1, n) = ((np + nm) / 2, (np - nm) / 2);
            consts = X0Constants {
                n,
                l: None,
                n_plus: Some(np),
                n_minus: Some(nm),
                l_plus: Some(lp),
                l_minus: Some(lm),
                x1: Some(x1),
            };
            let plus = tubes(ctx, "Z+", lp, 1, np + 2 - lp, m, None, p)?;
            let minus = tubes(ctx, "Z-", lm, -1, lm + 2 - nm, m, None, p)?;
            if n >= 0 {
                let z = SchubertBall {
                    name: "Z".into(),
                    center: a0_point(ctx, x1, m),
                    radius: n,
                    flagged: true,
                };
                let first: Vec<&SchubertBall> = plus.iter().take(1).chain(minus.iter().take(1)).collect();
                let covered = union_points(&first)?;
                let inside = z.points()?.iter().all(|l| covered.contains(l));
                balls.push(SchubertBall { flagged: !inside, ..z });
            }
            balls.extend(plus);
            balls.extend(minus);
        }
        NormalForm::NonSplit { gamma, .. } => {
            let k = gamma.valuation().unwrap_or(0);
            let tau = Q::new(t - s, p - 1);
            let x0 = ceil_i(Q::new(k - s, p)) - 1;
            let dq = building::q(d);
            let np = max_congruent(Q::new(d - s - t + 2 * k, big), m);
            let nm = min_congruent(tau - (dq + (tau - x0) * 2) / big, m);
            let lm = floor_i(((building::q(nm - 2) - tau) * big + dq) / 2 + tau);
            let (x1, n) = ((np + nm) / 2, (np - nm) / 2);
            consts = X0Constants {
                n,
                l: None,
                n_plus: Some(np),
                n_minus: Some(nm),
                l_plus: None,
                l_minus: Some(lm),
                x1: Some(x1),
            };
            let minus = tubes(ctx, "Z-", lm, -1, lm + 2 - nm, m, None, p)?;
            if n >= 0 {
                let z = SchubertBall {
                    name: "Z".into(),
                    center: a0_point(ctx, x1, m),
                    radius: n,
                    flagged: true,
                };
                let first: Vec<&SchubertBall> = minus.iter().take(1).collect();
                let covered = union_points(&first)?;
                let inside = z.points()?.iter().all(|l| covered.contains(l));
                balls.push(SchubertBall { flagged: !inside, ..z });
            }
            balls.extend(minus);
        }
        NormalForm::Simple { .. } | NormalForm::SplitIso { .. } => unreachable!(),
    }
    Ok(X0Decomposition {
        constants: consts,
        balls,
    })
}

/// Outcome of comparing a decomposition with the enumerated `X0`.
///
/// The balls can also pick up ordinary lattices: a tube of radius 0 may be
/// exactly the ordinary component. Such lattices are reported in `extra` and,
/// when they are among the predicted ordinary points, do not count against
/// [`DecompositionCheck::ok`]. [`DecompositionCheck::ok_literal`] asks for the
/// union to be `X0` on the nose.
#[derive(Clone, Debug, Serialize)]
pub struct DecompositionCheck {
    /// Lattices of `X0` in no ball.
    pub missing: Vec<Lattice>,
    /// Lattices in some ball but not in `X0`.
    pub extra: Vec<Lattice>,
    /// `extra` lies inside the predicted ordinary components.
    pub extra_ordinary: bool,
    /// Every ball's point count equals its Schubert cell count.
    pub counts_match: bool,
    /// Balls made of predicted ordinary lattices only.
    pub ordinary_balls: Vec<String>,
    /// Balls meeting both `X0` and the ordinary locus.
    pub mixed_balls: Vec<String>,
    /// Flagged balls contained in the union of the other flagged balls, among
    /// those that are not ordinary.
    pub redundant_flagged: Vec<String>,
    /// Unflagged balls not covered by the flagged ones, same restriction.
    /// Informational: an omitted `Z` that is still needed shows up here.
    pub uncovered_unflagged: Vec<String>,
}

impl DecompositionCheck {
    fn structure_ok(&self) -> bool {
        self.counts_match && self.redundant_flagged.is_empty()
    }

    /// Union of the balls equals `X0`, flags are irredundant.
    pub fn ok_literal(&self) -> bool {
        self.missing.is_empty() && self.extra.is_empty() && self.ordinary_balls.is_empty() && self.structure_ok()
    }

    /// Same, after removing the predicted ordinary points from the union.
    pub fn ok(&self) -> bool {
        self.missing.is_empty() && self.extra_ordinary && self.mixed_balls.is_empty() && self.structure_ok()
    }
}

/// Compares a decomposition with the enumerated `X0`. `ordinary` holds the
/// predicted points of `X_[M_a]` and `X_[M_b]`.
pub fn check_decomposition(
    dec: &X0Decomposition,
    x0: &[Lattice],
    ordinary: &[Lattice],
    field_size: u64,
) -> Result<DecompositionCheck> {
    let sets: Vec<HashSet<Lattice>> = dec
        .balls
        .iter()
        .map(|b| b.points().map(|v| v.into_iter().collect()))
        .collect::<Result<_>>()?;
    let union: HashSet<Lattice> = sets.iter().flatten().cloned().collect();
    let target: HashSet<Lattice> = x0.iter().cloned().collect();
    let ord: HashSet<Lattice> = ordinary.iter().cloned().collect();
    let mut missing: Vec<Lattice> = target.difference(&union).cloned().collect();
    let mut extra: Vec<Lattice> = union.difference(&target).cloned().collect();
    missing.sort();
    extra.sort();
    let extra_ordinary = extra.iter().all(|l| ord.contains(l));
    let counts_match = dec
        .balls
        .iter()
        .zip(&sets)
        .all(|(b, s)| b.radius < 0 || s.len() as u64 == b.cell_count(field_size));
    let mut ordinary_balls = Vec::new();
    let mut mixed_balls = Vec::new();
    let mut keep = Vec::new();
    for (b, set) in dec.balls.iter().zip(&sets) {
        let n_ord = set.iter().filter(|l| ord.contains(l)).count();
        if n_ord == 0 {
            keep.push((b, set));
        } else if n_ord == set.len() {
            ordinary_balls.push(b.name.clone());
        } else {
            mixed_balls.push(b.name.clone());
            keep.push((b, set));
        }
    }
    let mut redundant_flagged = Vec::new();
    let mut uncovered_unflagged = Vec::new();
    for (i, (b, set)) in keep.iter().enumerate() {
        let others: HashSet<&Lattice> = keep
            .iter()
            .enumerate()
            .filter(|(j, (o, _))| *j != i && o.flagged)
            .flat_map(|(_, (_, s))| s.iter())
            .collect();
        let covered = set.iter().all(|l| others.contains(l));
        if b.flagged && covered {
            redundant_flagged.push(b.name.clone());
        }
        if !b.flagged && !covered {
            uncovered_unflagged.push(b.name.clone());
        }
    }
    Ok(DecompositionCheck {
        missing,
        extra,
        extra_ordinary,
        counts_match,
        ordinary_balls,
        mixed_balls,
        redundant_flagged,
        uncovered_unflagged,
    })
}

// ---------------------------------------------------------------------------
// P¹ families and connectivity

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyMode {
    /// `⟨b1, z u^{-1} b1 + b2⟩` and `⟨u^{-1} b1, u b2⟩`.
    Inner,
    /// `⟨u^{n-1} b1, u^{-(n-1)}(z u^{-1} b1 + b2)⟩` and `⟨u^{-n} b1, u^n b2⟩`.
    Outer1(i64),
    /// `⟨u^n b1, u^{-n}(z b1 + b2)⟩` and `⟨u^{-n} b1, u^n b2⟩`.
    Outer2(i64),
}

fn span(b1: &[TruncatedSeries; 2], b2: &[TruncatedSeries; 2]) -> Result<Lattice> {
    let m: Mat2 = [[b1[0].clone(), b2[0].clone()], [b1[1].clone(), b2[1].clone()]];
    hermite_form(&m)
}

fn comb(
    c1: &TruncatedSeries,
    b1: &[TruncatedSeries; 2],
    c2: &TruncatedSeries,
    b2: &[TruncatedSeries; 2],
) -> [TruncatedSeries; 2] {
    [&(c1 * &b1[0]) + &(c2 * &b2[0]), &(c1 * &b1[1]) + &(c2 * &b2[1])]
}

/// The `q + 1` rational points of a ℙ¹ family of lattices (affine part in code
/// order, then the point at infinity).
pub fn p1_family(b1: &[TruncatedSeries; 2], b2: &[TruncatedSeries; 2], mode: FamilyMode) -> Result<Vec<Lattice>> {
    let ctx = b1[0].ctx().clone();
    let u = |e: i64| TruncatedSeries::u_pow(&ctx, e);
    let one = u(0);
    let mut out = Vec::new();
    for z in 0..ctx.size() as u16 {
        let zs = TruncatedSeries::monomial(&ctx, z, 0);
        let l = match mode {
            FamilyMode::Inner => span(b1, &comb(&(&zs * &u(-1)), b1, &one, b2))?,
            FamilyMode::Outer1(n) => {
                let inner = comb(&(&zs * &u(-1)), b1, &one, b2);
                span(
                    &comb(&u(n - 1), b1, &TruncatedSeries::zero(&ctx), b2),
                    &comb(&u(-(n - 1)), &inner, &TruncatedSeries::zero(&ctx), b2),
                )?
            }
            FamilyMode::Outer2(n) => {
                let inner = comb(&zs, b1, &one, b2);
                span(
                    &comb(&u(n), b1, &TruncatedSeries::zero(&ctx), b2),
                    &comb(&u(-n), &inner, &TruncatedSeries::zero(&ctx), b2),
                )?
            }
        };
        out.push(l);
    }
    let zero = TruncatedSeries::zero(&ctx);
    let inf = match mode {
        FamilyMode::Inner => span(&comb(&u(-1), b1, &zero, b2), &comb(&zero, b1, &u(1), b2))?,
        FamilyMode::Outer1(n) | FamilyMode::Outer2(n) => {
            span(&comb(&u(-n), b1, &zero, b2), &comb(&zero, b1, &u(n), b2))?
        }
    };
    out.push(inf);
    Ok(out)
}

/// Columns of the Hermite basis of `l`.
pub fn basis_vectors(l: &Lattice) -> ([TruncatedSeries; 2], [TruncatedSeries; 2]) {
    let b = l.basis();
    ([b[0][0].clone(), b[1][0].clone()], [b[0][1].clone(), b[1][1].clone()])
}

/// The family of lattices adjacent to a non-lattice vertex of the tree.
pub fn star(vertex: &BuildingPoint) -> Result<Vec<Lattice>> {
    let mut out = building::neighbors(vertex)?
        .iter()
        .map(point_to_lattice)
        .collect::<Result<Vec<_>>>()?;
    out.sort();
    Ok(out)
}

/// A chain of ℙ¹ families inside a point set linking everything to a base point.
#[derive(Clone, Debug)]
pub struct Connectivity {
    pub base: Option<Lattice>,
    pub connected: bool,
    /// Non-lattice vertices whose whole family lies in the set and was used.
    pub families: Vec<BuildingPoint>,
    pub unreached: Vec<Lattice>,
}

/// Breadth-first search from the least point, moving only through ℙ¹ families
/// contained in `points`.
pub fn connectivity_certificate(points: &[Lattice]) -> Result<Connectivity> {
    let set: HashSet<Lattice> = points.iter().cloned().collect();
    let mut sorted: Vec<Lattice> = points.to_vec();
    sorted.sort();
    let Some(base) = sorted.first().cloned() else {
        return Ok(Connectivity {
            base: None,
            connected: true,
            families: Vec::new(),
            unreached: Vec::new(),
        });
    };
    let mut reached: HashSet<Lattice> = HashSet::new();
    let mut tried: HashMap<BuildingPoint, bool> = HashMap::new();
    let mut families = Vec::new();
    let mut queue = VecDeque::new();
    reached.insert(base.clone());
    queue.push_back(base.clone());
    while let Some(l) = queue.pop_front() {
        for vtx in building::neighbors(&lattice_to_point(&l))? {
            if tried.contains_key(&vtx) {
                continue;
            }
            let fam = star(&vtx)?;
            let inside = fam.iter().all(|x| set.contains(x));
            tried.insert(vtx.clone(), inside);
            if !inside {
                continue;
            }
            families.push(vtx);
            for x in fam {
                if reached.insert(x.clone()) {
                    queue.push_back(x);
                }
            }
        }
    }
    let unreached: Vec<Lattice> = sorted.into_iter().filter(|l| !reached.contains(l)).collect();
    Ok(Connectivity {
        base: Some(base),
        connected: unreached.is_empty(),
        families,
        unreached,
    })
}

// ---------------------------------------------------------------------------
// Relaxed admissibility

/// Whether the relaxed predicate is claimed to agree with v-admissibility.
pub fn relaxed_applies(v: &VParams) -> bool {
    v.r1 == v.e || v.r2 == 0
}

/// Lattices with `0 <= b <= a <= e`, `a + b = 2e - d'` and `a - b <= max(d', 2e - d')`.
pub fn enumerate_relaxed(nf: &NormalForm, v: &VParams) -> Result<Vec<Lattice>> {
    let Some(y) = m_of_v(nf, v) else {
        return Ok(Vec::new());
    };
    let dp = v.dprime();
    let total = 2 * v.e - dp;
    let wide = dp.max(total);
    let p = nf.p();
    let radius = if nf.is_simple() {
        ceil_i(Q::new(wide, p + 1)) + 1
    } else {
        ceil_i(Q::new(wide, p - 1)) + 2
    };
    let mut out = Vec::new();
    scan_ball(nf, y, radius, DEFAULT_BUDGET, |l, _, div| {
        if div.d2() == total && div.b >= 0 && div.a <= v.e && div.d1() <= wide {
            out.push(l);
        }
        Ok(())
    })?;
    out.sort();
    Ok(out)
}

/// `(applies, relaxed set == admissible set)`.
pub fn check_relaxed(nf: &NormalForm, v: &VParams) -> Result<(bool, bool)> {
    let strict = enumerate_admissible(nf, v)?.points;
    let relaxed = enumerate_relaxed(nf, v)?;
    Ok((relaxed_applies(v), strict == relaxed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldCtx;

    fn simple(p: u32, k: u32, s: i64) -> NormalForm {
        let ctx = FieldCtx::new(p, k).unwrap();
        NormalForm::simple(&FieldElem::one(&ctx), s).unwrap()
    }

    fn split(p: u32, k: u32, a: u16, s: i64, b: u16, t: i64) -> NormalForm {
        let ctx = FieldCtx::new(p, k).unwrap();
        NormalForm::split(&FieldElem::from_code(&ctx, a), s, &FieldElem::from_code(&ctx, b), t).unwrap()
    }

    fn names(v: &[Lattice]) -> Vec<String> {
        v.iter().map(|l| lattice_to_point(l).to_string()).collect()
    }

    #[test]
    fn simple_singleton() {
        let nf = simple(3, 1, 2);
        let v = VParams::new(5, 4, 0).unwrap();
        assert_eq!(m_of_v(&nf, &v), Some(2));
        let set = enumerate_admissible(&nf, &v).unwrap();
        assert_eq!(names(&set.points), vec!["[0, 2]_0"]);
        let far = lattice_at(nf.ctx(), 2, 2, 0).unwrap();
        assert!(!is_v_admissible(&nf, &v, &far).unwrap());
        assert_eq!(predict_cardinality(&nf, &v), Some(Cardinality::Singleton));
        assert_eq!(simple_dimension(3, 2, &v), Some(0));
    }

    #[test]
    fn simple_p1() {
        let nf = simple(3, 1, 2);
        let v = VParams::new(7, 6, 0).unwrap();
        let set = enumerate_admissible(&nf, &v).unwrap();
        assert_eq!(
            names(&set.points),
            vec!["[-1, 3]_0", "[1, 3]_0", "[1, 3]_1", "[1, 3]_2"]
        );
        assert_eq!(simple_dimension(3, 2, &v), Some(1));
        let strata = stratify(&set).unwrap();
        for st in &strata {
            assert_eq!(st.predicted_count, Some(st.actual_count), "{:?}", st.divisors);
        }
    }

    #[test]
    fn stratum_congruences() {
        assert!(simple_stratum_nonempty(3, 2, 2, 0));
        assert!(!simple_stratum_nonempty(3, 2, 1, 0));
    }

    #[test]
    fn split_iso_ordinary_p1() {
        // p = 3, s = 0, (r1 - r2)/(p - 1) = 2, m(v) even.
        let nf = split(3, 1, 1, 0, 1, 0);
        let v = VParams::new(6, 4, 0).unwrap();
        assert_eq!(m_of_v(&nf, &v), Some(4));
        let set = enumerate_admissible(&nf, &v).unwrap();
        let comp = components(&set).unwrap();
        let [ma, mb] = predict_components(&nf, &v).unwrap();
        assert_eq!(ma.shape, Shape::P1);
        assert_eq!(comp.ma, ma.points);
        assert_eq!(mb.shape, Shape::Empty);
        assert!(comp.mb.is_empty());
        // The witness from the ordinary line construction.
        let l = lattice_at(nf.ctx(), 2, 4, 1).unwrap();
        let r = s_rank(&nf, &v, &l).unwrap();
        assert_eq!(r.rank, 1);
        assert_eq!(r.label, ComponentLabel::Ma);
    }

    #[test]
    fn noniso_points() {
        let nf = split(3, 1, 1, 0, 1, 1);
        for (e, r1, r2) in [(3, 3, 0), (4, 3, 0), (5, 4, 1), (6, 5, 0)] {
            let v = VParams::new(e, r1, r2).unwrap();
            let set = enumerate_admissible(&nf, &v).unwrap();
            let comp = components(&set).unwrap();
            let [ma, mb] = predict_components(&nf, &v).unwrap();
            assert_eq!(comp.ma, ma.points, "{e} {r1} {r2}");
            assert_eq!(comp.mb, mb.points, "{e} {r1} {r2}");
        }
    }

    #[test]
    fn simple_has_no_ordinary_lattices() {
        let nf = simple(3, 1, 2);
        let v = VParams::new(7, 6, 0).unwrap();
        let set = enumerate_admissible(&nf, &v).unwrap();
        for l in &set.points {
            assert_eq!(s_rank(&nf, &v, l).unwrap().rank, 0);
        }
    }

    #[test]
    fn inner_family_is_star() {
        let ctx = FieldCtx::new(3, 1).unwrap();
        let (b1, b2) = basis_vectors(&Lattice::standard(&ctx));
        let mut fam = p1_family(&b1, &b2, FamilyMode::Inner).unwrap();
        fam.sort();
        assert_eq!(fam.len(), 4);
        let v = BuildingPoint::on_a0(&ctx, building::q(-1), building::q(0));
        assert_eq!(fam, star(&v).unwrap());
        let y0 = fam[0].y();
        assert!(fam.iter().all(|l| l.y() == y0));
    }

    #[test]
    fn outer_families_share_y() {
        let ctx = FieldCtx::new(3, 1).unwrap();
        let (b1, b2) = basis_vectors(&Lattice::standard(&ctx));
        for mode in [FamilyMode::Outer1(2), FamilyMode::Outer2(2)] {
            let fam = p1_family(&b1, &b2, mode).unwrap();
            assert_eq!(fam.len(), 4);
            assert!(fam.iter().all(|l| l.y() == 0));
        }
    }

    #[test]
    fn relaxed_agrees_when_r2_zero() {
        let nf = simple(3, 1, 2);
        let v = VParams::new(7, 6, 0).unwrap();
        assert_eq!(check_relaxed(&nf, &v).unwrap(), (true, true));
    }

    #[test]
    fn congruence_failure_is_empty() {
        let nf = simple(3, 1, 2);
        let v = VParams::new(3, 3, 0).unwrap();
        assert_eq!(m_of_v(&nf, &v), None);
        assert!(enumerate_admissible(&nf, &v).unwrap().is_empty());
    }
}
