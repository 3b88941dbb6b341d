//! Truncated Laurent series over `F_{p^k}` with explicit precision tracking.
//!
//! A series is `sum_{i >= ord} c_i u^i + O(u^prec)`. An absent precision marks an
//! exact Laurent polynomial. The Frobenius `phi` sends `u` to `u^p` and leaves
//! coefficients alone.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::field::{same_ctx, Code, FieldCtx, FieldElem};

/// Relative precision used when inverting an exact non-monomial series.
pub const DEFAULT_INV_REL_PREC: i64 = 64;

type Coeffs = SmallVec<[Code; 32]>;

#[derive(Clone)]
pub struct TruncatedSeries {
    ctx: Arc<FieldCtx>,
    /// Exponent of `coeffs[0]`. For a zero series: its precision, or 0 if exact.
    ord: i64,
    /// Nonzero first and last entries, or empty.
    coeffs: Coeffs,
    prec: Option<i64>,
}

fn min_prec(a: Option<i64>, b: Option<i64>) -> Option<i64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

impl TruncatedSeries {
    fn normalized(ctx: Arc<FieldCtx>, mut ord: i64, mut coeffs: Coeffs, prec: Option<i64>) -> Self {
        if let Some(p) = prec {
            let keep = (p - ord).max(0) as usize;
            if coeffs.len() > keep {
                coeffs.truncate(keep);
            }
        }
        while coeffs.last() == Some(&0) {
            coeffs.pop();
        }
        let lead = coeffs.iter().position(|&c| c != 0).unwrap_or(coeffs.len());
        if lead == coeffs.len() {
            coeffs.clear();
            ord = prec.unwrap_or(0);
        } else if lead > 0 {
            coeffs.drain(..lead);
            ord += lead as i64;
        }
        TruncatedSeries { ctx, ord, coeffs, prec }
    }

    /// Builds a series from coefficients starting at exponent `ord`.
    pub fn from_codes(ctx: &Arc<FieldCtx>, ord: i64, coeffs: &[Code], prec: Option<i64>) -> Self {
        Self::normalized(ctx.clone(), ord, coeffs.iter().copied().collect(), prec)
    }

    /// Builds a series from `(exponent, coefficient)` pairs; repeated exponents add up.
    pub fn from_terms(ctx: &Arc<FieldCtx>, terms: &[(i64, Code)], prec: Option<i64>) -> Self {
        if terms.is_empty() {
            return Self::normalized(ctx.clone(), 0, Coeffs::new(), prec);
        }
        let lo = terms.iter().map(|t| t.0).min().unwrap();
        let hi = terms.iter().map(|t| t.0).max().unwrap();
        let mut c: Coeffs = SmallVec::from_elem(0, (hi - lo + 1) as usize);
        for &(e, v) in terms {
            let i = (e - lo) as usize;
            c[i] = ctx.add(c[i], v);
        }
        Self::normalized(ctx.clone(), lo, c, prec)
    }

    pub fn zero(ctx: &Arc<FieldCtx>) -> Self {
        Self::normalized(ctx.clone(), 0, Coeffs::new(), None)
    }

    /// `O(u^prec)`.
    pub fn zero_to(ctx: &Arc<FieldCtx>, prec: i64) -> Self {
        Self::normalized(ctx.clone(), prec, Coeffs::new(), Some(prec))
    }

    pub fn one(ctx: &Arc<FieldCtx>) -> Self {
        Self::monomial(ctx, 1, 0)
    }

    /// Exact `c u^e`.
    pub fn monomial(ctx: &Arc<FieldCtx>, c: Code, e: i64) -> Self {
        Self::from_codes(ctx, e, &[c], None)
    }

    pub fn monomial_elem(c: &FieldElem, e: i64) -> Self {
        Self::monomial(c.ctx(), c.code(), e)
    }

    /// Exact `u^e`.
    pub fn u_pow(ctx: &Arc<FieldCtx>, e: i64) -> Self {
        Self::monomial(ctx, 1, e)
    }

    pub fn constant(c: &FieldElem) -> Self {
        Self::monomial(c.ctx(), c.code(), 0)
    }

    pub fn ctx(&self) -> &Arc<FieldCtx> {
        &self.ctx
    }

    pub fn prec(&self) -> Option<i64> {
        self.prec
    }

    pub fn is_exact(&self) -> bool {
        self.prec.is_none()
    }

    /// No nonzero coefficient is known (exact zero or `O(u^N)`).
    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_exact_zero(&self) -> bool {
        self.coeffs.is_empty() && self.prec.is_none()
    }

    /// Valuation, or `None` for `+∞` when no nonzero coefficient is known.
    pub fn valuation(&self) -> Option<i64> {
        if self.coeffs.is_empty() {
            None
        } else {
            Some(self.ord)
        }
    }

    /// Valuation that cannot change under refinement.
    pub fn certified_valuation(&self) -> Result<Option<i64>> {
        match (self.coeffs.is_empty(), self.prec) {
            (true, Some(p)) => Err(Error::InsufficientPrecision {
                needed: p + 1,
                available: p,
            }),
            (true, None) => Ok(None),
            _ => Ok(Some(self.ord)),
        }
    }

    /// Lower bound for the valuation: the valuation, or the precision for `O(u^N)`.
    fn val_bound(&self) -> Option<i64> {
        if self.coeffs.is_empty() {
            self.prec
        } else {
            Some(self.ord)
        }
    }

    /// Exponent just past the last stored coefficient.
    pub fn top(&self) -> i64 {
        self.ord + self.coeffs.len() as i64
    }

    pub fn coefficient_code(&self, e: i64) -> Result<Code> {
        if let Some(p) = self.prec {
            if e >= p {
                return Err(Error::InsufficientPrecision {
                    needed: e + 1,
                    available: p,
                });
            }
        }
        if self.coeffs.is_empty() || e < self.ord || e >= self.top() {
            return Ok(0);
        }
        Ok(self.coeffs[(e - self.ord) as usize])
    }

    pub fn coefficient(&self, e: i64) -> Result<FieldElem> {
        Ok(FieldElem::from_code(&self.ctx, self.coefficient_code(e)?))
    }

    /// Leading coefficient code; zero series give 0.
    pub fn lead_code(&self) -> Code {
        self.coeffs.first().copied().unwrap_or(0)
    }

    /// Nonzero terms `(exponent, code)` in increasing exponent.
    pub fn terms(&self) -> impl Iterator<Item = (i64, Code)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0)
            .map(move |(i, &c)| (self.ord + i as i64, c))
    }

    /// Lowest stored exponent and the dense coefficients from there on.
    pub fn raw(&self) -> (i64, &[Code]) {
        (self.ord, &self.coeffs)
    }

    /// True for an exact single-term series.
    pub fn is_monomial(&self) -> bool {
        self.prec.is_none() && self.coeffs.len() == 1
    }

    fn check(&self, o: &Self) -> Result<()> {
        if same_ctx(&self.ctx, &o.ctx) {
            Ok(())
        } else {
            Err(Error::ContextMismatch)
        }
    }

    pub fn checked_add(&self, o: &Self) -> Result<Self> {
        self.check(o)?;
        Ok(self.add_impl(o, false))
    }

    pub fn checked_sub(&self, o: &Self) -> Result<Self> {
        self.check(o)?;
        Ok(self.add_impl(o, true))
    }

    fn add_impl(&self, o: &Self, negate: bool) -> Self {
        let prec = min_prec(self.prec, o.prec);
        let ctx = &self.ctx;
        if o.coeffs.is_empty() {
            return Self::normalized(ctx.clone(), self.ord, self.coeffs.clone(), prec);
        }
        if self.coeffs.is_empty() {
            let c = if negate {
                o.coeffs.iter().map(|&x| ctx.neg(x)).collect()
            } else {
                o.coeffs.clone()
            };
            return Self::normalized(ctx.clone(), o.ord, c, prec);
        }
        let lo = self.ord.min(o.ord);
        let mut hi = self.top().max(o.top());
        if let Some(p) = prec {
            hi = hi.min(p);
        }
        if hi <= lo {
            return Self::normalized(ctx.clone(), lo, Coeffs::new(), prec);
        }
        let mut c: Coeffs = SmallVec::from_elem(0, (hi - lo) as usize);
        for (i, &x) in self.coeffs.iter().enumerate() {
            let j = self.ord + i as i64 - lo;
            if j < c.len() as i64 {
                c[j as usize] = x;
            }
        }
        for (i, &x) in o.coeffs.iter().enumerate() {
            let j = o.ord + i as i64 - lo;
            if j < c.len() as i64 {
                let y = if negate { ctx.neg(x) } else { x };
                c[j as usize] = ctx.add(c[j as usize], y);
            }
        }
        Self::normalized(ctx.clone(), lo, c, prec)
    }

    pub fn checked_mul(&self, o: &Self) -> Result<Self> {
        self.check(o)?;
        let ctx = &self.ctx;
        if self.is_exact_zero() || o.is_exact_zero() {
            return Ok(Self::zero(ctx));
        }
        let va = self.val_bound().unwrap();
        let vb = o.val_bound().unwrap();
        let prec = min_prec(self.prec.map(|pa| pa + vb), o.prec.map(|pb| pb + va));
        if self.coeffs.is_empty() || o.coeffs.is_empty() {
            return Ok(Self::normalized(ctx.clone(), 0, Coeffs::new(), prec));
        }
        let lo = self.ord + o.ord;
        let mut len = self.coeffs.len() + o.coeffs.len() - 1;
        if let Some(p) = prec {
            len = len.min((p - lo).max(0) as usize);
        }
        let mut c: Coeffs = SmallVec::from_elem(0, len);
        for (i, &x) in self.coeffs.iter().enumerate() {
            if x == 0 || i >= len {
                continue;
            }
            for (j, &y) in o.coeffs.iter().enumerate() {
                if i + j >= len {
                    break;
                }
                if y != 0 {
                    c[i + j] = ctx.add(c[i + j], ctx.mul(x, y));
                }
            }
        }
        Ok(Self::normalized(ctx.clone(), lo, c, prec))
    }

    /// Multiplies every coefficient by the field element with code `c`.
    pub fn scale_code(&self, c: Code) -> Self {
        let ctx = &self.ctx;
        let v = self.coeffs.iter().map(|&x| ctx.mul(x, c)).collect();
        Self::normalized(ctx.clone(), self.ord, v, self.prec)
    }

    pub fn scale(&self, c: &FieldElem) -> Self {
        assert!(same_ctx(&self.ctx, c.ctx()), "field context mismatch");
        self.scale_code(c.code())
    }

    /// Multiplication by `u^k`.
    pub fn shift(&self, k: i64) -> Self {
        if self.is_exact_zero() {
            return self.clone();
        }
        TruncatedSeries {
            ctx: self.ctx.clone(),
            ord: self.ord + k,
            coeffs: self.coeffs.clone(),
            prec: self.prec.map(|p| p + k),
        }
    }

    /// `u ↦ u^p`, coefficients untouched.
    pub fn phi(&self) -> Self {
        let p = self.ctx.p() as i64;
        if self.coeffs.is_empty() {
            return Self::normalized(self.ctx.clone(), self.ord * p, Coeffs::new(), self.prec.map(|x| x * p));
        }
        let mut c: Coeffs = SmallVec::from_elem(0, (self.coeffs.len() - 1) * p as usize + 1);
        for (i, &x) in self.coeffs.iter().enumerate() {
            c[i * p as usize] = x;
        }
        Self::normalized(self.ctx.clone(), self.ord * p, c, self.prec.map(|x| x * p))
    }

    /// Inverse with relative precision at most `rel`. Truncated inputs are limited by
    /// their own relative precision; exact monomials are inverted exactly.
    pub fn inv_rel(&self, rel: i64) -> Result<Self> {
        let v = match self.certified_valuation() {
            Ok(Some(v)) => v,
            Ok(None) => return Err(Error::DivisionByZero),
            Err(e) => return Err(e),
        };
        let ctx = &self.ctx;
        let c0inv = ctx.inv(self.coeffs[0]);
        if self.is_monomial() {
            return Ok(Self::monomial(ctx, c0inv, -v));
        }
        let own = self.prec.map(|p| p - v);
        let n = match own {
            Some(o) => o.min(rel),
            None => rel,
        }
        .max(0) as usize;
        // Newton-free schoolbook recursion: b_0 = 1/a_0, b_i = -b_0 sum_{j>=1} a_j b_{i-j}.
        let mut b: Coeffs = SmallVec::from_elem(0, n);
        if n > 0 {
            b[0] = c0inv;
        }
        for i in 1..n {
            let mut acc: Code = 0;
            for j in 1..=i.min(self.coeffs.len() - 1) {
                let a = self.coeffs[j];
                if a != 0 && b[i - j] != 0 {
                    acc = ctx.add(acc, ctx.mul(a, b[i - j]));
                }
            }
            b[i] = ctx.neg(ctx.mul(c0inv, acc));
        }
        Ok(Self::normalized(ctx.clone(), -v, b, Some(-v + n as i64)))
    }

    /// Inverse; exact non-monomials get [`DEFAULT_INV_REL_PREC`] relative precision.
    pub fn inv(&self) -> Result<Self> {
        self.inv_rel(DEFAULT_INV_REL_PREC)
    }

    pub fn checked_div(&self, o: &Self) -> Result<Self> {
        self.checked_mul(&o.inv()?)
    }

    /// Drops all terms of exponent `>= n` and records precision `n`.
    pub fn truncate(&self, n: i64) -> Self {
        Self::normalized(
            self.ctx.clone(),
            self.ord,
            self.coeffs.clone(),
            min_prec(self.prec, Some(n)),
        )
    }

    /// The exact polynomial of terms with exponent `< n`; fails if those are not all known.
    pub fn exact_below(&self, n: i64) -> Result<Self> {
        if let Some(p) = self.prec {
            if p < n {
                return Err(Error::InsufficientPrecision {
                    needed: n,
                    available: p,
                });
            }
        }
        let mut c = self.coeffs.clone();
        let keep = (n - self.ord).max(0) as usize;
        c.truncate(keep);
        Ok(Self::normalized(self.ctx.clone(), self.ord, c, None))
    }

    /// Forgets the precision marker, treating known terms as an exact polynomial.
    pub fn as_exact(&self) -> Self {
        Self::normalized(self.ctx.clone(), self.ord, self.coeffs.clone(), None)
    }

    /// True if every coefficient lies in the prime field fixed by Frobenius.
    pub fn is_frobenius_fixed(&self) -> bool {
        self.coeffs.iter().all(|&c| self.ctx.frob(c) == c)
    }

    /// Parses `2*u^-1 + 1 + g*u^3 + O(u^5)`.
    pub fn parse(ctx: &Arc<FieldCtx>, s: &str) -> Result<Self> {
        let err = |m: &str| Error::Parse(format!("bad series '{s}': {m}"));
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if t.is_empty() {
            return Err(err("empty"));
        }
        // Split at top-level signs that do not follow '^' or '('.
        let mut pieces: Vec<(bool, String)> = Vec::new();
        let mut depth = 0i32;
        let mut cur = String::new();
        let mut neg = false;
        let mut prev: Option<char> = None;
        for ch in t.chars() {
            match ch {
                '(' => depth += 1,
                ')' => depth -= 1,
                _ => {}
            }
            if (ch == '+' || ch == '-') && depth == 0 && prev != Some('^') {
                if !cur.is_empty() {
                    pieces.push((neg, std::mem::take(&mut cur)));
                } else if prev.is_some() {
                    return Err(err("dangling sign"));
                }
                neg = ch == '-';
            } else {
                cur.push(ch);
            }
            prev = Some(ch);
        }
        pieces.push((neg, cur));
        let mut terms = Vec::new();
        let mut prec = None;
        for (neg, piece) in pieces {
            if piece.is_empty() {
                return Err(err("empty term"));
            }
            if let Some(inner) = piece.strip_prefix("O(").and_then(|r| r.strip_suffix(')')) {
                let e = match inner.strip_prefix('u') {
                    Some("") => 1,
                    Some(r) => r
                        .strip_prefix('^')
                        .ok_or_else(|| err("precision"))?
                        .parse()
                        .map_err(|_| err("precision"))?,
                    None => return Err(err("precision")),
                };
                prec = min_prec(prec, Some(e));
                continue;
            }
            let mut d = 0i32;
            let mut upos = None;
            for (i, ch) in piece.char_indices() {
                match ch {
                    '(' => d += 1,
                    ')' => d -= 1,
                    'u' if d == 0 => upos = Some(i),
                    _ => {}
                }
            }
            let (coef, exp) = match upos {
                None => (piece.as_str(), 0i64),
                Some(i) => {
                    let c = piece[..i].trim_end_matches('*');
                    let r = &piece[i + 1..];
                    let e = if r.is_empty() {
                        1
                    } else {
                        r.strip_prefix('^')
                            .ok_or_else(|| err("exponent"))?
                            .parse()
                            .map_err(|_| err("exponent"))?
                    };
                    (c, e)
                }
            };
            let mut c = if coef.is_empty() { 1 } else { ctx.parse_code(coef)? };
            if neg {
                c = ctx.neg(c);
            }
            terms.push((exp, c));
        }
        Ok(Self::from_terms(ctx, &terms, prec))
    }

    pub fn add(&self, o: &Self) -> Self {
        self.checked_add(o).expect("field context mismatch")
    }
    pub fn sub(&self, o: &Self) -> Self {
        self.checked_sub(o).expect("field context mismatch")
    }
    pub fn mul(&self, o: &Self) -> Self {
        self.checked_mul(o).expect("field context mismatch")
    }
    pub fn neg(&self) -> Self {
        let ctx = &self.ctx;
        let c = self.coeffs.iter().map(|&x| ctx.neg(x)).collect();
        Self::normalized(ctx.clone(), self.ord, c, self.prec)
    }
}

impl PartialEq for TruncatedSeries {
    fn eq(&self, o: &Self) -> bool {
        same_ctx(&self.ctx, &o.ctx)
            && self.prec == o.prec
            && self.coeffs == o.coeffs
            && (self.coeffs.is_empty() || self.ord == o.ord)
    }
}
impl Eq for TruncatedSeries {}

impl std::hash::Hash for TruncatedSeries {
    fn hash<H: std::hash::Hasher>(&self, h: &mut H) {
        self.prec.hash(h);
        self.coeffs.hash(h);
        if !self.coeffs.is_empty() {
            self.ord.hash(h);
        }
    }
}

impl PartialOrd for TruncatedSeries {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Orders by the term list compared from the lowest exponent up.
impl Ord for TruncatedSeries {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        let a: Vec<(i64, Code)> = self.terms().collect();
        let b: Vec<(i64, Code)> = o.terms().collect();
        a.cmp(&b).then(self.prec.cmp(&o.prec))
    }
}

impl fmt::Debug for TruncatedSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for TruncatedSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        for (e, c) in self.terms() {
            let mut cs = self.ctx.format_code(c);
            if cs.contains('+') {
                cs = format!("({cs})");
            }
            let t = match (e, cs.as_str()) {
                (0, _) => cs,
                (1, "1") => "u".to_string(),
                (e, "1") => format!("u^{e}"),
                (1, _) => format!("{cs}*u"),
                (e, _) => format!("{cs}*u^{e}"),
            };
            parts.push(t);
        }
        if let Some(p) = self.prec {
            parts.push(format!("O(u^{p})"));
        }
        if parts.is_empty() {
            return f.write_str("0");
        }
        f.write_str(&parts.join(" + "))
    }
}

impl Add for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn add(self, o: &TruncatedSeries) -> TruncatedSeries {
        TruncatedSeries::add(self, o)
    }
}
impl Sub for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn sub(self, o: &TruncatedSeries) -> TruncatedSeries {
        TruncatedSeries::sub(self, o)
    }
}
impl Mul for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn mul(self, o: &TruncatedSeries) -> TruncatedSeries {
        TruncatedSeries::mul(self, o)
    }
}
impl Neg for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn neg(self) -> TruncatedSeries {
        TruncatedSeries::neg(self)
    }
}
