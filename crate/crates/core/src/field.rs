//! Finite fields `F_{p^k}` with table-driven arithmetic.
//!
//! An element is stored as a code `c_0 + c_1 p + ... + c_{k-1} p^{k-1}` where
//! `c_i` is the coefficient of `g^i` in `F_p[g]/(f)`. Code order is the
//! lexicographic enumeration order used everywhere in the crate.

use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use crate::error::{Error, Result};

/// Largest field size that gets full addition and multiplication tables.
const TABLE_LIMIT: u32 = 1024;

/// Raw element code inside a [`FieldCtx`].
pub type Code = u16;

/// Arithmetic context for `F_{p^k}`.
pub struct FieldCtx {
    p: u32,
    k: u32,
    q: u32,
    /// Monic modulus, low degree first, length `k + 1`.
    modulus: Vec<u32>,
    add_t: Vec<Code>,
    mul_t: Vec<Code>,
    neg_t: Vec<Code>,
    inv_t: Vec<Code>,
    frob_t: Vec<Code>,
    log_t: Vec<u32>,
    exp_t: Vec<Code>,
}

impl fmt::Debug for FieldCtx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F_{}^{} mod {:?}", self.p, self.k, self.modulus)
    }
}

impl PartialEq for FieldCtx {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p && self.k == other.k && self.modulus == other.modulus
    }
}
impl Eq for FieldCtx {}

fn is_prime(p: u32) -> bool {
    p >= 2 && (2..p).take_while(|d| d * d <= p).all(|d| !p.is_multiple_of(d))
}

/// Remainder of `a` modulo the monic polynomial `m` over `F_p` (low degree first).
fn poly_rem(a: &[u32], m: &[u32], p: u32) -> Vec<u32> {
    let mut r = a.to_vec();
    let dm = m.len() - 1;
    while r.len() > dm {
        let lead = r.pop().unwrap();
        if lead != 0 {
            let off = r.len() - dm;
            for i in 0..dm {
                r[off + i] = (r[off + i] + (p - lead) * m[i]) % p;
            }
        }
    }
    r
}

fn digits(code: u32, p: u32, k: u32) -> Vec<u32> {
    let mut c = code;
    (0..k)
        .map(|_| {
            let d = c % p;
            c /= p;
            d
        })
        .collect()
}

fn undigits(d: &[u32], p: u32) -> u32 {
    d.iter().rev().fold(0, |acc, &x| acc * p + x)
}

/// True if the monic polynomial `f` of degree `k` is irreducible over `F_p`.
fn is_irreducible(f: &[u32], p: u32) -> bool {
    let k = f.len() - 1;
    for d in 1..=k / 2 {
        for lower in 0..p.pow(d as u32) {
            let mut g = digits(lower, p, d as u32);
            g.push(1);
            if poly_rem(f, &g, p).iter().all(|&c| c == 0) {
                return false;
            }
        }
    }
    true
}

impl FieldCtx {
    /// `F_{p^k}` with the lexicographically smallest monic irreducible modulus.
    pub fn new(p: u32, k: u32) -> Result<Arc<Self>> {
        Self::check_range(p, k)?;
        let modulus = (0..p.pow(k))
            .map(|lower| {
                let mut f = digits(lower, p, k);
                f.push(1);
                f
            })
            .find(|f| is_irreducible(f, p))
            .expect("irreducible polynomials exist in every degree");
        Ok(Arc::new(Self::build(p, k, modulus)))
    }

    /// `F_{p^k}` with a caller-supplied monic modulus (low degree first, length `k + 1`).
    pub fn with_modulus(p: u32, k: u32, modulus: &[u32]) -> Result<Arc<Self>> {
        Self::check_range(p, k)?;
        if modulus.len() != k as usize + 1 || modulus[k as usize] % p != 1 {
            return Err(Error::InvalidParameter(format!("modulus must be monic of degree {k}")));
        }
        let m: Vec<u32> = modulus.iter().map(|c| c % p).collect();
        if !is_irreducible(&m, p) {
            return Err(Error::InvalidParameter("modulus is reducible".into()));
        }
        Ok(Arc::new(Self::build(p, k, m)))
    }

    fn check_range(p: u32, k: u32) -> Result<()> {
        if !is_prime(p) || p > 13 || k == 0 || k > 4 {
            return Err(Error::UnsupportedField { p, k });
        }
        Ok(())
    }

    fn slow_mul(p: u32, k: u32, m: &[u32], a: u32, b: u32) -> u32 {
        let da = digits(a, p, k);
        let db = digits(b, p, k);
        let mut prod = vec![0u32; 2 * k as usize];
        for (i, x) in da.iter().enumerate() {
            for (j, y) in db.iter().enumerate() {
                prod[i + j] = (prod[i + j] + x * y) % p;
            }
        }
        undigits(&poly_rem(&prod, m, p), p)
    }

    fn build(p: u32, k: u32, modulus: Vec<u32>) -> Self {
        let q = p.pow(k);
        // Find a primitive element by its multiplicative order.
        let order = q - 1;
        let mut factors = Vec::new();
        let mut n = order;
        let mut d = 2;
        while d * d <= n {
            if n.is_multiple_of(d) {
                factors.push(d);
                while n.is_multiple_of(d) {
                    n /= d;
                }
            }
            d += 1;
        }
        if n > 1 {
            factors.push(n);
        }
        let pow = |mut base: u32, mut e: u32| {
            let mut acc = 1u32;
            while e > 0 {
                if e & 1 == 1 {
                    acc = Self::slow_mul(p, k, &modulus, acc, base);
                }
                base = Self::slow_mul(p, k, &modulus, base, base);
                e >>= 1;
            }
            acc
        };
        let gen = (1..q)
            .find(|&g| factors.iter().all(|&f| pow(g, order / f) != 1))
            .unwrap_or(1);
        let mut exp_t = vec![0 as Code; order as usize];
        let mut log_t = vec![0u32; q as usize];
        let mut x = 1u32;
        for i in 0..order {
            exp_t[i as usize] = x as Code;
            log_t[x as usize] = i;
            x = Self::slow_mul(p, k, &modulus, x, gen);
        }
        let add_code = |a: u32, b: u32| {
            let da = digits(a, p, k);
            let db = digits(b, p, k);
            let s: Vec<u32> = da.iter().zip(&db).map(|(x, y)| (x + y) % p).collect();
            undigits(&s, p)
        };
        let neg_t: Vec<Code> = (0..q)
            .map(|a| {
                let d: Vec<u32> = digits(a, p, k).iter().map(|x| (p - x) % p).collect();
                undigits(&d, p) as Code
            })
            .collect();
        let inv_t: Vec<Code> = (0..q)
            .map(|a| {
                if a == 0 {
                    0
                } else {
                    exp_t[((order - log_t[a as usize]) % order) as usize]
                }
            })
            .collect();
        let frob_t: Vec<Code> = (0..q).map(|a| pow(a, p) as Code).collect();
        let (add_t, mul_t) = if q <= TABLE_LIMIT {
            let mut at = vec![0 as Code; (q * q) as usize];
            let mut mt = vec![0 as Code; (q * q) as usize];
            for a in 0..q {
                for b in 0..q {
                    at[(a * q + b) as usize] = add_code(a, b) as Code;
                    mt[(a * q + b) as usize] = if a == 0 || b == 0 {
                        0
                    } else {
                        exp_t[((log_t[a as usize] + log_t[b as usize]) % order) as usize]
                    };
                }
            }
            (at, mt)
        } else {
            (Vec::new(), Vec::new())
        };
        FieldCtx {
            p,
            k,
            q,
            modulus,
            add_t,
            mul_t,
            neg_t,
            inv_t,
            frob_t,
            log_t,
            exp_t,
        }
    }

    pub fn p(&self) -> u32 {
        self.p
    }
    pub fn k(&self) -> u32 {
        self.k
    }
    /// Field size `p^k`.
    pub fn size(&self) -> u32 {
        self.q
    }
    pub fn modulus(&self) -> &[u32] {
        &self.modulus
    }

    #[inline]
    pub fn add(&self, a: Code, b: Code) -> Code {
        if !self.add_t.is_empty() {
            return self.add_t[a as usize * self.q as usize + b as usize];
        }
        let (mut x, mut y, mut out, mut place) = (a as u32, b as u32, 0u32, 1u32);
        for _ in 0..self.k {
            out += ((x % self.p + y % self.p) % self.p) * place;
            x /= self.p;
            y /= self.p;
            place *= self.p;
        }
        out as Code
    }

    #[inline]
    pub fn neg(&self, a: Code) -> Code {
        self.neg_t[a as usize]
    }

    #[inline]
    pub fn sub(&self, a: Code, b: Code) -> Code {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: Code, b: Code) -> Code {
        if !self.mul_t.is_empty() {
            return self.mul_t[a as usize * self.q as usize + b as usize];
        }
        if a == 0 || b == 0 {
            return 0;
        }
        let order = self.q - 1;
        self.exp_t[((self.log_t[a as usize] + self.log_t[b as usize]) % order) as usize]
    }

    /// Multiplicative inverse; the caller guarantees `a != 0`.
    #[inline]
    pub fn inv(&self, a: Code) -> Code {
        debug_assert!(a != 0);
        self.inv_t[a as usize]
    }

    #[inline]
    pub fn frob(&self, a: Code) -> Code {
        self.frob_t[a as usize]
    }

    pub fn pow(&self, a: Code, e: i64) -> Result<Code> {
        if a == 0 {
            return match e {
                0 => Ok(1),
                e if e > 0 => Ok(0),
                _ => Err(Error::DivisionByZero),
            };
        }
        let order = (self.q - 1) as i64;
        let l = (self.log_t[a as usize] as i64 * e.rem_euclid(order)) % order;
        Ok(self.exp_t[l as usize])
    }

    /// Code of the prime-field element `n mod p`.
    pub fn from_int(&self, n: i64) -> Code {
        n.rem_euclid(self.p as i64) as Code
    }

    /// Coefficients of `g^0 .. g^{k-1}`.
    pub fn coeffs_of(&self, a: Code) -> Vec<u32> {
        digits(a as u32, self.p, self.k)
    }

    pub fn from_coeffs(&self, c: &[u32]) -> Result<Code> {
        if c.len() > self.k as usize {
            return Err(Error::InvalidParameter(format!(
                "{} coefficients for a degree-{} extension",
                c.len(),
                self.k
            )));
        }
        let c: Vec<u32> = c.iter().map(|x| x % self.p).collect();
        Ok(undigits(&c, self.p) as Code)
    }

    pub fn format_code(&self, a: Code) -> String {
        if self.k == 1 {
            return a.to_string();
        }
        let d = self.coeffs_of(a);
        let mut terms = Vec::new();
        for (i, &c) in d.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let t = match (i, c) {
                (0, c) => c.to_string(),
                (1, 1) => "g".to_string(),
                (1, c) => format!("{c}g"),
                (i, 1) => format!("g^{i}"),
                (i, c) => format!("{c}g^{i}"),
            };
            terms.push(t);
        }
        if terms.is_empty() {
            "0".into()
        } else {
            terms.join("+")
        }
    }

    /// Parses forms like `2`, `g`, `1+2g`, `2*g^3 - 1`.
    pub fn parse_code(&self, s: &str) -> Result<Code> {
        let err = || Error::Parse(format!("bad field element '{s}'"));
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let t = t.trim_start_matches('(').trim_end_matches(')');
        if t.is_empty() {
            return Err(err());
        }
        let mut acc: Code = 0;
        let mut rest = t;
        while !rest.is_empty() {
            let neg = rest.starts_with('-');
            if rest.starts_with('+') || rest.starts_with('-') {
                rest = &rest[1..];
            }
            let end = rest.find(['+', '-']).unwrap_or(rest.len());
            let term = &rest[..end];
            rest = &rest[end..];
            if term.is_empty() {
                return Err(err());
            }
            let (coef, power) = match term.find('g') {
                None => (term, 0u32),
                Some(i) => {
                    let c = term[..i].trim_end_matches('*');
                    let e = &term[i + 1..];
                    let e = if e.is_empty() {
                        1
                    } else {
                        e.strip_prefix('^').ok_or_else(err)?.parse::<u32>().map_err(|_| err())?
                    };
                    (c, e)
                }
            };
            let c: i64 = if coef.is_empty() {
                1
            } else {
                coef.parse().map_err(|_| err())?
            };
            if power > 0 && self.k == 1 {
                return Err(err());
            }
            // g^power reduced through repeated multiplication.
            let g = if self.k == 1 { 0 } else { self.p as Code };
            let mut gp: Code = 1;
            for _ in 0..power {
                gp = self.mul(gp, g);
            }
            let mut term_code = self.mul(self.from_int(c), gp);
            if neg {
                term_code = self.neg(term_code);
            }
            acc = self.add(acc, term_code);
        }
        Ok(acc)
    }
}

/// An element of a finite field, carrying its context.
#[derive(Clone)]
pub struct FieldElem {
    ctx: Arc<FieldCtx>,
    code: Code,
}

impl fmt::Debug for FieldElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for FieldElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.ctx.format_code(self.code))
    }
}

impl PartialEq for FieldElem {
    fn eq(&self, other: &Self) -> bool {
        self.code == other.code && same_ctx(&self.ctx, &other.ctx)
    }
}
impl Eq for FieldElem {}

impl Hash for FieldElem {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.code.hash(state);
    }
}

impl PartialOrd for FieldElem {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for FieldElem {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.code.cmp(&other.code)
    }
}

/// Cheap pointer check first, structural check second.
pub fn same_ctx(a: &Arc<FieldCtx>, b: &Arc<FieldCtx>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

impl FieldElem {
    pub fn from_code(ctx: &Arc<FieldCtx>, code: Code) -> Self {
        assert!((code as u32) < ctx.q, "code out of range");
        FieldElem { ctx: ctx.clone(), code }
    }
    pub fn zero(ctx: &Arc<FieldCtx>) -> Self {
        Self::from_code(ctx, 0)
    }
    pub fn one(ctx: &Arc<FieldCtx>) -> Self {
        Self::from_code(ctx, 1)
    }
    pub fn from_int(ctx: &Arc<FieldCtx>, n: i64) -> Self {
        Self::from_code(ctx, ctx.from_int(n))
    }
    pub fn from_coeffs(ctx: &Arc<FieldCtx>, c: &[u32]) -> Result<Self> {
        Ok(Self::from_code(ctx, ctx.from_coeffs(c)?))
    }
    pub fn parse(ctx: &Arc<FieldCtx>, s: &str) -> Result<Self> {
        Ok(Self::from_code(ctx, ctx.parse_code(s)?))
    }
    /// The generator `g` of the polynomial basis (equals 0 when `k = 1`).
    pub fn gen(ctx: &Arc<FieldCtx>) -> Self {
        let c = if ctx.k == 1 { 0 } else { ctx.p as Code };
        Self::from_code(ctx, c)
    }

    pub fn ctx(&self) -> &Arc<FieldCtx> {
        &self.ctx
    }
    pub fn code(&self) -> Code {
        self.code
    }
    pub fn coeffs(&self) -> Vec<u32> {
        self.ctx.coeffs_of(self.code)
    }
    pub fn is_zero(&self) -> bool {
        self.code == 0
    }
    pub fn is_one(&self) -> bool {
        self.code == 1
    }

    fn check(&self, other: &Self) -> Result<()> {
        if same_ctx(&self.ctx, &other.ctx) {
            Ok(())
        } else {
            Err(Error::ContextMismatch)
        }
    }

    pub fn checked_add(&self, o: &Self) -> Result<Self> {
        self.check(o)?;
        Ok(FieldElem {
            ctx: self.ctx.clone(),
            code: self.ctx.add(self.code, o.code),
        })
    }
    pub fn checked_sub(&self, o: &Self) -> Result<Self> {
        self.check(o)?;
        Ok(FieldElem {
            ctx: self.ctx.clone(),
            code: self.ctx.sub(self.code, o.code),
        })
    }
    pub fn checked_mul(&self, o: &Self) -> Result<Self> {
        self.check(o)?;
        Ok(FieldElem {
            ctx: self.ctx.clone(),
            code: self.ctx.mul(self.code, o.code),
        })
    }
    pub fn checked_div(&self, o: &Self) -> Result<Self> {
        self.check(o)?;
        Ok(FieldElem {
            ctx: self.ctx.clone(),
            code: self.ctx.mul(self.code, o.inv()?.code),
        })
    }

    /// Panics on context mismatch; see [`FieldElem::checked_add`].
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
        FieldElem {
            ctx: self.ctx.clone(),
            code: self.ctx.neg(self.code),
        }
    }
    pub fn inv(&self) -> Result<Self> {
        if self.code == 0 {
            return Err(Error::DivisionByZero);
        }
        Ok(FieldElem {
            ctx: self.ctx.clone(),
            code: self.ctx.inv(self.code),
        })
    }
    pub fn pow(&self, e: i64) -> Result<Self> {
        Ok(FieldElem {
            ctx: self.ctx.clone(),
            code: self.ctx.pow(self.code, e)?,
        })
    }
    /// `a ↦ a^p`.
    pub fn frobenius(&self) -> Self {
        FieldElem {
            ctx: self.ctx.clone(),
            code: self.ctx.frob(self.code),
        }
    }
}

/// All field elements in lexicographic order, zero first.
pub fn enumerate(ctx: &Arc<FieldCtx>) -> Vec<FieldElem> {
    (0..ctx.size()).map(|c| FieldElem::from_code(ctx, c as Code)).collect()
}

/// Nonzero elements in lexicographic order.
pub fn units(ctx: &Arc<FieldCtx>) -> Vec<FieldElem> {
    (1..ctx.size()).map(|c| FieldElem::from_code(ctx, c as Code)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f9() -> Arc<FieldCtx> {
        FieldCtx::new(3, 2).unwrap()
    }

    #[test]
    fn f9_modulus_is_g2_plus_1() {
        assert_eq!(f9().modulus(), &[1, 0, 1]);
    }

    #[test]
    fn f9_basic_values() {
        let ctx = f9();
        let g = FieldElem::gen(&ctx);
        assert_eq!(g.mul(&g).to_string(), "2");
        assert_eq!(g.inv().unwrap().to_string(), "2g");
        assert_eq!(g.frobenius().to_string(), "2g");
        let x = FieldElem::parse(&ctx, "1+g").unwrap();
        assert_eq!(x.frobenius().to_string(), "1+2g");
    }

    #[test]
    fn enumeration_order() {
        let names: Vec<String> = enumerate(&f9()).iter().map(|x| x.to_string()).collect();
        assert_eq!(names, ["0", "1", "2", "g", "1+g", "2+g", "2g", "1+2g", "2+2g"]);
    }

    #[test]
    fn prime_field_printing() {
        let ctx = FieldCtx::new(5, 1).unwrap();
        assert_eq!(FieldElem::from_int(&ctx, -1).to_string(), "4");
        assert_eq!(FieldElem::parse(&ctx, "3").unwrap().code(), 3);
        assert!(FieldElem::parse(&ctx, "g").is_err());
    }

    #[test]
    fn unsupported_fields() {
        assert!(FieldCtx::new(4, 1).is_err());
        assert!(FieldCtx::new(17, 1).is_err());
        assert!(FieldCtx::new(3, 5).is_err());
    }

    #[test]
    fn custom_modulus() {
        let ctx = FieldCtx::with_modulus(3, 2, &[2, 1, 1]).unwrap();
        assert_eq!(ctx.modulus(), &[2, 1, 1]);
        assert!(FieldCtx::with_modulus(3, 2, &[0, 1, 1]).is_err());
    }

    #[test]
    fn context_mismatch() {
        let a = FieldElem::one(&f9());
        let b = FieldElem::one(&FieldCtx::new(5, 1).unwrap());
        assert_eq!(a.checked_add(&b), Err(Error::ContextMismatch));
    }

    #[test]
    fn large_fields_use_log_tables() {
        let ctx = FieldCtx::new(13, 4).unwrap();
        for x in [1u16, 2, 13, 200, 28560] {
            let e = FieldElem::from_code(&ctx, x);
            assert!(e.mul(&e.inv().unwrap()).is_one());
            let s = e.add(&e.neg());
            assert!(s.is_zero());
        }
    }

    #[test]
    fn parse_roundtrip_all() {
        for (p, k) in [(2, 3), (3, 2), (5, 2), (7, 3)] {
            let ctx = FieldCtx::new(p, k).unwrap();
            for x in enumerate(&ctx) {
                assert_eq!(FieldElem::parse(&ctx, &x.to_string()).unwrap(), x);
            }
        }
    }
}
