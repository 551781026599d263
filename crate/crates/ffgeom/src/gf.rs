//! Exact arithmetic in F_q for prime and prime-power q.
//!
//! Elements are integers in `[0, q)`. For extension fields (q = p^e, e >= 2)
//! the integer encodes polynomial coefficients in base p, least significant
//! digit first. Prime fields use direct modular arithmetic; extension fields
//! use log/antilog tables built from a generator of the multiplicative group,
//! plus a precomputed addition table.

use std::fmt;

/// A field element, an integer in `[0, q)`.
pub type Elem = u8;

/// Largest q accepted by [`FieldSpec::new`].
pub const DEFAULT_MAX_Q: u32 = 64;

/// Hard cap imposed by the `u8` element representation.
const ABSOLUTE_MAX_Q: u32 = 256;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GfError {
    /// q has two or more distinct prime factors.
    NotPrimePower(u32),
    /// q exceeds the configured maximum.
    Unsupported { q: u32, max: u32 },
    /// inv(0) or div by zero.
    DivisionByZero,
}

impl fmt::Display for GfError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GfError::NotPrimePower(q) => write!(f, "{} is not a prime power", q),
            GfError::Unsupported { q, max } => {
                write!(f, "field order {} exceeds the supported maximum {}", q, max)
            }
            GfError::DivisionByZero => write!(f, "division by zero field element"),
        }
    }
}

impl std::error::Error for GfError {}

/// Arithmetic tables and parameters for F_q, q = p^e.
///
/// Immutable after construction; safe to share read-only across threads.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldSpec {
    p: u32,
    e: u32,
    q: u32,
    /// Monic irreducible polynomial of degree e over F_p, coefficients low
    /// to high (length e + 1). `None` for prime fields.
    irreducible: Option<Vec<Elem>>,
    /// exp[i] = g^i for i in 0..q-1 (extension fields only).
    exp: Vec<Elem>,
    /// log[x] for nonzero x; log[0] is a sentinel (extension fields only).
    log: Vec<u16>,
    /// q*q addition table (extension fields only).
    add_tab: Vec<Elem>,
    /// Additive inverses (extension fields only).
    neg_tab: Vec<Elem>,
    /// Multiplicative inverses; index 0 unused.
    inv_tab: Vec<Elem>,
}

impl FieldSpec {
    /// Builds F_q with the default maximum order.
    pub fn new(q: u32) -> Result<FieldSpec, GfError> {
        FieldSpec::with_max(q, DEFAULT_MAX_Q)
    }

    /// Builds F_q, accepting orders up to `max` (capped at 256 by the element
    /// representation). Deterministic: equal q yields identical tables.
    pub fn with_max(q: u32, max: u32) -> Result<FieldSpec, GfError> {
        let max = max.min(ABSOLUTE_MAX_Q);
        if q > max {
            return Err(GfError::Unsupported { q, max });
        }
        if q < 2 {
            return Err(GfError::NotPrimePower(q));
        }
        let p = smallest_prime_factor(q);
        let mut e = 0u32;
        let mut rest = q;
        while rest % p == 0 {
            rest /= p;
            e += 1;
        }
        if rest != 1 {
            return Err(GfError::NotPrimePower(q));
        }

        if e == 1 {
            let mut inv_tab = vec![0; q as usize];
            for a in 1..q {
                inv_tab[a as usize] = mod_pow(a, q - 2, q) as Elem;
            }
            return Ok(FieldSpec {
                p,
                e,
                q,
                irreducible: None,
                exp: Vec::new(),
                log: Vec::new(),
                add_tab: Vec::new(),
                neg_tab: Vec::new(),
                inv_tab,
            });
        }

        let irreducible = smallest_irreducible(p, e);
        let poly = PolyCtx { p, modulus: irreducible.clone() };

        // Generator of the cyclic group of order q-1, then log/antilog tables.
        let group_order = q - 1;
        let prime_factors = distinct_prime_factors(group_order);
        let mut generator = 0u32;
        for g in 2..q {
            let is_gen = prime_factors
                .iter()
                .all(|&r| poly.pow(g, group_order / r) != 1);
            if is_gen {
                generator = g;
                break;
            }
        }
        assert!(generator != 0, "no generator found for q = {}", q);

        let mut exp = vec![0 as Elem; group_order as usize];
        let mut log = vec![u16::MAX; q as usize];
        let mut acc = 1u32;
        for (i, slot) in exp.iter_mut().enumerate() {
            *slot = acc as Elem;
            assert!(log[acc as usize] == u16::MAX, "modulus not irreducible");
            log[acc as usize] = i as u16;
            acc = poly.mul(acc, generator);
        }
        assert_eq!(acc, 1, "generator order mismatch");

        let mut add_tab = vec![0 as Elem; (q * q) as usize];
        for a in 0..q {
            for b in 0..q {
                add_tab[(a * q + b) as usize] = poly.add(a, b) as Elem;
            }
        }
        let neg_tab: Vec<Elem> = (0..q).map(|a| poly.neg(a) as Elem).collect();
        let mut inv_tab = vec![0 as Elem; q as usize];
        for a in 1..q {
            let l = log[a as usize] as u32;
            inv_tab[a as usize] = exp[((group_order - l) % group_order) as usize];
        }

        Ok(FieldSpec {
            p,
            e,
            q,
            irreducible: Some(irreducible),
            exp,
            log,
            add_tab,
            neg_tab,
            inv_tab,
        })
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn e(&self) -> u32 {
        self.e
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    /// Coefficients (low to high) of the modulus, absent for prime fields.
    pub fn irreducible_poly(&self) -> Option<&[Elem]> {
        self.irreducible.as_deref()
    }

    /// All field elements in increasing encoding order.
    pub fn elements(&self) -> impl Iterator<Item = Elem> {
        (0..self.q).map(|x| x as Elem)
    }

    #[inline]
    pub fn add(&self, a: Elem, b: Elem) -> Elem {
        debug_assert!((a as u32) < self.q && (b as u32) < self.q);
        if self.e == 1 {
            ((a as u32 + b as u32) % self.q) as Elem
        } else {
            self.add_tab[a as usize * self.q as usize + b as usize]
        }
    }

    #[inline]
    pub fn neg(&self, a: Elem) -> Elem {
        debug_assert!((a as u32) < self.q);
        if self.e == 1 {
            ((self.q - a as u32) % self.q) as Elem
        } else {
            self.neg_tab[a as usize]
        }
    }

    #[inline]
    pub fn sub(&self, a: Elem, b: Elem) -> Elem {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: Elem, b: Elem) -> Elem {
        debug_assert!((a as u32) < self.q && (b as u32) < self.q);
        if self.e == 1 {
            ((a as u32 * b as u32) % self.q) as Elem
        } else if a == 0 || b == 0 {
            0
        } else {
            let order = self.q - 1;
            let l = self.log[a as usize] as u32 + self.log[b as usize] as u32;
            self.exp[(l % order) as usize]
        }
    }

    #[inline]
    pub fn inv(&self, a: Elem) -> Result<Elem, GfError> {
        if a == 0 {
            return Err(GfError::DivisionByZero);
        }
        debug_assert!((a as u32) < self.q);
        Ok(self.inv_tab[a as usize])
    }

    pub fn div(&self, a: Elem, b: Elem) -> Result<Elem, GfError> {
        Ok(self.mul(a, self.inv(b)?))
    }

    /// a^exp by square-and-multiply; 0^0 = 1.
    pub fn pow(&self, a: Elem, mut exp: u64) -> Elem {
        let mut base = a;
        let mut acc: Elem = 1;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }
}

/// Shorthand for [`FieldSpec::new`].
pub fn field_new(q: u32) -> Result<FieldSpec, GfError> {
    FieldSpec::new(q)
}

fn smallest_prime_factor(n: u32) -> u32 {
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return d;
        }
        d += 1;
    }
    n
}

fn distinct_prime_factors(mut n: u32) -> Vec<u32> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

fn mod_pow(base: u32, mut exp: u32, m: u32) -> u32 {
    let mut acc = 1u64;
    let mut b = base as u64 % m as u64;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * b % m as u64;
        }
        b = b * b % m as u64;
        exp >>= 1;
    }
    acc as u32
}

/// Lexicographically smallest monic irreducible of degree e over F_p, found
/// by exhaustive search (high-degree coefficients compared first).
fn smallest_irreducible(p: u32, e: u32) -> Vec<Elem> {
    let count = (p as u64).pow(e);
    for m in 0..count {
        // m encodes (c_{e-1}, ..., c_0) with c_{e-1} the most significant digit.
        let mut coeffs = vec![0 as Elem; e as usize + 1];
        coeffs[e as usize] = 1;
        let mut rest = m;
        for i in 0..e as usize {
            coeffs[i] = (rest % p as u64) as Elem;
            rest /= p as u64;
        }
        if is_irreducible(&coeffs, p) {
            return coeffs;
        }
    }
    unreachable!("an irreducible polynomial of every degree exists over F_p");
}

/// Trial division by every monic polynomial of degree 1..=deg/2.
fn is_irreducible(f: &[Elem], p: u32) -> bool {
    let deg = f.len() - 1;
    for d in 1..=deg / 2 {
        let count = (p as u64).pow(d as u32);
        for m in 0..count {
            let mut g = vec![0 as Elem; d + 1];
            g[d] = 1;
            let mut rest = m;
            for c in g.iter_mut().take(d) {
                *c = (rest % p as u64) as Elem;
                rest /= p as u64;
            }
            if poly_rem(f, &g, p).is_empty() {
                return false;
            }
        }
    }
    true
}

/// Remainder of f by monic g over F_p, trailing zeros trimmed.
fn poly_rem(f: &[Elem], g: &[Elem], p: u32) -> Vec<Elem> {
    let mut r: Vec<u32> = f.iter().map(|&c| c as u32).collect();
    let dg = g.len() - 1;
    while r.len() > dg {
        let lead = *r.last().unwrap();
        let shift = r.len() - 1 - dg;
        if lead != 0 {
            for i in 0..=dg {
                let idx = shift + i;
                r[idx] = (r[idx] + p - lead * g[i] as u32 % p) % p;
            }
        }
        r.pop();
    }
    while r.last() == Some(&0) {
        r.pop();
    }
    r.iter().map(|&c| c as Elem).collect()
}

/// Slow polynomial-basis arithmetic used only while building tables.
struct PolyCtx {
    p: u32,
    modulus: Vec<Elem>,
}

impl PolyCtx {
    fn e(&self) -> usize {
        self.modulus.len() - 1
    }

    fn decode(&self, x: u32) -> Vec<u32> {
        let mut digits = vec![0u32; self.e()];
        let mut rest = x;
        for d in digits.iter_mut() {
            *d = rest % self.p;
            rest /= self.p;
        }
        digits
    }

    fn encode(&self, digits: &[u32]) -> u32 {
        let mut x = 0u32;
        for &d in digits.iter().rev() {
            x = x * self.p + d;
        }
        x
    }

    fn add(&self, a: u32, b: u32) -> u32 {
        let da = self.decode(a);
        let db = self.decode(b);
        let sum: Vec<u32> = da.iter().zip(&db).map(|(x, y)| (x + y) % self.p).collect();
        self.encode(&sum)
    }

    fn neg(&self, a: u32) -> u32 {
        let da = self.decode(a);
        let neg: Vec<u32> = da.iter().map(|x| (self.p - x) % self.p).collect();
        self.encode(&neg)
    }

    fn mul(&self, a: u32, b: u32) -> u32 {
        let da = self.decode(a);
        let db = self.decode(b);
        let mut prod = vec![0u32; 2 * self.e()];
        for (i, &x) in da.iter().enumerate() {
            for (j, &y) in db.iter().enumerate() {
                prod[i + j] = (prod[i + j] + x * y) % self.p;
            }
        }
        // Reduce modulo the monic modulus.
        for i in (self.e()..prod.len()).rev() {
            let c = prod[i];
            if c != 0 {
                prod[i] = 0;
                for (j, &m) in self.modulus.iter().enumerate().take(self.e()) {
                    let idx = i - self.e() + j;
                    prod[idx] = (prod[idx] + self.p - c * m as u32 % self.p) % self.p;
                }
            }
        }
        prod.truncate(self.e());
        self.encode(&prod)
    }

    fn pow(&self, a: u32, mut exp: u32) -> u32 {
        let mut base = a;
        let mut acc = 1u32;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }
}
