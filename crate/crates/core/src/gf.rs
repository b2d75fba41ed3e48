//! Arithmetic over prime-power finite fields `F_q`, `q = p^m <= 2^16`.
//!
//! Elements are packed as integers in `[0, q)`: the coefficient of `x^i` in
//! the polynomial-basis representation is the `i`-th base-`p` digit.
//! Multiplication and inversion go through discrete log/antilog tables built
//! once per [`FieldSpec`].

use std::fmt;

use thiserror::Error;

/// Largest supported field order.
pub const MAX_ORDER: u64 = 1 << 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GfError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("{0} is not a prime power")]
    NotPrimePower(u64),
    #[error("extension degree must be at least 1")]
    ZeroDegree,
    #[error("field order {0} exceeds the supported maximum of 2^16")]
    OrderTooLarge(u64),
    #[error("modulus {0:?} is reducible over the prime field")]
    ReduciblePolynomial(Vec<u32>),
    #[error("invalid modulus: {0}")]
    InvalidModulus(String),
    #[error("no built-in modulus for p = {p}, m = {m}")]
    NoDefaultModulus { p: u32, m: u32 },
    #[error("element {value} out of range for F_{q}")]
    ElementOutOfRange { value: u32, q: u32 },
    #[error("coefficients {0:?} do not encode a field element")]
    InvalidCoefficients(Vec<u32>),
    #[error("division by zero")]
    DivisionByZero,
}

/// How the defining polynomial of an extension field is chosen.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Modulus {
    /// Use the built-in table (see [`default_modulus`]).
    Default,
    /// Monic polynomial given as `m + 1` coefficients, lowest degree first.
    Coefficients(Vec<u32>),
}

/// An element of some `F_q`, stored as its base-`p` packed encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
#[repr(transparent)]
pub struct FieldElement(u32);

impl FieldElement {
    pub const ZERO: FieldElement = FieldElement(0);
    pub const ONE: FieldElement = FieldElement(1);

    #[inline]
    pub fn value(self) -> u32 {
        self.0
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Built-in irreducible moduli, lowest degree first.
///
/// `p = 2` uses the conventional primitive trinomials/pentanomials
/// (`0x11d` for `F_256`, `x^3 + x + 1` for `F_8`). Odd `p` uses the
/// irreducible monic polynomial with the smallest packed encoding.
/// Degree 1 always uses `x`.
pub fn default_modulus(p: u32, m: u32) -> Option<Vec<u32>> {
    if m == 1 {
        return Some(vec![0, 1]);
    }
    let exps: &[u32] = match (p, m) {
        (2, 2) => &[2, 1, 0],
        (2, 3) => &[3, 1, 0],
        (2, 4) => &[4, 1, 0],
        (2, 5) => &[5, 2, 0],
        (2, 6) => &[6, 1, 0],
        (2, 7) => &[7, 1, 0],
        (2, 8) => &[8, 4, 3, 2, 0],
        (2, 9) => &[9, 4, 0],
        (2, 10) => &[10, 3, 0],
        (2, 11) => &[11, 2, 0],
        (2, 12) => &[12, 6, 4, 1, 0],
        (2, 13) => &[13, 4, 3, 1, 0],
        (2, 14) => &[14, 10, 6, 1, 0],
        (2, 15) => &[15, 1, 0],
        (2, 16) => &[16, 12, 3, 1, 0],
        _ => {
            let coeffs: &[u32] = match (p, m) {
                (3, 2) => &[1, 0, 1],
                (3, 3) => &[1, 2, 0, 1],
                (3, 4) => &[2, 1, 0, 0, 1],
                (5, 2) => &[2, 0, 1],
                (5, 3) => &[1, 1, 0, 1],
                (5, 4) => &[2, 0, 0, 0, 1],
                (7, 2) => &[1, 0, 1],
                (7, 3) => &[2, 0, 0, 1],
                (7, 4) => &[1, 1, 0, 0, 1],
                (11, 2) => &[1, 0, 1],
                (11, 3) => &[4, 1, 0, 1],
                (11, 4) => &[2, 1, 0, 0, 1],
                (13, 2) => &[2, 0, 1],
                (13, 3) => &[2, 0, 0, 1],
                (13, 4) => &[2, 0, 0, 0, 1],
                _ => return smallest_irreducible(p, m),
            };
            return Some(coeffs.to_vec());
        }
    };
    let mut coeffs = vec![0; m as usize + 1];
    for &e in exps {
        coeffs[e as usize] = 1;
    }
    Some(coeffs)
}

/// Monic irreducible polynomial of degree `m` with the smallest packed
/// encoding `sum c_i p^i`, for fields up to `MAX_ORDER` elements.
fn smallest_irreducible(p: u32, m: u32) -> Option<Vec<u32>> {
    let count = (p as u64).checked_pow(m)?;
    if count > MAX_ORDER || !is_prime(p as u64) {
        return None;
    }
    (0..count).find_map(|packed| {
        let mut poly = Vec::with_capacity(m as usize + 1);
        let mut v = packed;
        for _ in 0..m {
            poly.push((v % p as u64) as u32);
            v /= p as u64;
        }
        poly.push(1);
        is_irreducible(p, &poly).then_some(poly)
    })
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Splits `q` into `(p, m)` with `q = p^m`, or `None` if `q` is not a prime power.
pub fn prime_power(q: u64) -> Option<(u32, u32)> {
    if q < 2 {
        return None;
    }
    let p = (2..=q).find(|d| q.is_multiple_of(*d))?;
    let mut rest = q;
    let mut m = 0;
    while rest.is_multiple_of(p) {
        rest /= p;
        m += 1;
    }
    (rest == 1).then_some((p as u32, m))
}

/// Immutable description of `F_q` together with its arithmetic tables.
#[derive(Clone)]
pub struct FieldSpec {
    p: u32,
    m: u32,
    q: u32,
    modulus: Vec<u32>,
    // exp[i] = g^i for i in 0..2(q-1), so log a + log b never needs reducing
    exp: Vec<u32>,
    log: Vec<u32>,
}

impl fmt::Debug for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FieldSpec")
            .field("p", &self.p)
            .field("m", &self.m)
            .field("q", &self.q)
            .field("modulus", &self.modulus)
            .finish()
    }
}

impl PartialEq for FieldSpec {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p && self.m == other.m && self.modulus == other.modulus
    }
}

impl Eq for FieldSpec {}

impl FieldSpec {
    pub fn new(p: u32, m: u32, modulus: Modulus) -> Result<Self, GfError> {
        if !is_prime(p as u64) {
            return Err(GfError::NotPrime(p as u64));
        }
        if m == 0 {
            return Err(GfError::ZeroDegree);
        }
        let q = (p as u64)
            .checked_pow(m)
            .filter(|&q| q <= MAX_ORDER)
            .ok_or(GfError::OrderTooLarge((p as u64).saturating_pow(m)))?;
        let modulus = match modulus {
            Modulus::Default => default_modulus(p, m).ok_or(GfError::NoDefaultModulus { p, m })?,
            Modulus::Coefficients(c) => c,
        };
        validate_modulus(p, m, &modulus)?;
        let mut field = FieldSpec {
            p,
            m,
            q: q as u32,
            modulus,
            exp: Vec::new(),
            log: Vec::new(),
        };
        field.build_tables();
        Ok(field)
    }

    /// Field of order `q` with the built-in modulus.
    pub fn from_order(q: u64) -> Result<Self, GfError> {
        Self::from_order_with(q, Modulus::Default)
    }

    pub fn from_order_with(q: u64, modulus: Modulus) -> Result<Self, GfError> {
        if q > MAX_ORDER {
            return Err(GfError::OrderTooLarge(q));
        }
        let (p, m) = prime_power(q).ok_or(GfError::NotPrimePower(q))?;
        Self::new(p, m, modulus)
    }

    pub fn characteristic(&self) -> u32 {
        self.p
    }

    pub fn degree(&self) -> u32 {
        self.m
    }

    pub fn order(&self) -> u32 {
        self.q
    }

    /// Modulus coefficients, lowest degree first.
    pub fn modulus(&self) -> &[u32] {
        &self.modulus
    }

    pub fn element(&self, value: u32) -> Result<FieldElement, GfError> {
        if value < self.q {
            Ok(FieldElement(value))
        } else {
            Err(GfError::ElementOutOfRange { value, q: self.q })
        }
    }

    /// Every element of the field in encoding order.
    pub fn elements(&self) -> impl Iterator<Item = FieldElement> {
        (0..self.q).map(FieldElement)
    }

    /// Base-`p` coefficient vector of length `m`, lowest degree first.
    pub fn coefficients(&self, a: FieldElement) -> Vec<u32> {
        let mut v = a.0;
        (0..self.m)
            .map(|_| {
                let d = v % self.p;
                v /= self.p;
                d
            })
            .collect()
    }

    pub fn from_coefficients(&self, coeffs: &[u32]) -> Result<FieldElement, GfError> {
        if coeffs.len() != self.m as usize || coeffs.iter().any(|&c| c >= self.p) {
            return Err(GfError::InvalidCoefficients(coeffs.to_vec()));
        }
        Ok(FieldElement(
            coeffs.iter().rev().fold(0, |acc, &c| acc * self.p + c),
        ))
    }

    #[inline]
    pub fn add(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        if self.p == 2 {
            return FieldElement(a.0 ^ b.0);
        }
        if self.m == 1 {
            return FieldElement((a.0 + b.0) % self.p);
        }
        self.digitwise(a, b, |x, y| (x + y) % self.p)
    }

    #[inline]
    pub fn neg(&self, a: FieldElement) -> FieldElement {
        if self.p == 2 {
            return a;
        }
        self.digitwise(a, FieldElement::ZERO, |x, _| (self.p - x) % self.p)
    }

    #[inline]
    pub fn sub(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        if self.p == 2 {
            return FieldElement(a.0 ^ b.0);
        }
        if self.m == 1 {
            return FieldElement((a.0 + self.p - b.0) % self.p);
        }
        self.digitwise(a, b, |x, y| (x + self.p - y) % self.p)
    }

    #[inline]
    pub fn mul(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        if a.0 == 0 || b.0 == 0 {
            return FieldElement::ZERO;
        }
        FieldElement(self.exp[(self.log[a.0 as usize] + self.log[b.0 as usize]) as usize])
    }

    #[inline]
    pub fn inv(&self, a: FieldElement) -> Result<FieldElement, GfError> {
        if a.0 == 0 {
            return Err(GfError::DivisionByZero);
        }
        let group = self.q - 1;
        Ok(FieldElement(
            self.exp[((group - self.log[a.0 as usize]) % group) as usize],
        ))
    }

    #[inline]
    pub fn div(&self, a: FieldElement, b: FieldElement) -> Result<FieldElement, GfError> {
        Ok(self.mul(a, self.inv(b)?))
    }

    fn digitwise(&self, a: FieldElement, b: FieldElement, op: impl Fn(u32, u32) -> u32) -> FieldElement {
        let (mut x, mut y) = (a.0, b.0);
        let mut out = 0;
        let mut place = 1;
        for _ in 0..self.m {
            out += op(x % self.p, y % self.p) * place;
            x /= self.p;
            y /= self.p;
            place *= self.p;
        }
        FieldElement(out)
    }

    /// Schoolbook product reduced by the modulus; used only to build tables.
    fn mul_slow(&self, a: u32, b: u32) -> u32 {
        let p = self.p as u64;
        let m = self.m as usize;
        let a = self.coefficients(FieldElement(a));
        let b = self.coefficients(FieldElement(b));
        let mut prod = vec![0u64; 2 * m - 1];
        for (i, &x) in a.iter().enumerate() {
            for (j, &y) in b.iter().enumerate() {
                prod[i + j] = (prod[i + j] + x as u64 * y as u64) % p;
            }
        }
        // modulus is monic: x^m = -(c_0 + ... + c_{m-1} x^{m-1})
        for d in (m..prod.len()).rev() {
            let lead = prod[d];
            if lead == 0 {
                continue;
            }
            prod[d] = 0;
            for (i, &c) in self.modulus[..m].iter().enumerate() {
                let idx = d - m + i;
                prod[idx] = (prod[idx] + (p - lead) * c as u64) % p;
            }
        }
        prod[..m]
            .iter()
            .rev()
            .fold(0u64, |acc, &c| acc * p + c) as u32
    }

    fn build_tables(&mut self) {
        let q = self.q;
        let group = q - 1;
        let generator = (1..q)
            .find(|&g| self.multiplicative_order(g) == group)
            .expect("the multiplicative group of a finite field is cyclic");
        let mut exp = vec![0u32; 2 * group as usize];
        let mut log = vec![0u32; q as usize];
        let mut acc = 1u32;
        for i in 0..group {
            exp[i as usize] = acc;
            exp[(i + group) as usize] = acc;
            log[acc as usize] = i;
            acc = self.mul_slow(acc, generator);
        }
        self.exp = exp;
        self.log = log;
    }

    fn multiplicative_order(&self, g: u32) -> u32 {
        let mut acc = g;
        let mut order = 1;
        while acc != 1 {
            acc = self.mul_slow(acc, g);
            order += 1;
            if order > self.q {
                return 0;
            }
        }
        order
    }
}

fn validate_modulus(p: u32, m: u32, modulus: &[u32]) -> Result<(), GfError> {
    if modulus.len() != m as usize + 1 {
        return Err(GfError::InvalidModulus(format!(
            "expected {} coefficients for degree {m}, got {}",
            m + 1,
            modulus.len()
        )));
    }
    if modulus.iter().any(|&c| c >= p) {
        return Err(GfError::InvalidModulus(format!(
            "coefficients must lie in [0, {p})"
        )));
    }
    if modulus[m as usize] != 1 {
        return Err(GfError::InvalidModulus("modulus must be monic".into()));
    }
    if !is_irreducible(p, modulus) {
        return Err(GfError::ReduciblePolynomial(modulus.to_vec()));
    }
    Ok(())
}

/// Trial division by every monic polynomial of degree `1..=deg/2`.
pub fn is_irreducible(p: u32, poly: &[u32]) -> bool {
    let deg = poly.len() - 1;
    for d in 1..=deg / 2 {
        let count = (p as u64).pow(d as u32);
        for packed in 0..count {
            let mut divisor = Vec::with_capacity(d + 1);
            let mut v = packed;
            for _ in 0..d {
                divisor.push((v % p as u64) as u32);
                v /= p as u64;
            }
            divisor.push(1);
            if poly_rem(p, poly, &divisor).iter().all(|&c| c == 0) {
                return false;
            }
        }
    }
    true
}

/// Remainder of `num` by the monic polynomial `den` over `F_p`.
fn poly_rem(p: u32, num: &[u32], den: &[u32]) -> Vec<u32> {
    let p = p as u64;
    let mut rem: Vec<u64> = num.iter().map(|&c| c as u64).collect();
    let dd = den.len() - 1;
    for top in (dd..rem.len()).rev() {
        let lead = rem[top];
        if lead == 0 {
            continue;
        }
        for (i, &c) in den.iter().enumerate() {
            let idx = top - dd + i;
            rem[idx] = (rem[idx] + (p - lead) * c as u64 % p) % p;
        }
    }
    rem.truncate(dd);
    rem.into_iter().map(|c| c as u32).collect()
}
