//! Arithmetic in the Eisenstein integers `O = Z[ω]`, `ω = (1 + √-3)/2`.
//!
//! Elements are stored as `a + bω` with `ω² = ω - 1`. Ideals are carried by
//! their HNF-label `[N, c, d]`: the ideal has `Z`-basis `{N/d, dω + c}`.
//! Because `O` has class number one every ideal also carries a generator.
//!
//! The module also provides the residue rings `O/n` and the projective plane
//! `P²(O/n)`, whose points label the cosets `Γ₀(n) \ GL₃(O)` through the
//! bottom row of a matrix.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EisError {
    #[error("gcd of two zero elements is undefined")]
    ZeroGcd,
    #[error("malformed HNF label {0}")]
    BadLabel(String),
    #[error("the zero ideal has no HNF label")]
    ZeroIdeal,
    #[error("row {0} does not generate the unit ideal modulo the level")]
    NotUnimodular(String),
    #[error("{0} does not divide {1}")]
    NotDivisor(String, String),
}

/// An Eisenstein integer `a + bω`.
#[derive(Copy, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default)]
pub struct EisInt {
    pub a: i64,
    pub b: i64,
}

impl EisInt {
    pub const ZERO: EisInt = EisInt { a: 0, b: 0 };
    pub const ONE: EisInt = EisInt { a: 1, b: 0 };
    pub const OMEGA: EisInt = EisInt { a: 0, b: 1 };

    pub const fn new(a: i64, b: i64) -> Self {
        EisInt { a, b }
    }

    pub const fn from_int(a: i64) -> Self {
        EisInt { a, b: 0 }
    }

    /// `a² + ab + b²`.
    pub fn norm(self) -> i64 {
        self.a * self.a + self.a * self.b + self.b * self.b
    }

    /// Complex conjugate; `ω̄ = 1 - ω`.
    pub fn conj(self) -> Self {
        EisInt::new(self.a + self.b, -self.b)
    }

    pub fn is_zero(self) -> bool {
        self.a == 0 && self.b == 0
    }

    pub fn is_unit(self) -> bool {
        self.norm() == 1
    }

    /// The six units, in the order `1, ω, ω², -1, -ω, -ω²`.
    pub fn units() -> [EisInt; 6] {
        UNITS
    }

    /// Complex value, used only for diagnostics and root finding.
    pub fn to_complex(self) -> (f64, f64) {
        let s3 = 3f64.sqrt();
        (self.a as f64 + self.b as f64 * 0.5, self.b as f64 * s3 / 2.0)
    }

    /// Canonical associate and the unit `u` with `self * u == canonical`.
    ///
    /// Among the six associates the one with `a > 0` and lexicographically
    /// largest `(a, b)` is chosen; zero maps to itself.
    pub fn canonical_associate(self) -> (EisInt, EisInt) {
        if self.is_zero() {
            return (self, EisInt::ONE);
        }
        let mut best: Option<(EisInt, EisInt)> = None;
        for u in UNITS {
            let x = self * u;
            let better = match best {
                None => true,
                Some((y, _)) => assoc_key(x) > assoc_key(y),
            };
            if better {
                best = Some((x, u));
            }
        }
        best.unwrap()
    }

    pub fn canonical(self) -> EisInt {
        self.canonical_associate().0
    }

    /// Inverse of a unit.
    pub fn unit_inverse(self) -> EisInt {
        debug_assert!(self.is_unit());
        self.conj()
    }

    /// Exact quotient `self / d` if it lies in `O`.
    pub fn div_exact(self, d: EisInt) -> Option<EisInt> {
        if d.is_zero() {
            return None;
        }
        let n = d.norm();
        let p = self * d.conj();
        if p.a % n == 0 && p.b % n == 0 {
            Some(EisInt::new(p.a / n, p.b / n))
        } else {
            None
        }
    }

    pub fn divides(self, x: EisInt) -> bool {
        if self.is_zero() {
            return x.is_zero();
        }
        x.div_exact(self).is_some()
    }

    /// Euclidean division with `N(r) < N(d)`.
    pub fn div_rem(self, d: EisInt) -> (EisInt, EisInt) {
        assert!(!d.is_zero(), "division by zero");
        let n = d.norm();
        let p = self * d.conj();
        let qa = p.a.div_euclid(n);
        let qb = p.b.div_euclid(n);
        let mut best = (EisInt::ZERO, self);
        let mut best_norm = i64::MAX;
        for da in 0..=1 {
            for db in 0..=1 {
                let q = EisInt::new(qa + da, qb + db);
                let r = self - q * d;
                let rn = r.norm();
                if rn < best_norm {
                    best_norm = rn;
                    best = (q, r);
                }
            }
        }
        debug_assert!(best_norm < n);
        best
    }

    pub fn pow(self, e: u32) -> EisInt {
        let mut r = EisInt::ONE;
        for _ in 0..e {
            r = r * self;
        }
        r
    }
}

fn assoc_key(x: EisInt) -> (bool, i64, i64) {
    (x.a > 0, x.a, x.b)
}

const UNITS: [EisInt; 6] = [
    EisInt::new(1, 0),
    EisInt::new(0, 1),
    EisInt::new(-1, 1),
    EisInt::new(-1, 0),
    EisInt::new(0, -1),
    EisInt::new(1, -1),
];

impl Add for EisInt {
    type Output = EisInt;
    fn add(self, o: EisInt) -> EisInt {
        EisInt::new(self.a + o.a, self.b + o.b)
    }
}

impl Sub for EisInt {
    type Output = EisInt;
    fn sub(self, o: EisInt) -> EisInt {
        EisInt::new(self.a - o.a, self.b - o.b)
    }
}

impl Neg for EisInt {
    type Output = EisInt;
    fn neg(self) -> EisInt {
        EisInt::new(-self.a, -self.b)
    }
}

impl Mul for EisInt {
    type Output = EisInt;
    fn mul(self, o: EisInt) -> EisInt {
        let bd = self.b * o.b;
        EisInt::new(self.a * o.a - bd, self.a * o.b + self.b * o.a + bd)
    }
}

impl Mul<i64> for EisInt {
    type Output = EisInt;
    fn mul(self, k: i64) -> EisInt {
        EisInt::new(self.a * k, self.b * k)
    }
}

impl fmt::Display for EisInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.a, self.b) {
            (a, 0) => write!(f, "{a}"),
            (0, 1) => write!(f, "ω"),
            (0, -1) => write!(f, "-ω"),
            (0, b) => write!(f, "{b}ω"),
            (a, 1) => write!(f, "ω{a:+}"),
            (a, -1) => write!(f, "-ω{a:+}"),
            (a, b) => write!(f, "{b}ω{a:+}"),
        }
    }
}

/// Canonical generator of the ideal `(x, y)`.
pub fn gcd(x: EisInt, y: EisInt) -> Result<EisInt, EisError> {
    if x.is_zero() && y.is_zero() {
        return Err(EisError::ZeroGcd);
    }
    Ok(xgcd(x, y).0)
}

/// Extended gcd: returns `(g, s, t)` with `s x + t y = g`, `g` canonical.
pub fn xgcd(x: EisInt, y: EisInt) -> (EisInt, EisInt, EisInt) {
    let (mut r0, mut r1) = (x, y);
    let (mut s0, mut s1) = (EisInt::ONE, EisInt::ZERO);
    let (mut t0, mut t1) = (EisInt::ZERO, EisInt::ONE);
    while !r1.is_zero() {
        let (q, r) = r0.div_rem(r1);
        r0 = r1;
        r1 = r;
        let s = s0 - q * s1;
        s0 = s1;
        s1 = s;
        let t = t0 - q * t1;
        t0 = t1;
        t1 = t;
    }
    let (g, u) = r0.canonical_associate();
    (g, s0 * u, t0 * u)
}

pub type Vec3 = [EisInt; 3];

/// A 3×3 matrix over `O`, row-major.
#[derive(Copy, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Mat3(pub [[EisInt; 3]; 3]);

impl Mat3 {
    pub fn identity() -> Self {
        Self::diag([EisInt::ONE; 3])
    }

    pub fn diag(d: [EisInt; 3]) -> Self {
        let z = EisInt::ZERO;
        Mat3([[d[0], z, z], [z, d[1], z], [z, z, d[2]]])
    }

    pub fn scalar(u: EisInt) -> Self {
        Self::diag([u; 3])
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(c: [Vec3; 3]) -> Self {
        let mut m = [[EisInt::ZERO; 3]; 3];
        for (j, col) in c.iter().enumerate() {
            for i in 0..3 {
                m[i][j] = col[i];
            }
        }
        Mat3(m)
    }

    pub fn column(&self, j: usize) -> Vec3 {
        [self.0[0][j], self.0[1][j], self.0[2][j]]
    }

    pub fn row(&self, i: usize) -> Vec3 {
        self.0[i]
    }

    pub fn det(&self) -> EisInt {
        det3(self.column(0), self.column(1), self.column(2))
    }

    pub fn mul_vec(&self, v: &Vec3) -> Vec3 {
        let mut out = [EisInt::ZERO; 3];
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.0[i][0] * v[0] + self.0[i][1] * v[1] + self.0[i][2] * v[2];
        }
        out
    }

    /// Row vector times matrix.
    pub fn row_mul(v: &Vec3, m: &Mat3) -> Vec3 {
        let mut out = [EisInt::ZERO; 3];
        for (j, o) in out.iter_mut().enumerate() {
            *o = v[0] * m.0[0][j] + v[1] * m.0[1][j] + v[2] * m.0[2][j];
        }
        out
    }

    pub fn adjugate(&self) -> Mat3 {
        let m = &self.0;
        let mut adj = [[EisInt::ZERO; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                let (r0, r1) = others(j);
                let (c0, c1) = others(i);
                let minor = m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
                adj[i][j] = if (i + j) % 2 == 0 { minor } else { -minor };
            }
        }
        Mat3(adj)
    }

    /// Inverse over `O`, if the determinant is a unit.
    pub fn inverse(&self) -> Option<Mat3> {
        let d = self.det();
        if !d.is_unit() {
            return None;
        }
        let dinv = d.unit_inverse();
        let adj = self.adjugate();
        let mut out = adj.0;
        for row in out.iter_mut() {
            for x in row.iter_mut() {
                *x = *x * dinv;
            }
        }
        Some(Mat3(out))
    }

    pub fn is_invertible(&self) -> bool {
        self.det().is_unit()
    }

    pub fn transpose(&self) -> Mat3 {
        let mut t = [[EisInt::ZERO; 3]; 3];
        for (i, row) in self.0.iter().enumerate() {
            for (j, x) in row.iter().enumerate() {
                t[j][i] = *x;
            }
        }
        Mat3(t)
    }
}

fn others(i: usize) -> (usize, usize) {
    match i {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    }
}

impl Mul for Mat3 {
    type Output = Mat3;
    fn mul(self, o: Mat3) -> Mat3 {
        let mut r = [[EisInt::ZERO; 3]; 3];
        for (i, row) in r.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = self.0[i][0] * o.0[0][j] + self.0[i][1] * o.0[1][j] + self.0[i][2] * o.0[2][j];
            }
        }
        Mat3(r)
    }
}

impl fmt::Display for Mat3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = self
            .0
            .iter()
            .map(|r| format!("[{}, {}, {}]", r[0], r[1], r[2]))
            .collect();
        write!(f, "[{}]", rows.join(", "))
    }
}

pub fn det3(x: Vec3, y: Vec3, z: Vec3) -> EisInt {
    x[0] * (y[1] * z[2] - y[2] * z[1]) - y[0] * (x[1] * z[2] - x[2] * z[1])
        + z[0] * (x[1] * y[2] - x[2] * y[1])
}

/// Canonical representative of `x` modulo the ideal `(m)`, `m ≠ 0`: the
/// residue with `0 ≤ b < d` and `0 ≤ a < N/d` in HNF coordinates.
pub fn reduce_mod(x: EisInt, m: EisInt) -> EisInt {
    let l = EisIdeal::from_generator(m).expect("nonzero modulus").label();
    let d = l.d as i64;
    let a = (l.norm / l.d) as i64;
    let c = l.c as i64;
    let b = x.b.rem_euclid(d);
    let k = (x.b - b) / d;
    EisInt::new((x.a - k * c).rem_euclid(a), b)
}

/// Row Hermite normal form `H` of a nonsingular matrix under left
/// multiplication by `GL₃(O)`: upper triangular, unit-canonical diagonal,
/// entries above the diagonal reduced modulo the diagonal entry below them.
pub fn hermite_form(y: &Mat3) -> Mat3 {
    let mut m = y.0;
    for col in 0..3 {
        loop {
            let nz: Vec<usize> = (col..3).filter(|&i| !m[i][col].is_zero()).collect();
            if nz.len() <= 1 {
                if let Some(&r) = nz.first() {
                    m.swap(r, col);
                }
                break;
            }
            let &r = nz.iter().min_by_key(|&&i| m[i][col].norm()).unwrap();
            for &i in &nz {
                if i != r {
                    let (q, _) = m[i][col].div_rem(m[r][col]);
                    let rr = m[r];
                    for k in 0..3 {
                        m[i][k] = m[i][k] - q * rr[k];
                    }
                }
            }
        }
        assert!(!m[col][col].is_zero(), "singular matrix has no Hermite form");
        let u = m[col][col].canonical_associate().1;
        for k in 0..3 {
            m[col][k] = m[col][k] * u;
        }
    }
    normalize_upper(&mut m);
    Mat3(m)
}

/// Normalizes an upper-triangular nonsingular matrix into Hermite form.
pub fn hermite_form_upper(t: &Mat3) -> Mat3 {
    let mut m = t.0;
    for row in m.iter_mut().enumerate() {
        let (i, r) = row;
        let u = r[i].canonical_associate().1;
        for x in r.iter_mut() {
            *x = *x * u;
        }
    }
    normalize_upper(&mut m);
    Mat3(m)
}

fn normalize_upper(m: &mut [[EisInt; 3]; 3]) {
    for j in 1..3 {
        for i in 0..j {
            let r = reduce_mod(m[i][j], m[j][j]);
            let q = (m[i][j] - r).div_exact(m[j][j]).unwrap();
            if !q.is_zero() {
                let rj = m[j];
                for k in 0..3 {
                    m[i][k] = m[i][k] - q * rj[k];
                }
            }
        }
    }
}

/// Primitive, unit-normalized representative of the ray through `v`:
/// the coordinate gcd is divided out and the first nonzero coordinate is
/// made unit-canonical. Returns `None` for the zero vector.
pub fn spanning_point(v: &Vec3) -> Option<Vec3> {
    let mut g = EisInt::ZERO;
    for x in v {
        if !x.is_zero() {
            g = if g.is_zero() { x.canonical() } else { gcd(g, *x).unwrap() };
        }
    }
    if g.is_zero() {
        return None;
    }
    let mut w = [EisInt::ZERO; 3];
    for (o, x) in w.iter_mut().zip(v) {
        *o = x.div_exact(g).unwrap();
    }
    let first = w.iter().find(|x| !x.is_zero()).copied().unwrap();
    let u = first.canonical_associate().1;
    for x in w.iter_mut() {
        *x = *x * u;
    }
    Some(w)
}

/// Rank over `F = Q(ω)` of a list of vectors in `O³`.
pub fn rank_over_f(vs: &[Vec3]) -> usize {
    let n = vs.len();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                if !det3(vs[i], vs[j], vs[k]).is_zero() {
                    return 3;
                }
            }
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            if !cross_is_zero(vs[i], vs[j]) {
                return 2;
            }
        }
    }
    if vs.iter().any(|v| v.iter().any(|x| !x.is_zero())) {
        1
    } else {
        0
    }
}

fn cross_is_zero(x: Vec3, y: Vec3) -> bool {
    (x[1] * y[2] - x[2] * y[1]).is_zero()
        && (x[0] * y[2] - x[2] * y[0]).is_zero()
        && (x[0] * y[1] - x[1] * y[0]).is_zero()
}

/// HNF-label `[N, c, d]` of an ideal.
#[derive(Copy, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct HnfLabel {
    pub norm: u64,
    pub c: u64,
    pub d: u64,
}

impl HnfLabel {
    pub const fn new(norm: u64, c: u64, d: u64) -> Self {
        HnfLabel { norm, c, d }
    }

    fn validate(&self) -> Result<(), EisError> {
        let bad = || EisError::BadLabel(self.to_string());
        if self.norm == 0 || self.d == 0 || !self.norm.is_multiple_of(self.d) {
            return Err(bad());
        }
        let a = self.norm / self.d;
        if !a.is_multiple_of(self.d) || !self.c.is_multiple_of(self.d) || self.c >= a {
            return Err(bad());
        }
        // the Z-module must be closed under multiplication by ω
        let (c, d) = (self.c as u128, self.d as u128);
        if (c * c + c * d + d * d) % (self.norm as u128) != 0 {
            return Err(bad());
        }
        Ok(())
    }
}

impl fmt::Display for HnfLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{},{}]", self.norm, self.c, self.d)
    }
}

impl FromStr for HnfLabel {
    type Err = EisError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || EisError::BadLabel(s.to_string());
        let t = s.trim().strip_prefix('[').and_then(|t| t.strip_suffix(']')).ok_or_else(bad)?;
        let parts: Vec<u64> = t
            .split(',')
            .map(|p| p.trim().parse::<u64>())
            .collect::<Result<_, _>>()
            .map_err(|_| bad())?;
        if parts.len() != 3 {
            return Err(bad());
        }
        let l = HnfLabel::new(parts[0], parts[1], parts[2]);
        l.validate()?;
        Ok(l)
    }
}

/// A nonzero ideal of `O`.
#[derive(Copy, Clone, PartialEq, Eq, Hash, Debug)]
pub struct EisIdeal {
    label: HnfLabel,
    generator: EisInt,
}

impl EisIdeal {
    pub fn unit() -> Self {
        EisIdeal { label: HnfLabel::new(1, 0, 1), generator: EisInt::ONE }
    }

    pub fn from_label(label: HnfLabel) -> Result<Self, EisError> {
        label.validate()?;
        let a = (label.norm / label.d) as i64;
        let g = gcd(EisInt::from_int(a), EisInt::new(label.c as i64, label.d as i64))?;
        let g = g.canonical();
        if g.norm() as u64 != label.norm {
            return Err(EisError::BadLabel(label.to_string()));
        }
        Ok(EisIdeal { label, generator: g })
    }

    pub fn from_generator(g: EisInt) -> Result<Self, EisError> {
        if g.is_zero() {
            return Err(EisError::ZeroIdeal);
        }
        // Z-basis {g, gω} in coordinates (1, ω)
        let v1 = (g.a, g.b);
        let w = g * EisInt::OMEGA;
        let v2 = (w.a, w.b);
        let (d, x, y) = int_xgcd(v1.1, v2.1);
        let c0 = x * v1.0 + y * v2.0;
        let norm = g.norm();
        let a = norm / d;
        let c = c0.rem_euclid(a);
        let label = HnfLabel::new(norm as u64, c as u64, d as u64);
        label.validate()?;
        Ok(EisIdeal { label, generator: g.canonical() })
    }

    pub fn label(&self) -> HnfLabel {
        self.label
    }

    pub fn norm(&self) -> u64 {
        self.label.norm
    }

    pub fn generator(&self) -> EisInt {
        self.generator
    }

    pub fn contains(&self, x: EisInt) -> bool {
        self.generator.divides(x)
    }

    /// `self ⊇ other`, i.e. `self | other`.
    pub fn divides(&self, other: &EisIdeal) -> bool {
        self.contains(other.generator)
    }

    pub fn conjugate(&self) -> EisIdeal {
        EisIdeal::from_generator(self.generator.conj()).expect("nonzero")
    }

    pub fn mul(&self, other: &EisIdeal) -> EisIdeal {
        EisIdeal::from_generator(self.generator * other.generator).expect("nonzero")
    }

    /// `self / other` when `other | self`.
    pub fn quotient(&self, other: &EisIdeal) -> Result<EisIdeal, EisError> {
        match self.generator.div_exact(other.generator) {
            Some(q) => Ok(EisIdeal::from_generator(q).expect("nonzero")),
            None => Err(EisError::NotDivisor(other.label.to_string(), self.label.to_string())),
        }
    }

    /// Prime factorization ordered by `(norm, label)`.
    pub fn factor(&self) -> Vec<(PrimeIdeal, u32)> {
        let mut out = Vec::new();
        let mut rest = self.generator;
        for ell in int_prime_factors(self.norm()) {
            for p in primes_above(ell) {
                let pi = p.ideal.generator;
                let mut e = 0;
                while let Some(q) = rest.div_exact(pi) {
                    rest = q;
                    e += 1;
                }
                if e > 0 {
                    out.push((p, e));
                }
            }
        }
        debug_assert!(rest.is_unit());
        out.sort_by_key(|(p, _)| (p.norm(), p.ideal.label));
        out
    }

    pub fn is_prime(&self) -> bool {
        let f = self.factor();
        f.len() == 1 && f[0].1 == 1
    }

    /// All ideals dividing `self`, sorted by label.
    pub fn divisors(&self) -> Vec<EisIdeal> {
        let mut out = vec![EisIdeal::unit()];
        for (p, e) in self.factor() {
            let mut next = Vec::new();
            for d in &out {
                let mut x = *d;
                next.push(x);
                for _ in 0..e {
                    x = x.mul(&p.ideal);
                    next.push(x);
                }
            }
            out = next;
        }
        out.sort_by_key(|i| i.label);
        out
    }
}

impl fmt::Display for EisIdeal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label)
    }
}

fn int_xgcd(a: i64, b: i64) -> (i64, i64, i64) {
    if b == 0 {
        if a < 0 {
            (-a, -1, 0)
        } else {
            (a, 1, 0)
        }
    } else {
        let (g, x, y) = int_xgcd(b, a.rem_euclid(b));
        (g, y, x - (a.div_euclid(b)) * y)
    }
}

/// Distinct rational prime factors by trial division.
pub fn int_prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            out.push(p);
            while n.is_multiple_of(p) {
                n /= p;
            }
        }
        p += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

pub fn is_int_prime(n: u64) -> bool {
    n >= 2 && int_prime_factors(n) == vec![n]
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum PrimeKind {
    Split,
    Inert,
    Ramified,
}

/// A prime ideal together with its residue field size.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct PrimeIdeal {
    pub ideal: EisIdeal,
    pub rational_prime: u64,
    pub kind: PrimeKind,
}

impl PrimeIdeal {
    pub fn norm(&self) -> u64 {
        self.ideal.norm()
    }

    pub fn label(&self) -> HnfLabel {
        self.ideal.label()
    }

    /// A generator `π`.
    pub fn uniformizer(&self) -> EisInt {
        self.ideal.generator()
    }

    pub fn from_ideal(ideal: EisIdeal) -> Option<PrimeIdeal> {
        let f = ideal.factor();
        if f.len() == 1 && f[0].1 == 1 {
            Some(f[0].0)
        } else {
            None
        }
    }

    /// Representatives of `O/p`: exactly `N(p)` pairwise incongruent elements, including 0.
    pub fn residue_reps(&self) -> Vec<EisInt> {
        let ring = ResidueRing::new(self.ideal);
        (0..ring.size()).map(|i| ring.lift_centered(i)).collect()
    }
}

/// The prime ideals above a rational prime `ell`, sorted by label.
pub fn primes_above(ell: u64) -> Vec<PrimeIdeal> {
    let mut out = Vec::new();
    if ell == 3 {
        let id = EisIdeal::from_generator(EisInt::new(1, 1)).unwrap();
        out.push(PrimeIdeal { ideal: id, rational_prime: 3, kind: PrimeKind::Ramified });
    } else if ell % 3 == 1 {
        for r in 0..ell {
            if (r * r + ell - r + 1).is_multiple_of(ell) {
                let c = (ell - r) % ell;
                let id = EisIdeal::from_label(HnfLabel::new(ell, c, 1)).unwrap();
                out.push(PrimeIdeal { ideal: id, rational_prime: ell, kind: PrimeKind::Split });
            }
        }
    } else {
        let id = EisIdeal::from_label(HnfLabel::new(ell * ell, 0, ell)).unwrap();
        out.push(PrimeIdeal { ideal: id, rational_prime: ell, kind: PrimeKind::Inert });
    }
    out.sort_by_key(|p| p.ideal.label);
    out
}

/// All primes of `O` with norm at most `bound`, ordered by `(norm, label)`.
pub fn primes_up_to(bound: u64) -> Vec<PrimeIdeal> {
    let mut out = Vec::new();
    for ell in 2..=bound {
        if !is_int_prime(ell) {
            continue;
        }
        for p in primes_above(ell) {
            if p.norm() <= bound {
                out.push(p);
            }
        }
    }
    out.sort_by_key(|p| (p.norm(), p.ideal.label));
    out
}

/// All ideals of norm exactly `n`, sorted by label.
pub fn ideals_of_norm(n: u64) -> Vec<EisIdeal> {
    let mut out = Vec::new();
    for d in 1..=n {
        if d * d > n {
            break;
        }
        if !n.is_multiple_of(d) || !(n / d).is_multiple_of(d) {
            continue;
        }
        let a = n / d;
        let mut c = 0;
        while c < a {
            let l = HnfLabel::new(n, c, d);
            if l.validate().is_ok() {
                out.push(EisIdeal::from_label(l).unwrap());
            }
            c += d;
        }
    }
    out.sort_by_key(|i| i.label);
    out
}

pub fn ideals_up_to(bound: u64) -> Vec<EisIdeal> {
    (1..=bound).flat_map(ideals_of_norm).collect()
}

/// The finite ring `O/n`; residues are indexed by `0..N`.
#[derive(Clone, Debug)]
pub struct ResidueRing {
    modulus: EisIdeal,
    a: i64,
    c: i64,
    d: i64,
    primes: Vec<EisIdeal>,
    unit: Vec<bool>,
    inverse: Vec<u32>,
}

impl ResidueRing {
    pub fn new(modulus: EisIdeal) -> Self {
        let l = modulus.label();
        let d = l.d as i64;
        let a = (l.norm / l.d) as i64;
        let primes: Vec<EisIdeal> = modulus.factor().into_iter().map(|(p, _)| p.ideal).collect();
        let mut ring = ResidueRing {
            modulus,
            a,
            c: l.c as i64,
            d,
            primes,
            unit: Vec::new(),
            inverse: Vec::new(),
        };
        let n = ring.size();
        let mut unit = vec![false; n as usize];
        let mut inverse = vec![0u32; n as usize];
        let g = modulus.generator();
        for i in 0..n {
            let x = ring.lift(i);
            let is_unit = ring.primes.iter().all(|p| !p.contains(x));
            unit[i as usize] = is_unit;
            if is_unit {
                let (_, s, _) = xgcd(x, g);
                inverse[i as usize] = ring.reduce(s);
            }
        }
        if n == 1 {
            unit[0] = true;
        }
        ring.unit = unit;
        ring.inverse = inverse;
        ring
    }

    pub fn modulus(&self) -> &EisIdeal {
        &self.modulus
    }

    pub fn size(&self) -> u32 {
        self.modulus.norm() as u32
    }

    pub fn reduce(&self, x: EisInt) -> u32 {
        let b = x.b.rem_euclid(self.d);
        let k = (x.b - b) / self.d;
        let a = (x.a - k * self.c).rem_euclid(self.a);
        (a + self.a * b) as u32
    }

    pub fn lift(&self, i: u32) -> EisInt {
        let i = i as i64;
        EisInt::new(i % self.a, i / self.a)
    }

    /// Lift with the rational coordinate centered around zero.
    pub fn lift_centered(&self, i: u32) -> EisInt {
        let x = self.lift(i);
        let a = if 2 * x.a > self.a { x.a - self.a } else { x.a };
        EisInt::new(a, x.b)
    }

    pub fn add(&self, x: u32, y: u32) -> u32 {
        self.reduce(self.lift(x) + self.lift(y))
    }

    pub fn mul(&self, x: u32, y: u32) -> u32 {
        self.reduce(self.lift(x) * self.lift(y))
    }

    pub fn neg(&self, x: u32) -> u32 {
        self.reduce(-self.lift(x))
    }

    pub fn is_unit(&self, x: u32) -> bool {
        self.unit[x as usize]
    }

    /// Inverse of a unit residue; the result is only meaningful for units.
    pub fn inverse(&self, x: u32) -> u32 {
        debug_assert!(self.is_unit(x));
        self.inverse[x as usize]
    }

    pub fn units(&self) -> Vec<u32> {
        (0..self.size()).filter(|&i| self.is_unit(i)).collect()
    }

    /// Whether a row generates the unit ideal modulo `n`.
    pub fn is_unimodular(&self, row: &[u32; 3]) -> bool {
        self.primes.iter().all(|p| row.iter().any(|&x| !p.contains(self.lift(x))))
    }

    pub fn primes(&self) -> &[EisIdeal] {
        &self.primes
    }
}

/// A point of `P²(O/n)`: a unimodular row modulo scaling by `(O/n)^×`.
#[derive(Copy, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct ProjPoint(pub [u32; 3]);

/// Indexed enumeration of `P²(O/n)`.
#[derive(Clone, Debug)]
pub struct ProjectivePlane {
    ring: ResidueRing,
    units: Vec<u32>,
    points: Vec<ProjPoint>,
    index: HashMap<[u32; 3], u32>,
}

impl ProjectivePlane {
    pub fn new(level: EisIdeal) -> Self {
        let ring = ResidueRing::new(level);
        let units = ring.units();
        let n = ring.size();
        let nonunits: Vec<u32> = (0..n).filter(|&x| !ring.is_unit(x)).collect();
        let one = ring.reduce(EisInt::ONE);
        let mut points = Vec::new();
        if n == 1 {
            points.push(ProjPoint([0, 0, 0]));
        } else {
            for y in 0..n {
                for z in 0..n {
                    points.push(ProjPoint([one, y, z]));
                }
            }
            for &x in &nonunits {
                for z in 0..n {
                    points.push(ProjPoint([x, one, z]));
                }
            }
            for &x in &nonunits {
                for &y in &nonunits {
                    points.push(ProjPoint([x, y, one]));
                }
            }
            let mut rest = Vec::new();
            for &x in &nonunits {
                for &y in &nonunits {
                    for &z in &nonunits {
                        let r = [x, y, z];
                        if !ring.is_unimodular(&r) {
                            continue;
                        }
                        if min_over_units(&ring, &units, &r) == r {
                            rest.push(ProjPoint(r));
                        }
                    }
                }
            }
            points.extend(rest);
        }
        let index = points.iter().enumerate().map(|(i, p)| (p.0, i as u32)).collect();
        ProjectivePlane { ring, units, points, index }
    }

    pub fn ring(&self) -> &ResidueRing {
        &self.ring
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: u32) -> ProjPoint {
        self.points[i as usize]
    }

    pub fn points(&self) -> &[ProjPoint] {
        &self.points
    }

    /// Canonical representative of the class of a unimodular residue row.
    pub fn normalize(&self, r: &[u32; 3]) -> Option<[u32; 3]> {
        let ring = &self.ring;
        if ring.size() == 1 {
            return Some([0, 0, 0]);
        }
        if !ring.is_unimodular(r) {
            return None;
        }
        for k in 0..3 {
            if ring.is_unit(r[k]) {
                let inv = ring.inverse(r[k]);
                return Some([ring.mul(r[0], inv), ring.mul(r[1], inv), ring.mul(r[2], inv)]);
            }
        }
        Some(min_over_units(ring, &self.units, r))
    }

    pub fn index_of_residues(&self, r: &[u32; 3]) -> Option<u32> {
        self.normalize(r).map(|k| self.index[&k])
    }

    /// Coset label of a row of `O³`.
    pub fn coset_label(&self, row: &Vec3) -> Result<u32, EisError> {
        let r = [self.ring.reduce(row[0]), self.ring.reduce(row[1]), self.ring.reduce(row[2])];
        self.index_of_residues(&r).ok_or_else(|| {
            EisError::NotUnimodular(format!("({}, {}, {})", row[0], row[1], row[2]))
        })
    }

    /// Label of `Γ₀(n) g` for `g ∈ GL₃(O)`: its bottom row.
    pub fn coset_of_matrix(&self, g: &Mat3) -> u32 {
        self.coset_label(&g.row(2)).expect("GL3 matrix has unimodular rows")
    }

    /// Right action of a matrix on a point: `P ↦ P·h`.
    pub fn act_right(&self, i: u32, h: &Mat3) -> u32 {
        let p = self.point(i).0;
        let row = [self.ring.lift(p[0]), self.ring.lift(p[1]), self.ring.lift(p[2])];
        let r = Mat3::row_mul(&row, h);
        self.coset_label(&r).expect("invertible action preserves unimodularity")
    }

    /// A matrix `g ∈ SL₃(O)` whose bottom row represents point `i`.
    pub fn lift_point(&self, i: u32) -> Mat3 {
        let p = self.point(i).0;
        let n = self.ring.modulus().generator();
        let mut row = [self.ring.lift(p[0]), self.ring.lift(p[1]), self.ring.lift(p[2])];
        if self.ring.size() == 1 {
            row = [EisInt::ZERO, EisInt::ZERO, EisInt::ONE];
        }
        let row = unimodular_lift(row, n);
        complete_to_sl3(row)
    }
}

fn min_over_units(ring: &ResidueRing, units: &[u32], r: &[u32; 3]) -> [u32; 3] {
    let mut best = *r;
    for &u in units {
        let s = [ring.mul(r[0], u), ring.mul(r[1], u), ring.mul(r[2], u)];
        if s < best {
            best = s;
        }
    }
    best
}

/// Adjust a row that is unimodular modulo `n` by multiples of `n` until it is
/// unimodular over `O`.
fn unimodular_lift(mut row: Vec3, n: EisInt) -> Vec3 {
    if row[0].is_zero() && row[1].is_zero() {
        row[0] = n;
    }
    let g = gcd(row[0], row[1]).expect("nonzero");
    if gcd(g, row[2]).map(|x| x.is_unit()).unwrap_or(false) {
        return row;
    }
    // deterministic search over small multipliers t with gcd(g, z + t n) = 1
    for radius in 1i64..64 {
        for ta in -radius..=radius {
            for tb in -radius..=radius {
                if ta.abs().max(tb.abs()) != radius {
                    continue;
                }
                let z = row[2] + EisInt::new(ta, tb) * n;
                if gcd(g, z).map(|x| x.is_unit()).unwrap_or(false) {
                    return [row[0], row[1], z];
                }
            }
        }
    }
    panic!("failed to lift unimodular row");
}

/// A matrix of determinant 1 with the given unimodular bottom row.
pub fn complete_to_sl3(row: Vec3) -> Mat3 {
    // Column operations E reduce the row to e₃; then E⁻¹ has bottom row `row`.
    let mut r = row;
    let mut inv = Mat3::identity();
    // apply col op "col_i += q col_j" to r; E⁻¹ accumulates the inverse row op
    let col_add = |r: &mut Vec3, inv: &mut Mat3, i: usize, j: usize, q: EisInt| {
        r[i] = r[i] + q * r[j];
        // inverse of C = I + q e_j e_iᵀ is I - q e_j e_iᵀ; inv ← C⁻¹ inv: row_j -= q row_i
        let ri = inv.0[i];
        for k in 0..3 {
            inv.0[j][k] = inv.0[j][k] - q * ri[k];
        }
    };
    // Euclid to collect the gcd into position 2
    for (a, b) in [(0usize, 2usize), (1, 2)] {
        while !r[a].is_zero() {
            if r[b].is_zero() {
                // swap through additions
                col_add(&mut r, &mut inv, b, a, EisInt::ONE);
            }
            let (q, _) = r[a].div_rem(r[b]);
            col_add(&mut r, &mut inv, a, b, -q);
            if r[a].is_zero() {
                break;
            }
            let (q2, _) = r[b].div_rem(r[a]);
            col_add(&mut r, &mut inv, b, a, -q2);
        }
    }
    // r = (0, 0, u) with u a unit; scale by diag(1, u, u⁻¹) style matrix to get e₃
    let u = r[2];
    assert!(u.is_unit(), "row was not unimodular");
    // inv currently satisfies: e-row `r` = row · E, inv = E⁻¹, so row = r · inv = u · inv[2].
    // Replace inv[2] by u·inv[2] and inv[1] by u⁻¹·inv[1] to keep determinant.
    let mut m = inv;
    for k in 0..3 {
        m.0[2][k] = m.0[2][k] * u;
        m.0[1][k] = m.0[1][k] * u.unit_inverse();
    }
    debug_assert_eq!(m.row(2), row);
    let d = m.det();
    if d != EisInt::ONE {
        let dinv = d.unit_inverse();
        for k in 0..3 {
            m.0[0][k] = m.0[0][k] * dinv;
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norms() {
        assert_eq!(EisInt::ZERO.norm(), 0);
        assert_eq!(EisInt::new(1, 1).norm(), 3);
        assert_eq!(EisInt::new(-30, 7).norm(), 739);
    }

    #[test]
    fn omega_squared() {
        assert_eq!(EisInt::OMEGA * EisInt::OMEGA, EisInt::new(-1, 1));
        assert_eq!(EisInt::OMEGA * EisInt::OMEGA.conj(), EisInt::ONE);
    }

    #[test]
    fn gcd_examples() {
        assert_eq!(gcd(EisInt::from_int(2), EisInt::ZERO).unwrap(), EisInt::from_int(2));
        assert_eq!(
            gcd(EisInt::new(1, 1), EisInt::from_int(3)).unwrap(),
            EisInt::new(1, 1).canonical()
        );
        assert_eq!(gcd(EisInt::from_int(2), EisInt::from_int(3)).unwrap(), EisInt::ONE);
        assert_eq!(gcd(EisInt::ZERO, EisInt::ZERO), Err(EisError::ZeroGcd));
    }

    #[test]
    fn labels() {
        let i = EisIdeal::from_generator(EisInt::from_int(27)).unwrap();
        assert_eq!(i.label(), HnfLabel::new(729, 0, 27));
        let j = EisIdeal::from_generator(EisInt::new(1, -9)).unwrap();
        assert_eq!(j.label(), HnfLabel::new(73, 8, 1));
        assert_eq!(j.conjugate().label(), HnfLabel::new(73, 64, 1));
        assert_eq!(EisIdeal::from_generator(EisInt::ONE).unwrap().label(), HnfLabel::new(1, 0, 1));
        assert!("[73,9,1]".parse::<HnfLabel>().is_err());
        assert!("[73,8]".parse::<HnfLabel>().is_err());
    }

    #[test]
    fn factorizations() {
        let n = EisIdeal::from_label(HnfLabel::new(147, 7, 7)).unwrap();
        let f: Vec<(u64, u32)> = n.factor().iter().map(|(p, e)| (p.norm(), *e)).collect();
        assert_eq!(f, vec![(3, 1), (7, 1), (7, 1)]);
        let n = EisIdeal::from_label(HnfLabel::new(49, 18, 1)).unwrap();
        assert_eq!(n.factor(), vec![(primes_above(7)[1], 2)]);
        let n = EisIdeal::from_label(HnfLabel::new(576, 0, 24)).unwrap();
        let f: Vec<(u64, u32)> = n.factor().iter().map(|(p, e)| (p.norm(), *e)).collect();
        assert_eq!(f, vec![(3, 2), (4, 3)]);
        assert!(EisIdeal::unit().factor().is_empty());
    }

    #[test]
    fn residue_representatives() {
        let p2 = primes_above(2)[0];
        let mut r = p2.residue_reps();
        r.sort();
        let mut want = vec![EisInt::ZERO, EisInt::ONE, EisInt::OMEGA, EisInt::new(1, 1)];
        want.sort();
        assert_eq!(r, want);
        let p3 = primes_above(3)[0];
        let mut r = p3.residue_reps();
        r.sort();
        assert_eq!(r, vec![EisInt::from_int(-1), EisInt::ZERO, EisInt::ONE]);
        for p in primes_above(7) {
            let ring = ResidueRing::new(p.ideal);
            let reps = p.residue_reps();
            assert_eq!(reps.len(), 7);
            let mut seen: Vec<u32> = reps.iter().map(|x| ring.reduce(*x)).collect();
            seen.sort();
            seen.dedup();
            assert_eq!(seen.len(), 7);
        }
    }

    #[test]
    fn projective_plane_sizes() {
        for p in primes_up_to(80) {
            if p.norm() == 7 || p.norm() == 73 || p.norm() == 4 {
                let n = p.norm() as usize;
                assert_eq!(ProjectivePlane::new(p.ideal).len(), n * n + n + 1);
            }
        }
        let nine = EisIdeal::from_label(HnfLabel::new(9, 0, 3)).unwrap();
        assert_eq!(ProjectivePlane::new(nine).len(), 117);
    }

    #[test]
    fn hermite_forms() {
        let y = Mat3([
            [EisInt::new(2, 1), EisInt::new(0, 3), EisInt::ONE],
            [EisInt::new(1, -1), EisInt::new(5, 0), EisInt::new(0, 2)],
            [EisInt::new(0, 1), EisInt::new(-1, 4), EisInt::new(3, 3)],
        ]);
        let h = hermite_form(&y);
        assert_eq!(h.det().norm(), y.det().norm());
        assert!(h.0[1][0].is_zero() && h.0[2][0].is_zero() && h.0[2][1].is_zero());
        let g = Mat3::from_columns([[EisInt::ONE, EisInt::new(0, 1), EisInt::ZERO], [EisInt::ZERO, EisInt::ONE, EisInt::new(2, -1)], [EisInt::ZERO, EisInt::ZERO, EisInt::new(-1, 1)]]);
        assert_eq!(hermite_form(&(g * y)), h);
        assert_eq!(hermite_form_upper(&h), h);
    }

    #[test]
    fn lifts_have_right_bottom_row() {
        let n = EisIdeal::from_label(HnfLabel::new(36, 0, 6)).unwrap();
        let pl = ProjectivePlane::new(n);
        for i in 0..pl.len() as u32 {
            let g = pl.lift_point(i);
            assert_eq!(g.det(), EisInt::ONE);
            assert_eq!(pl.coset_of_matrix(&g), i);
        }
    }
}
