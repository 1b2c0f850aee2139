//! Exact linear algebra: sparse elimination over large prime fields with
//! rational reconstruction, small dense matrices over `Q`, characteristic
//! polynomials and factorization into factors of degree at most two.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};
use std::fmt;
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinalgError {
    #[error("ranks disagree across primes: {0:?}")]
    PrimeDisagreement(Vec<usize>),
    #[error("rational reconstruction failed")]
    Reconstruction,
    #[error("matrix is not square")]
    NotSquare,
    #[error("matrix is singular")]
    Singular,
    #[error("malformed matrix text: {0}")]
    Parse(String),
}

/// Sparse integer matrix in row-major triplet form.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SparseMat {
    rows: usize,
    cols: usize,
    entries: Vec<(u32, u32, i64)>,
}

impl SparseMat {
    /// Builds a matrix, summing duplicate positions and dropping zeros.
    pub fn new(rows: usize, cols: usize, triplets: impl IntoIterator<Item = (usize, usize, i64)>) -> Self {
        let mut map: BTreeMap<(u32, u32), i64> = BTreeMap::new();
        for (i, j, v) in triplets {
            assert!(i < rows && j < cols, "entry ({i}, {j}) out of range");
            *map.entry((i as u32, j as u32)).or_default() += v;
        }
        let entries = map.into_iter().filter(|(_, v)| *v != 0).map(|((i, j), v)| (i, j, v)).collect();
        SparseMat { rows, cols, entries }
    }

    pub fn zero(rows: usize, cols: usize) -> Self {
        SparseMat { rows, cols, entries: Vec::new() }
    }

    pub fn identity(n: usize) -> Self {
        SparseMat::new(n, n, (0..n).map(|i| (i, i, 1)))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[(u32, u32, i64)] {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn transpose(&self) -> SparseMat {
        SparseMat::new(self.cols, self.rows, self.entries.iter().map(|&(i, j, v)| (j as usize, i as usize, v)))
    }

    /// Exact product `self · other`.
    pub fn mul(&self, other: &SparseMat) -> SparseMat {
        assert_eq!(self.cols, other.rows);
        let mut by_row: Vec<Vec<(u32, i64)>> = vec![Vec::new(); other.rows];
        for &(i, j, v) in &other.entries {
            by_row[i as usize].push((j, v));
        }
        let mut acc: BTreeMap<(u32, u32), i128> = BTreeMap::new();
        for &(i, k, v) in &self.entries {
            for &(j, w) in &by_row[k as usize] {
                *acc.entry((i, j)).or_default() += v as i128 * w as i128;
            }
        }
        let entries = acc
            .into_iter()
            .filter(|(_, v)| *v != 0)
            .map(|((i, j), v)| (i, j, i64::try_from(v).expect("product entry overflow")))
            .collect();
        SparseMat { rows: self.rows, cols: other.cols, entries }
    }

    pub fn mul_vec(&self, v: &[BigInt]) -> Vec<BigInt> {
        assert_eq!(v.len(), self.cols);
        let mut out = vec![BigInt::zero(); self.rows];
        for &(i, j, x) in &self.entries {
            if !v[j as usize].is_zero() {
                out[i as usize] += &v[j as usize] * x;
            }
        }
        out
    }

    pub fn mul_vec_q(&self, v: &[BigRational]) -> Vec<BigRational> {
        assert_eq!(v.len(), self.cols);
        let mut out = vec![BigRational::zero(); self.rows];
        for &(i, j, x) in &self.entries {
            if !v[j as usize].is_zero() {
                out[i as usize] += &v[j as usize] * BigRational::from_integer(BigInt::from(x));
            }
        }
        out
    }

    /// Row-vector product `v · self`.
    pub fn vec_mul(&self, v: &[BigInt]) -> Vec<BigInt> {
        assert_eq!(v.len(), self.rows);
        let mut out = vec![BigInt::zero(); self.cols];
        for &(i, j, x) in &self.entries {
            if !v[i as usize].is_zero() {
                out[j as usize] += &v[i as usize] * x;
            }
        }
        out
    }

    pub fn column_entries(&self) -> Vec<Vec<(u32, i64)>> {
        let mut cols = vec![Vec::new(); self.cols];
        for &(i, j, v) in &self.entries {
            cols[j as usize].push((i, v));
        }
        cols
    }

    /// Plain-text triplet format: header `rows cols nnz`, then `i j v` lines.
    pub fn to_triplet_text(&self) -> String {
        let mut s = format!("{} {} {}\n", self.rows, self.cols, self.entries.len());
        for (i, j, v) in &self.entries {
            s.push_str(&format!("{i} {j} {v}\n"));
        }
        s
    }

    pub fn from_triplet_text(text: &str) -> Result<SparseMat, LinalgError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| LinalgError::Parse("empty".into()))?;
        let h: Vec<usize> = header
            .split_whitespace()
            .map(|x| x.parse())
            .collect::<Result<_, _>>()
            .map_err(|_| LinalgError::Parse(header.into()))?;
        if h.len() != 3 {
            return Err(LinalgError::Parse(header.into()));
        }
        let mut trip = Vec::with_capacity(h[2]);
        for l in lines {
            let p: Vec<&str> = l.split_whitespace().collect();
            let bad = || LinalgError::Parse(l.to_string());
            if p.len() != 3 {
                return Err(bad());
            }
            let i: usize = p[0].parse().map_err(|_| bad())?;
            let j: usize = p[1].parse().map_err(|_| bad())?;
            let v: i64 = p[2].parse().map_err(|_| bad())?;
            if i >= h[0] || j >= h[1] {
                return Err(bad());
            }
            trip.push((i, j, v));
        }
        if trip.len() != h[2] {
            return Err(LinalgError::Parse("entry count mismatch".into()));
        }
        Ok(SparseMat::new(h[0], h[1], trip))
    }
}

impl fmt::Display for SparseMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_triplet_text())
    }
}

fn mulmod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

fn powmod(mut a: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1u64;
    a %= p;
    while e > 0 {
        if e & 1 == 1 {
            r = mulmod(r, a, p);
        }
        a = mulmod(a, a, p);
        e >>= 1;
    }
    r
}

fn invmod(a: u64, p: u64) -> u64 {
    powmod(a, p - 2, p)
}

/// Deterministic Miller-Rabin for 64-bit integers.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = powmod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// The largest primes below `2^61`, used for all modular computations.
pub fn large_primes() -> &'static [u64] {
    static PRIMES: OnceLock<Vec<u64>> = OnceLock::new();
    PRIMES.get_or_init(|| {
        let mut v = Vec::new();
        let mut n = (1u64 << 61) - 1;
        while v.len() < 8 {
            if is_prime_u64(n) {
                v.push(n);
            }
            n -= 2;
        }
        v
    })
}

fn to_mod(x: i64, p: u64) -> u64 {
    x.rem_euclid(p as i64) as u64
}

fn bigint_mod(x: &BigInt, p: u64) -> u64 {
    x.mod_floor(&BigInt::from(p)).to_u64().unwrap()
}

/// Gaussian elimination of a sparse matrix over `F_p` with Markowitz-style
/// pivoting (fewest remaining entries in the column, then shortest row,
/// ties broken by index).
pub struct ModElim {
    p: u64,
    cols: usize,
    /// Pivot rows in elimination order, each `(pivot column, row)`.
    pivots: Vec<(u32, Vec<(u32, u64)>)>,
    pivot_of_col: Vec<Option<u32>>,
}

impl ModElim {
    pub fn new(m: &SparseMat, p: u64) -> ModElim {
        let mut rows: Vec<Vec<(u32, u64)>> = vec![Vec::new(); m.rows];
        for &(i, j, v) in &m.entries {
            let x = to_mod(v, p);
            if x != 0 {
                rows[i as usize].push((j, x));
            }
        }
        let mut col_rows: Vec<Vec<u32>> = vec![Vec::new(); m.cols];
        for (i, r) in rows.iter().enumerate() {
            for &(j, _) in r {
                col_rows[j as usize].push(i as u32);
            }
        }
        let mut active = vec![true; m.rows];
        let mut col_done = vec![false; m.cols];
        let mut heap: BinaryHeap<Reverse<(usize, u32)>> =
            col_rows.iter().enumerate().filter(|(_, r)| !r.is_empty()).map(|(j, r)| Reverse((r.len(), j as u32))).collect();
        let mut pivots = Vec::new();
        let mut pivot_of_col = vec![None; m.cols];
        let contains = |row: &Vec<(u32, u64)>, c: u32| row.binary_search_by_key(&c, |e| e.0).is_ok();
        while let Some(Reverse((count, c))) = heap.pop() {
            if col_done[c as usize] {
                continue;
            }
            let list = &mut col_rows[c as usize];
            list.sort_unstable();
            list.dedup();
            list.retain(|&r| active[r as usize] && contains(&rows[r as usize], c));
            if list.is_empty() {
                col_done[c as usize] = true;
                continue;
            }
            if list.len() != count {
                heap.push(Reverse((list.len(), c)));
                continue;
            }
            let list = std::mem::take(&mut col_rows[c as usize]);
            let &prow = list.iter().min_by_key(|&&r| (rows[r as usize].len(), r)).unwrap();
            let pivot_row = std::mem::take(&mut rows[prow as usize]);
            active[prow as usize] = false;
            col_done[c as usize] = true;
            let pv = pivot_row[pivot_row.binary_search_by_key(&c, |e| e.0).unwrap()].1;
            let pinv = invmod(pv, p);
            for &r in &list {
                if r == prow {
                    continue;
                }
                let row = &rows[r as usize];
                let rv = row[row.binary_search_by_key(&c, |e| e.0).unwrap()].1;
                let f = p - mulmod(rv, pinv, p);
                let merged = axpy(row, &pivot_row, f, p);
                for &(j, _) in &merged {
                    if !col_done[j as usize] && !contains(row, j) {
                        col_rows[j as usize].push(r);
                    }
                }
                rows[r as usize] = merged;
            }
            for &(j, _) in &pivot_row {
                if !col_done[j as usize] {
                    let l = col_rows[j as usize].len();
                    heap.push(Reverse((l, j)));
                }
            }
            pivot_of_col[c as usize] = Some(pivots.len() as u32);
            pivots.push((c, pivot_row));
        }
        ModElim { p, cols: m.cols, pivots, pivot_of_col }
    }

    pub fn prime(&self) -> u64 {
        self.p
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    pub fn free_columns(&self) -> Vec<usize> {
        (0..self.cols).filter(|&j| self.pivot_of_col[j].is_none()).collect()
    }

    /// The right-kernel vector with a 1 in free column `f` and zeros in the
    /// other free columns.
    pub fn kernel_vector(&self, f: usize) -> Vec<u64> {
        assert!(self.pivot_of_col[f].is_none());
        let mut x = vec![0u64; self.cols];
        x[f] = 1;
        self.back_substitute(&mut x);
        x
    }

    /// A kernel vector with the given values on the free columns.
    pub fn kernel_combination(&self, free_values: &[(usize, u64)]) -> Vec<u64> {
        let mut x = vec![0u64; self.cols];
        for &(f, v) in free_values {
            x[f] = v % self.p;
        }
        self.back_substitute(&mut x);
        x
    }

    fn back_substitute(&self, x: &mut [u64]) {
        let p = self.p;
        for (c, row) in self.pivots.iter().rev() {
            let mut s = 0u64;
            let mut pv = 0;
            for &(j, v) in row {
                if j == *c {
                    pv = v;
                } else if x[j as usize] != 0 {
                    s = (s + mulmod(v, x[j as usize], p)) % p;
                }
            }
            x[*c as usize] = if s == 0 { 0 } else { mulmod(p - s, invmod(pv, p), p) };
        }
    }
}

fn axpy(row: &[(u32, u64)], piv: &[(u32, u64)], f: u64, p: u64) -> Vec<(u32, u64)> {
    let mut out = Vec::with_capacity(row.len() + piv.len());
    let (mut i, mut j) = (0, 0);
    while i < row.len() || j < piv.len() {
        let a = row.get(i).map_or(u32::MAX, |e| e.0);
        let b = piv.get(j).map_or(u32::MAX, |e| e.0);
        if a < b {
            out.push(row[i]);
            i += 1;
        } else if b < a {
            out.push((b, mulmod(piv[j].1, f, p)));
            j += 1;
        } else {
            let v = (row[i].1 + mulmod(piv[j].1, f, p)) % p;
            if v != 0 {
                out.push((a, v));
            }
            i += 1;
            j += 1;
        }
    }
    out
}

pub fn rank_mod(m: &SparseMat, p: u64) -> usize {
    ModElim::new(m, p).rank()
}

/// Rank over `Q`, computed modulo two large primes and cross-checked; a
/// third prime settles a disagreement.
pub fn rank(m: &SparseMat) -> Result<usize, LinalgError> {
    let ps = large_primes();
    let r1 = rank_mod(m, ps[0]);
    let r2 = rank_mod(m, ps[1]);
    if r1 == r2 {
        return Ok(r1);
    }
    let r3 = rank_mod(m, ps[2]);
    let best = r1.max(r2);
    if r3 == best {
        Ok(best)
    } else {
        Err(LinalgError::PrimeDisagreement(vec![r1, r2, r3]))
    }
}

/// Rational number with `|num|, den ≤ sqrt(m/2)` congruent to `a` mod `m`.
pub fn rational_reconstruct(a: &BigInt, m: &BigInt) -> Option<BigRational> {
    let bound = (m / BigInt::from(2)).sqrt();
    let (mut r0, mut r1) = (m.clone(), a.mod_floor(m));
    let (mut t0, mut t1) = (BigInt::zero(), BigInt::one());
    while r1 > bound {
        let q = &r0 / &r1;
        let r2 = &r0 - &q * &r1;
        r0 = std::mem::replace(&mut r1, r2);
        let t2 = &t0 - &q * &t1;
        t0 = std::mem::replace(&mut t1, t2);
    }
    if t1.is_zero() || t1.abs() > bound {
        return None;
    }
    if r1.gcd(&t1) != BigInt::one() {
        return None;
    }
    Some(BigRational::new(r1, t1))
}

fn crt(a: &BigInt, m: &BigInt, b: u64, p: u64) -> BigInt {
    // x ≡ a (m), x ≡ b (p)
    let am = bigint_mod(a, p);
    let minv = invmod(bigint_mod(m, p), p);
    let t = mulmod((b + p - am) % p, minv, p);
    a + m * BigInt::from(t)
}

/// Integral, content-free vector proportional to a rational vector.
pub fn primitive_integer(v: &[BigRational]) -> Vec<BigInt> {
    let mut l = BigInt::one();
    for x in v {
        l = l.lcm(x.denom());
    }
    let ints: Vec<BigInt> = v.iter().map(|x| (x * BigRational::from_integer(l.clone())).to_integer()).collect();
    let mut g = BigInt::zero();
    for x in &ints {
        g = g.gcd(x);
    }
    if g.is_zero() {
        return ints;
    }
    ints.into_iter().map(|x| x / &g).collect()
}

/// Lifts a family of modular vectors to exact rational vectors. `compute`
/// produces the family modulo a given prime; `verify` checks a candidate
/// exactly. More primes are combined until verification succeeds.
pub fn lift_vectors<F, V>(mut compute: F, verify: V) -> Result<Vec<Vec<BigRational>>, LinalgError>
where
    F: FnMut(u64) -> Vec<Vec<u64>>,
    V: Fn(&[Vec<BigRational>]) -> bool,
{
    let ps = large_primes();
    let mut acc: Vec<Vec<BigInt>> = compute(ps[0]).into_iter().map(|v| v.into_iter().map(BigInt::from).collect()).collect();
    let mut modulus = BigInt::from(ps[0]);
    for &p in &ps[1..] {
        let cand: Option<Vec<Vec<BigRational>>> = acc
            .iter()
            .map(|v| v.iter().map(|x| rational_reconstruct(x, &modulus)).collect::<Option<Vec<_>>>())
            .collect();
        if let Some(c) = cand {
            if verify(&c) {
                return Ok(c);
            }
        }
        let next = compute(p);
        if next.len() != acc.len() {
            return Err(LinalgError::Reconstruction);
        }
        for (a, n) in acc.iter_mut().zip(&next) {
            for (x, &y) in a.iter_mut().zip(n) {
                *x = crt(x, &modulus, y, p);
            }
        }
        modulus *= BigInt::from(p);
    }
    Err(LinalgError::Reconstruction)
}

/// Basis of the right kernel over `Q`: integral, content-free vectors, one
/// per free column of the deterministic elimination.
pub fn kernel_basis(m: &SparseMat) -> Result<Vec<Vec<BigInt>>, LinalgError> {
    let free0 = ModElim::new(m, large_primes()[0]).free_columns();
    let vecs = lift_vectors(
        |p| {
            let e = ModElim::new(m, p);
            if e.free_columns() != free0 {
                return Vec::new();
            }
            free0.iter().map(|&f| e.kernel_vector(f)).collect()
        },
        |cand| cand.iter().all(|v| m.mul_vec_q(v).iter().all(|x| x.is_zero())),
    )?;
    Ok(vecs.iter().map(|v| primitive_integer(v)).collect())
}

fn q(x: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(x))
}

/// A small dense matrix over `Q`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct QMat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<BigRational>,
}

impl QMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        QMat { rows, cols, data: vec![BigRational::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = QMat::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = BigRational::one();
        }
        m
    }

    pub fn from_rows(rows: &[Vec<BigRational>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        QMat { rows: r, cols: c, data: rows.iter().flat_map(|x| x.iter().cloned()).collect() }
    }

    pub fn from_i64(rows: &[Vec<i64>]) -> Self {
        QMat::from_rows(&rows.iter().map(|r| r.iter().map(|&x| q(x)).collect()).collect::<Vec<_>>())
    }

    pub fn get(&self, i: usize, j: usize) -> &BigRational {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: BigRational) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> Vec<BigRational> {
        self.data[i * self.cols..(i + 1) * self.cols].to_vec()
    }

    pub fn column(&self, j: usize) -> Vec<BigRational> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn transpose(&self) -> QMat {
        let mut t = QMat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j).clone());
            }
        }
        t
    }

    pub fn mul(&self, o: &QMat) -> QMat {
        assert_eq!(self.cols, o.rows);
        let mut r = QMat::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..o.cols {
                    let b = o.get(k, j);
                    if !b.is_zero() {
                        r.data[i * o.cols + j] += a * b;
                    }
                }
            }
        }
        r
    }

    pub fn add(&self, o: &QMat) -> QMat {
        QMat { rows: self.rows, cols: self.cols, data: self.data.iter().zip(&o.data).map(|(a, b)| a + b).collect() }
    }

    pub fn scale(&self, s: &BigRational) -> QMat {
        QMat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|a| a * s).collect() }
    }

    pub fn mul_vec(&self, v: &[BigRational]) -> Vec<BigRational> {
        (0..self.rows)
            .map(|i| (0..self.cols).fold(BigRational::zero(), |s, j| s + self.get(i, j) * &v[j]))
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    /// Reduced row echelon form and pivot columns.
    pub fn rref(&self) -> (QMat, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..m.cols {
            let Some(p) = (r..m.rows).find(|&i| !m.get(i, c).is_zero()) else { continue };
            for j in 0..m.cols {
                m.data.swap(r * m.cols + j, p * m.cols + j);
            }
            let inv = m.get(r, c).recip();
            for j in 0..m.cols {
                let v = m.get(r, j) * &inv;
                m.set(r, j, v);
            }
            for i in 0..m.rows {
                if i == r || m.get(i, c).is_zero() {
                    continue;
                }
                let f = m.get(i, c).clone();
                for j in 0..m.cols {
                    let v = m.get(i, j) - &f * m.get(r, j);
                    m.set(i, j, v);
                }
            }
            pivots.push(c);
            r += 1;
            if r == m.rows {
                break;
            }
        }
        (m, pivots)
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Right kernel basis (one vector per free column).
    pub fn kernel(&self) -> Vec<Vec<BigRational>> {
        let (r, piv) = self.rref();
        let mut out = Vec::new();
        for f in 0..self.cols {
            if piv.contains(&f) {
                continue;
            }
            let mut v = vec![BigRational::zero(); self.cols];
            v[f] = BigRational::one();
            for (i, &pc) in piv.iter().enumerate() {
                v[pc] = -r.get(i, f).clone();
            }
            out.push(v);
        }
        out
    }

    pub fn inverse(&self) -> Result<QMat, LinalgError> {
        if self.rows != self.cols {
            return Err(LinalgError::NotSquare);
        }
        let n = self.rows;
        let mut aug = QMat::zeros(n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                aug.set(i, j, self.get(i, j).clone());
            }
            aug.set(i, n + i, BigRational::one());
        }
        let (r, piv) = aug.rref();
        if piv.len() < n || piv[n - 1] != n - 1 {
            return Err(LinalgError::Singular);
        }
        let mut inv = QMat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                inv.set(i, j, r.get(i, n + j).clone());
            }
        }
        Ok(inv)
    }

    /// Solves `self · x = b` for the unique `x` when `self` has full column rank.
    pub fn solve(&self, b: &[BigRational]) -> Result<Vec<BigRational>, LinalgError> {
        let mut aug = QMat::zeros(self.rows, self.cols + 1);
        for i in 0..self.rows {
            for j in 0..self.cols {
                aug.set(i, j, self.get(i, j).clone());
            }
            aug.set(i, self.cols, b[i].clone());
        }
        let (r, piv) = aug.rref();
        if piv.len() != self.cols || piv.contains(&self.cols) {
            return Err(LinalgError::Singular);
        }
        Ok((0..self.cols).map(|i| r.get(i, self.cols).clone()).collect())
    }

    /// Characteristic polynomial `det(t I - M)` (Faddeev-LeVerrier).
    pub fn charpoly(&self) -> Result<QPoly, LinalgError> {
        if self.rows != self.cols {
            return Err(LinalgError::NotSquare);
        }
        let n = self.rows;
        let mut coeffs = vec![BigRational::zero(); n + 1];
        coeffs[n] = BigRational::one();
        let mut mk = QMat::zeros(n, n);
        for k in 1..=n {
            // M_k = A M_{k-1} + c_{n-k+1} I ; c_{n-k} = -tr(A M_k)/k
            let mut next = self.mul(&mk);
            for i in 0..n {
                let v = next.get(i, i) + &coeffs[n - k + 1];
                next.set(i, i, v);
            }
            let am = self.mul(&next);
            let tr = (0..n).fold(BigRational::zero(), |s, i| s + am.get(i, i));
            coeffs[n - k] = -tr / q(k as i64);
            mk = next;
        }
        Ok(QPoly::new(coeffs))
    }

    /// `rows cols` on the first line, then one line of entries per row.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.rows, self.cols);
        for i in 0..self.rows {
            let row: Vec<String> = self.row(i).iter().map(|x| x.to_string()).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<QMat, LinalgError> {
        let bad = |m: &str| LinalgError::Parse(m.to_string());
        let mut lines = text.lines();
        let head: Vec<usize> = lines
            .next()
            .ok_or_else(|| bad("empty"))?
            .split_whitespace()
            .map(|x| x.parse().map_err(|_| bad("header")))
            .collect::<Result<_, _>>()?;
        let [rows, cols] = head[..] else { return Err(bad("header")) };
        let mut data = Vec::with_capacity(rows * cols);
        for line in lines.take(rows) {
            for x in line.split_whitespace() {
                data.push(x.parse::<BigRational>().map_err(|_| bad(x))?);
            }
        }
        if data.len() != rows * cols {
            return Err(bad("entry count"));
        }
        Ok(QMat { rows, cols, data })
    }

    /// `p(M)`.
    pub fn eval_poly(&self, p: &QPoly) -> QMat {
        let n = self.rows;
        let mut r = QMat::zeros(n, n);
        for c in p.coeffs().iter().rev() {
            r = r.mul(self);
            for i in 0..n {
                let v = r.get(i, i) + c;
                r.set(i, i, v);
            }
        }
        r
    }
}

/// A polynomial over `Q`, coefficients from low to high degree.
#[derive(Clone, PartialEq, Eq, Debug, Hash)]
pub struct QPoly(Vec<BigRational>);

impl QPoly {
    pub fn new(mut c: Vec<BigRational>) -> Self {
        while c.last().is_some_and(|x| x.is_zero()) {
            c.pop();
        }
        QPoly(c)
    }

    pub fn from_i64(c: &[i64]) -> Self {
        QPoly::new(c.iter().map(|&x| q(x)).collect())
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    /// Degree; the zero polynomial reports 0.
    pub fn degree(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    pub fn lead(&self) -> BigRational {
        self.0.last().cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn monic(&self) -> QPoly {
        let l = self.lead();
        QPoly::new(self.0.iter().map(|c| c / &l).collect())
    }

    pub fn mul(&self, o: &QPoly) -> QPoly {
        if self.is_zero() || o.is_zero() {
            return QPoly(Vec::new());
        }
        let mut c = vec![BigRational::zero(); self.0.len() + o.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in o.0.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        QPoly::new(c)
    }

    pub fn pow(&self, e: usize) -> QPoly {
        let mut r = QPoly::from_i64(&[1]);
        for _ in 0..e {
            r = r.mul(self);
        }
        r
    }

    pub fn div_rem(&self, d: &QPoly) -> (QPoly, QPoly) {
        assert!(!d.is_zero());
        let mut r = self.0.clone();
        let dl = d.lead();
        let dd = d.degree();
        if self.0.len() < d.0.len() {
            return (QPoly(Vec::new()), self.clone());
        }
        let mut qc = vec![BigRational::zero(); self.0.len() - d.0.len() + 1];
        for k in (0..qc.len()).rev() {
            let c = &r[k + dd] / &dl;
            if !c.is_zero() {
                for (j, x) in d.0.iter().enumerate() {
                    r[k + j] -= &c * x;
                }
            }
            qc[k] = c;
        }
        r.truncate(dd);
        (QPoly::new(qc), QPoly::new(r))
    }

    pub fn derivative(&self) -> QPoly {
        QPoly::new(self.0.iter().enumerate().skip(1).map(|(i, c)| c * q(i as i64)).collect())
    }

    pub fn gcd(&self, o: &QPoly) -> QPoly {
        let (mut a, mut b) = (self.clone(), o.clone());
        while !b.is_zero() {
            let r = a.div_rem(&b).1;
            a = b;
            b = r;
        }
        if a.is_zero() {
            a
        } else {
            a.monic()
        }
    }

    pub fn eval(&self, x: &BigRational) -> BigRational {
        self.0.iter().rev().fold(BigRational::zero(), |s, c| s * x + c)
    }

    fn eval_c(&self, x: (f64, f64)) -> (f64, f64) {
        let mut s = (0.0, 0.0);
        for c in self.0.iter().rev() {
            let cf = c.to_f64().unwrap_or(f64::NAN);
            s = (s.0 * x.0 - s.1 * x.1 + cf, s.0 * x.1 + s.1 * x.0);
        }
        s
    }

    /// Approximate complex roots (Aberth-Ehrlich iteration).
    pub fn approx_roots(&self) -> Vec<(f64, f64)> {
        let n = self.degree();
        if n == 0 {
            return Vec::new();
        }
        let p = self.monic();
        let d = p.derivative();
        let bound = 1.0 + p.0.iter().take(n).map(|c| c.to_f64().unwrap_or(0.0).abs()).fold(0.0, f64::max);
        let mut z: Vec<(f64, f64)> = (0..n)
            .map(|k| {
                let a = 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / n as f64;
                (0.5 * bound * a.cos(), 0.5 * bound * a.sin())
            })
            .collect();
        for _ in 0..2000 {
            let mut moved = 0.0f64;
            for i in 0..n {
                let pv = p.eval_c(z[i]);
                let dv = d.eval_c(z[i]);
                let ratio = cdiv(pv, dv);
                let mut s = (0.0, 0.0);
                for j in 0..n {
                    if j != i {
                        let w = cdiv((1.0, 0.0), (z[i].0 - z[j].0, z[i].1 - z[j].1));
                        s = (s.0 + w.0, s.1 + w.1);
                    }
                }
                let denom = (1.0 - (ratio.0 * s.0 - ratio.1 * s.1), -(ratio.0 * s.1 + ratio.1 * s.0));
                let step = cdiv(ratio, denom);
                if step.0.is_finite() && step.1.is_finite() {
                    z[i] = (z[i].0 - step.0, z[i].1 - step.1);
                    moved = moved.max((step.0 * step.0 + step.1 * step.1).sqrt());
                }
            }
            if moved < 1e-14 * bound {
                break;
            }
        }
        z
    }
}

fn cdiv(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    let d = b.0 * b.0 + b.1 * b.1;
    ((a.0 * b.0 + a.1 * b.1) / d, (a.1 * b.0 - a.0 * b.1) / d)
}

impl fmt::Display for QPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let mut first = true;
        for (i, c) in self.0.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let neg = c.is_negative();
            let a = c.abs();
            if !first {
                f.write_str(if neg { "-" } else { "+" })?;
            } else if neg {
                f.write_str("-")?;
            }
            first = false;
            let coef = if a.is_one() && i > 0 { String::new() } else { a.to_string() };
            match i {
                0 => write!(f, "{coef}")?,
                1 => write!(f, "{coef}t")?,
                _ => write!(f, "{coef}t^{i}")?,
            }
        }
        Ok(())
    }
}

/// Factorization into irreducible monic factors of degree ≤ 2 with
/// multiplicities, plus an unfactored monic remainder.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Factorization {
    pub factors: Vec<(QPoly, usize)>,
    pub remainder: QPoly,
}

fn round_rat(x: f64, den: i64) -> Option<BigRational> {
    let v = (x * den as f64).round();
    if !v.is_finite() || v.abs() > 1e17 {
        return None;
    }
    Some(BigRational::new(BigInt::from(v as i64), BigInt::from(den)))
}

/// Splits off all rational linear and irreducible quadratic factors.
pub fn factor_deg_le2(p: &QPoly) -> Factorization {
    let mut rest = p.monic();
    let mut found: Vec<QPoly> = Vec::new();
    // square-free part carries every irreducible factor once
    let sqf = {
        let g = rest.gcd(&rest.derivative());
        if g.degree() == 0 {
            rest.clone()
        } else {
            rest.div_rem(&g).0.monic()
        }
    };
    let roots = sqf.approx_roots();
    let dens: Vec<i64> = {
        // monic integral polynomials have integral rational roots; allow
        // small denominators otherwise
        let mut l = BigInt::one();
        for c in sqf.coeffs() {
            l = l.lcm(c.denom());
        }
        let l = l.to_i64().unwrap_or(1).clamp(1, 1 << 20);
        (1..=l).filter(|d| l % d == 0).take(64).collect()
    };
    let mut cur = sqf.clone();
    let try_factor = |cur: &mut QPoly, cand: QPoly, found: &mut Vec<QPoly>| -> bool {
        if cur.degree() < cand.degree() {
            return false;
        }
        let (qq, r) = cur.div_rem(&cand);
        if r.is_zero() {
            *cur = qq;
            found.push(cand);
            true
        } else {
            false
        }
    };
    for &(re, im) in &roots {
        if im.abs() > 1e-6 * (1.0 + re.abs()) {
            continue;
        }
        for &d in &dens {
            if let Some(r) = round_rat(re, d) {
                if try_factor(&mut cur, QPoly::new(vec![-r, BigRational::one()]), &mut found) {
                    break;
                }
            }
        }
    }
    let roots = cur.approx_roots();
    let n = roots.len();
    let mut used = vec![false; n];
    for i in 0..n {
        if used[i] {
            continue;
        }
        for j in i + 1..n {
            if used[j] {
                continue;
            }
            let s = roots[i].0 + roots[j].0;
            let pr = roots[i].0 * roots[j].0 - roots[i].1 * roots[j].1;
            let pim = roots[i].0 * roots[j].1 + roots[i].1 * roots[j].0;
            let sim = roots[i].1 + roots[j].1;
            if sim.abs() > 1e-6 * (1.0 + s.abs()) || pim.abs() > 1e-6 * (1.0 + pr.abs()) {
                continue;
            }
            let mut ok = false;
            for &d in &dens {
                let (Some(b), Some(c)) = (round_rat(-s, d), round_rat(pr, d * d)) else { continue };
                if try_factor(&mut cur, QPoly::new(vec![c, b, BigRational::one()]), &mut found) {
                    ok = true;
                    break;
                }
            }
            if ok {
                used[i] = true;
                used[j] = true;
                break;
            }
        }
    }
    found.sort_by_key(|a| (a.degree(), a.to_string()));
    let mut factors = Vec::new();
    for fct in found {
        let mut m = 0;
        loop {
            let (qq, r) = rest.div_rem(&fct);
            if !r.is_zero() {
                break;
            }
            rest = qq;
            m += 1;
        }
        factors.push((fct, m));
    }
    Factorization { factors, remainder: rest.monic() }
}
