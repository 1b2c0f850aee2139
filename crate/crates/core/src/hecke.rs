//! Hecke operators `T(p, k)` on `H₃` of the Voronoi complex, computed by
//! translating cycles into sharblies, acting by coset representatives and
//! reducing back to Voronoi cells.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::complex::{CycleBasis, VoronoiComplexLevel};
use crate::eisenstein::{EisInt, HnfLabel, Mat3, PrimeIdeal};
use crate::linalg::{factor_deg_le2, Factorization, LinalgError, QMat, QPoly};
use crate::sharbly::{sharbly_to_voronoi, voronoi_to_sharbly, GammaChain, ReductionTrace, Reducer, SharblyError};

#[derive(Error, Debug)]
pub enum HeckeError {
    #[error("prime {0} divides the level")]
    BadPrime(String),
    #[error("k must be 1 or 2, got {0}")]
    BadIndex(u8),
    #[error(transparent)]
    Sharbly(#[from] SharblyError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("Hecke image of a cycle is not a cycle")]
    NotCycle,
    #[error("cycle coefficient does not fit in 64 bits")]
    Overflow,
}

/// Representatives `h` of the cosets `Γh` in `Γ diag(1, 1, π) Γ` (`k = 1`)
/// or `Γ diag(1, π, π) Γ` (`k = 2`), each upper triangular in Hermite form.
pub fn coset_reps(p: &PrimeIdeal, k: u8) -> Result<Vec<Mat3>, HeckeError> {
    let pi = p.uniformizer();
    let r = p.residue_reps();
    let (o, z) = (EisInt::ONE, EisInt::ZERO);
    let mut out = Vec::new();
    match k {
        1 => {
            out.push(Mat3::diag([pi, o, o]));
            for &a in &r {
                for &b in &r {
                    out.push(Mat3([[o, z, a], [z, o, b], [z, z, pi]]));
                }
            }
            for &a in &r {
                out.push(Mat3([[o, a, z], [z, pi, z], [z, z, o]]));
            }
        }
        2 => {
            out.push(Mat3::diag([pi, pi, o]));
            for &a in &r {
                for &b in &r {
                    out.push(Mat3([[o, a, b], [z, pi, z], [z, z, pi]]));
                }
            }
            for &a in &r {
                out.push(Mat3([[pi, z, z], [z, o, a], [z, z, pi]]));
            }
        }
        _ => return Err(HeckeError::BadIndex(k)),
    }
    Ok(out)
}

/// `T(ξ) = Σ n(u) Σ_h h·u`.
pub fn apply_hecke(cx: &VoronoiComplexLevel, chain: &GammaChain, reps: &[Mat3]) -> GammaChain {
    let mut out = GammaChain::new();
    for (u, c) in chain.sorted_terms() {
        for h in reps {
            out.add(&cx.plane, &u.translate(h), c);
        }
    }
    out.prune();
    out
}

fn to_i64(v: &[BigInt]) -> Result<Vec<i64>, HeckeError> {
    v.iter().map(|x| x.to_i64().ok_or(HeckeError::Overflow)).collect()
}

/// Image of a Voronoi 3-cycle under `T(p, k)`, reduced back to a Voronoi
/// cycle.
pub fn hecke_image(
    cx: &VoronoiComplexLevel,
    reducer: &mut Reducer,
    z: &[BigInt],
    reps: &[Mat3],
    budget: usize,
) -> Result<(Vec<BigRational>, ReductionTrace), HeckeError> {
    let chain = voronoi_to_sharbly(cx, &to_i64(z)?);
    let image = apply_hecke(cx, &chain, reps);
    let (reduced, trace) = reducer.reduce(&image, budget)?;
    let y = sharbly_to_voronoi(cx, &reduced)?;
    if !cx.d3.mul_vec_q(&y).iter().all(|x| x.is_zero()) {
        return Err(HeckeError::NotCycle);
    }
    Ok((y, trace))
}

/// Matrix of `T(p, k)` on `H₃` in a cycle basis: column `j` holds the
/// coordinates of `T z_j`.
#[derive(Clone, Debug)]
pub struct HeckeMatrix {
    pub level: HnfLabel,
    pub prime: PrimeIdeal,
    pub k: u8,
    pub matrix: QMat,
    pub traces: Vec<ReductionTrace>,
}

impl HeckeMatrix {
    pub fn charpoly(&self) -> Result<QPoly, LinalgError> {
        self.matrix.charpoly()
    }

    pub fn commutes_with(&self, other: &HeckeMatrix) -> bool {
        self.matrix.mul(&other.matrix) == other.matrix.mul(&self.matrix)
    }
}

/// Computes `T(p, k)` on `H₃`, reducing the basis cycles on up to `jobs`
/// threads.
pub fn hecke_matrix(
    cx: &VoronoiComplexLevel,
    basis: &CycleBasis,
    p: &PrimeIdeal,
    k: u8,
    budget: usize,
    jobs: usize,
) -> Result<HeckeMatrix, HeckeError> {
    if p.ideal.contains(cx.level.generator()) {
        return Err(HeckeError::BadPrime(p.label().to_string()));
    }
    let reps = coset_reps(p, k)?;
    let h = basis.len();
    let jobs = jobs.clamp(1, h.max(1));
    let column = |j: usize| {
        let mut reducer = Reducer::new(&cx.plane);
        hecke_image(cx, &mut reducer, &basis.cycles[j], &reps, budget)
    };
    let results: Vec<Result<(Vec<BigRational>, ReductionTrace), HeckeError>> = if jobs == 1 {
        (0..h).map(column).collect()
    } else {
        let mut slots: Vec<Option<Result<_, _>>> = (0..h).map(|_| None).collect();
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..jobs)
                .map(|w| {
                    let column = &column;
                    scope.spawn(move || (w..h).step_by(jobs).map(|j| (j, column(j))).collect::<Vec<_>>())
                })
                .collect();
            for handle in handles {
                for (j, r) in handle.join().expect("Hecke worker panicked") {
                    slots[j] = Some(r);
                }
            }
        });
        slots.into_iter().map(|r| r.unwrap()).collect()
    };
    let mut matrix = QMat::zeros(h, h);
    let mut traces = Vec::with_capacity(h);
    for (j, r) in results.into_iter().enumerate() {
        let (y, trace) = r?;
        for (i, c) in basis.coordinates(&y).into_iter().enumerate() {
            matrix.set(i, j, c);
        }
        traces.push(trace);
    }
    Ok(HeckeMatrix { level: cx.level.label(), prime: *p, k, matrix, traces })
}

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// `ℚ`, or `ℚ(√D)` for squarefree `D ≠ 1` with generator `α = (1 + √D)/2`
/// when `D ≡ 1 mod 4` and `α = √D` otherwise.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EigenField {
    Rational,
    Quadratic(i64),
}

impl EigenField {
    /// Field discriminant; 1 for `ℚ`.
    pub fn discriminant(&self) -> i64 {
        match *self {
            EigenField::Rational => 1,
            EigenField::Quadratic(d) if d.rem_euclid(4) == 1 => d,
            EigenField::Quadratic(d) => 4 * d,
        }
    }

    pub fn is_real(&self) -> bool {
        match *self {
            EigenField::Rational => true,
            EigenField::Quadratic(d) => d > 0,
        }
    }

    /// Minimal polynomial of `α`.
    pub fn min_poly(&self) -> QPoly {
        match *self {
            EigenField::Rational => QPoly::from_i64(&[0, 1]),
            EigenField::Quadratic(d) if d.rem_euclid(4) == 1 => QPoly::from_i64(&[(1 - d) / 4, -1, 1]),
            EigenField::Quadratic(d) => QPoly::from_i64(&[-d, 0, 1]),
        }
    }

    /// `(c₀, c₁)` with `α² = c₀ + c₁α`.
    fn alpha_square(&self) -> (BigRational, BigRational) {
        let m = self.min_poly();
        let c = m.coeffs();
        if c.len() < 3 {
            return (BigRational::zero(), BigRational::zero());
        }
        (-c[0].clone(), -c[1].clone())
    }

    /// `√D` in terms of `α`, as `(a, b)` for `a + bα`.
    fn sqrt_d(&self) -> (BigRational, BigRational) {
        match *self {
            EigenField::Rational => (BigRational::zero(), BigRational::zero()),
            EigenField::Quadratic(d) if d.rem_euclid(4) == 1 => (rat(-1), rat(2)),
            EigenField::Quadratic(_) => (BigRational::zero(), rat(1)),
        }
    }
}

impl fmt::Display for EigenField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EigenField::Rational => f.write_str("Q"),
            EigenField::Quadratic(d) => write!(f, "Q(sqrt({d}))"),
        }
    }
}

/// `a + bα` in an [`EigenField`].
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FieldElt {
    pub field: EigenField,
    pub a: BigRational,
    pub b: BigRational,
}

impl FieldElt {
    pub fn rational(a: BigRational) -> Self {
        FieldElt { field: EigenField::Rational, a, b: BigRational::zero() }
    }

    pub fn from_i64(a: i64) -> Self {
        Self::rational(rat(a))
    }

    pub fn new(field: EigenField, a: BigRational, b: BigRational) -> Self {
        if b.is_zero() {
            return FieldElt { field, a, b };
        }
        assert!(field != EigenField::Rational, "irrational part in Q");
        FieldElt { field, a, b }
    }

    pub fn is_rational(&self) -> bool {
        self.b.is_zero()
    }

    fn common(&self, o: &FieldElt) -> EigenField {
        match (self.field, o.field) {
            (EigenField::Rational, f) | (f, EigenField::Rational) => f,
            (f, g) => {
                assert_eq!(f, g, "mixed eigenvalue fields");
                f
            }
        }
    }

    pub fn add(&self, o: &FieldElt) -> FieldElt {
        FieldElt { field: self.common(o), a: &self.a + &o.a, b: &self.b + &o.b }
    }

    pub fn sub(&self, o: &FieldElt) -> FieldElt {
        FieldElt { field: self.common(o), a: &self.a - &o.a, b: &self.b - &o.b }
    }

    pub fn neg(&self) -> FieldElt {
        FieldElt { field: self.field, a: -self.a.clone(), b: -self.b.clone() }
    }

    pub fn mul(&self, o: &FieldElt) -> FieldElt {
        let field = self.common(o);
        let (c0, c1) = field.alpha_square();
        let bb = &self.b * &o.b;
        FieldElt {
            field,
            a: &self.a * &o.a + &bb * c0,
            b: &self.a * &o.b + &self.b * &o.a + bb * c1,
        }
    }

    pub fn scale(&self, c: &BigRational) -> FieldElt {
        FieldElt { field: self.field, a: &self.a * c, b: &self.b * c }
    }

    /// Image under the nontrivial automorphism (complex conjugation for
    /// imaginary fields).
    pub fn conj(&self) -> FieldElt {
        match self.field {
            EigenField::Rational => self.clone(),
            EigenField::Quadratic(d) if d.rem_euclid(4) == 1 => {
                // α ↦ 1 − α
                FieldElt { field: self.field, a: &self.a + &self.b, b: -self.b.clone() }
            }
            EigenField::Quadratic(_) => FieldElt { field: self.field, a: self.a.clone(), b: -self.b.clone() },
        }
    }

    /// Whether the rendered form needs parentheses as a coefficient.
    fn is_compound(&self) -> bool {
        !self.a.is_zero() && !self.b.is_zero()
    }
}

impl fmt::Display for FieldElt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.b.is_zero() {
            return write!(f, "{}", self.a);
        }
        if self.b == rat(1) {
            f.write_str("α")?;
        } else if self.b == rat(-1) {
            f.write_str("-α")?;
        } else {
            write!(f, "{}α", self.b)?;
        }
        if self.a.is_positive() {
            write!(f, "+{}", self.a)?;
        } else if self.a.is_negative() {
            write!(f, "{}", self.a)?;
        }
        Ok(())
    }
}

/// `1 - a₁ t + N(p) a₂ t² - N(p)³ t³` for eigenvalues `a₁` of `T(p, 1)` and
/// `a₂` of `T(p, 2)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HeckePolynomial {
    pub norm: u64,
    pub a1: FieldElt,
    pub a2: FieldElt,
}

impl HeckePolynomial {
    pub fn new(norm: u64, a1: FieldElt, a2: FieldElt) -> Self {
        HeckePolynomial { norm, a1, a2 }
    }

    /// Coefficients from degree 0 to 3.
    pub fn coeffs(&self) -> [FieldElt; 4] {
        let n = rat(self.norm as i64);
        [
            FieldElt::from_i64(1),
            self.a1.neg(),
            self.a2.scale(&n),
            FieldElt::rational(-(&n * &n * &n)),
        ]
    }

    /// The polynomial over `ℚ`, when both eigenvalues are rational.
    pub fn rational(&self) -> Option<QPoly> {
        let c = self.coeffs();
        c.iter().all(|x| x.is_rational()).then(|| QPoly::new(c.iter().map(|x| x.a.clone()).collect()))
    }
}

/// Descending powers of `t`, e.g. `-64t^3-12t^2+3t+1`.
impl fmt::Display for HeckePolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, c) in self.coeffs().iter().enumerate().rev() {
            if c.a.is_zero() && c.b.is_zero() {
                continue;
            }
            let body = if c.is_compound() {
                if !first {
                    f.write_str("+")?;
                }
                format!("({c})")
            } else {
                let s = c.to_string();
                let (neg, mag) = match s.strip_prefix('-') {
                    Some(m) => (true, m.to_string()),
                    None => (false, s),
                };
                if neg {
                    f.write_str("-")?;
                } else if !first {
                    f.write_str("+")?;
                }
                if mag == "1" && i > 0 {
                    String::new()
                } else {
                    mag
                }
            };
            first = false;
            match i {
                0 => write!(f, "{body}")?,
                1 => write!(f, "{body}t")?,
                _ => write!(f, "{body}t^{i}")?,
            }
        }
        Ok(())
    }
}

/// A simultaneous eigenspace of the Hecke operators over `ℚ`. A class over a
/// quadratic field stands for the pair of conjugate eigensystems; the stored
/// eigenvalues are those of one of them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EigenClass {
    pub level: HnfLabel,
    pub field: EigenField,
    /// Eigenvalue of `T(p, k)` keyed by `(p, k)`.
    pub eigenvalues: BTreeMap<(HnfLabel, u8), FieldElt>,
    /// Dimension over the eigenvalue field.
    pub multiplicity: usize,
    /// Set when some operator has an irreducible factor of degree above 2
    /// on this space, which is then left unsplit; holds its `ℚ`-dimension.
    pub unsplit: Option<usize>,
}

impl EigenClass {
    pub fn eigenvalue(&self, p: HnfLabel, k: u8) -> Option<&FieldElt> {
        self.eigenvalues.get(&(p, k))
    }

    /// Primes with both eigenvalues known.
    pub fn primes(&self) -> Vec<HnfLabel> {
        let mut out: Vec<HnfLabel> =
            self.eigenvalues.keys().filter(|(p, k)| *k == 1 && self.eigenvalues.contains_key(&(*p, 2))).map(|(p, _)| *p).collect();
        out.dedup();
        out
    }

    pub fn hecke_polynomial(&self, p: HnfLabel) -> Option<HeckePolynomial> {
        let a1 = self.eigenvalue(p, 1)?.clone();
        let a2 = self.eigenvalue(p, 2)?.clone();
        Some(HeckePolynomial::new(p.norm, a1, a2))
    }

    /// The Galois conjugate eigensystem.
    pub fn conjugate(&self) -> EigenClass {
        let mut out = self.clone();
        for v in out.eigenvalues.values_mut() {
            *v = v.conj();
        }
        out
    }

    /// `ℚ`-dimension of the space.
    pub fn dimension(&self) -> usize {
        match (self.unsplit, self.field) {
            (Some(d), _) => d,
            (None, EigenField::Rational) => self.multiplicity,
            (None, _) => 2 * self.multiplicity,
        }
    }
}

/// Squarefree part of a nonzero integer, with its sign.
fn squarefree_part(n: &BigInt) -> (i64, BigInt) {
    let mut m = n.abs();
    let mut d = BigInt::one();
    let mut square = BigInt::one();
    let mut p = BigInt::from(2);
    while &p * &p <= m {
        let mut e = 0;
        while (&m % &p).is_zero() {
            m /= &p;
            e += 1;
        }
        if e % 2 == 1 {
            d *= &p;
        }
        for _ in 0..e / 2 {
            square *= &p;
        }
        p += 1;
    }
    d *= m;
    let d = d.to_i64().expect("discriminant fits in 64 bits");
    (if n.is_negative() { -d } else { d }, square)
}

/// A root of the irreducible monic quadratic `t² + pt + q` in its field.
pub fn quadratic_root(f: &QPoly) -> FieldElt {
    let c = f.coeffs();
    let (q, p) = (&c[0], &c[1]);
    let disc = p * p - q * rat(4);
    // disc = num/den = num·den / den², so √disc = s√D with D squarefree
    let nd = disc.numer() * disc.denom();
    let (d, square) = squarefree_part(&nd);
    let s = BigRational::new(square, disc.denom().clone());
    let field = EigenField::Quadratic(d);
    let (ra, rb) = field.sqrt_d();
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    FieldElt::new(field, -p * &half + &s * &half * ra, &s * &half * rb)
}

/// Basis of `ker f(M)` restricted from an ambient basis.
fn restrict(ms: &[QMat], kernel: &[Vec<BigRational>]) -> Result<Vec<QMat>, LinalgError> {
    let d = kernel.len();
    let n = kernel[0].len();
    let mut b = QMat::zeros(n, d);
    for (j, v) in kernel.iter().enumerate() {
        for (i, x) in v.iter().enumerate() {
            b.set(i, j, x.clone());
        }
    }
    let bt = b.transpose();
    let left = bt.mul(&b).inverse()?.mul(&bt);
    Ok(ms.iter().map(|m| left.mul(&m.mul(&b))).collect())
}

fn split(ms: Vec<QMat>, from: usize, leaves: &mut Vec<Vec<QMat>>) -> Result<(), LinalgError> {
    for i in from..ms.len() {
        let fac = factor_deg_le2(&ms[i].charpoly()?);
        let mut parts: Vec<QPoly> = fac.factors.iter().map(|(f, e)| f.pow(*e)).collect();
        if fac.remainder.degree() > 0 {
            parts.push(fac.remainder.clone());
        }
        if parts.len() > 1 {
            for part in parts {
                let ker = ms[i].eval_poly(&part).kernel();
                split(restrict(&ms, &ker)?, i + 1, leaves)?;
            }
            return Ok(());
        }
    }
    leaves.push(ms);
    Ok(())
}

/// Decomposes `H₃` into simultaneous eigenspaces of the given operators,
/// which must share a level and cycle basis. Classes come out sorted by
/// field and eigenvalues.
pub fn eigensystems(matrices: &[HeckeMatrix]) -> Result<Vec<EigenClass>, HeckeError> {
    let Some(first) = matrices.first() else { return Ok(Vec::new()) };
    let level = first.level;
    if first.matrix.rows == 0 {
        return Ok(Vec::new());
    }
    let mut leaves = Vec::new();
    split(matrices.iter().map(|m| m.matrix.clone()).collect(), 0, &mut leaves)?;
    let keys: Vec<(HnfLabel, u8)> = matrices.iter().map(|m| (m.prime.label(), m.k)).collect();
    let mut out = Vec::new();
    for ms in leaves {
        let dim = ms[0].rows;
        let polys: Vec<Factorization> =
            ms.iter().map(|m| m.charpoly().map(|c| factor_deg_le2(&c))).collect::<Result<_, _>>()?;
        let unsplit = |out: &mut Vec<EigenClass>| {
            out.push(EigenClass {
                level,
                field: EigenField::Rational,
                eigenvalues: BTreeMap::new(),
                multiplicity: 0,
                unsplit: Some(dim),
            })
        };
        if polys.iter().any(|f| f.remainder.degree() > 0) {
            unsplit(&mut out);
            continue;
        }
        let mut eigenvalues = BTreeMap::new();
        match polys.iter().position(|f| f.factors[0].0.degree() == 2) {
            None => {
                for (key, f) in keys.iter().zip(&polys) {
                    eigenvalues.insert(*key, FieldElt::rational(-f.factors[0].0.coeffs()[0].clone()));
                }
                out.push(EigenClass { level, field: EigenField::Rational, eigenvalues, multiplicity: dim, unsplit: None });
            }
            Some(g) => {
                let root = quadratic_root(&polys[g].factors[0].0);
                let field = root.field;
                // every operator is a + b·T_g on a simple space
                let tg = &ms[g];
                let mut ok = true;
                for (key, m) in keys.iter().zip(&ms) {
                    let mut sys = QMat::zeros(dim * dim, 2);
                    let mut rhs = Vec::with_capacity(dim * dim);
                    for i in 0..dim {
                        for j in 0..dim {
                            let r = i * dim + j;
                            sys.set(r, 0, if i == j { rat(1) } else { BigRational::zero() });
                            sys.set(r, 1, tg.get(i, j).clone());
                            rhs.push(m.get(i, j).clone());
                        }
                    }
                    match sys.solve(&rhs) {
                        Ok(ab) => {
                            let check = tg.scale(&ab[1]).add(&QMat::identity(dim).scale(&ab[0]));
                            if &check != m {
                                ok = false;
                                break;
                            }
                            let v = FieldElt::rational(ab[0].clone()).add(&root.scale(&ab[1]));
                            eigenvalues.insert(*key, v);
                        }
                        Err(_) => {
                            ok = false;
                            break;
                        }
                    }
                }
                if ok {
                    out.push(EigenClass { level, field, eigenvalues, multiplicity: dim / 2, unsplit: None });
                } else {
                    unsplit(&mut out);
                }
            }
        }
    }
    out.sort_by_cached_key(|c| {
        (c.unsplit.is_some(), c.field, c.eigenvalues.values().map(|v| v.to_string()).collect::<Vec<_>>())
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eisenstein::{primes_up_to, EisIdeal};

    fn q(n: i64) -> BigRational {
        rat(n)
    }

    #[test]
    fn coset_counts() {
        for p in primes_up_to(31) {
            let n = p.norm() as usize;
            for k in [1, 2] {
                let reps = coset_reps(&p, k).unwrap();
                assert_eq!(reps.len(), n * n + n + 1);
                for h in &reps {
                    assert_eq!(h.det().norm() as u64, p.norm().pow(k as u32));
                }
            }
        }
        let p = primes_up_to(4).into_iter().find(|p| p.norm() == 4).unwrap();
        let pi = p.uniformizer();
        let o = EisInt::ONE;
        assert_eq!(coset_reps(&p, 1).unwrap()[0], Mat3::diag([pi, o, o]));
        assert_eq!(coset_reps(&p, 2).unwrap()[0], Mat3::diag([pi, pi, o]));
        assert!(matches!(coset_reps(&p, 3), Err(HeckeError::BadIndex(3))));
    }

    #[test]
    fn polynomial_strings() {
        let p = HeckePolynomial::new(4, FieldElt::from_i64(-3), FieldElt::from_i64(-3));
        assert_eq!(p.to_string(), "-64t^3-12t^2+3t+1");
        assert_eq!(p.rational().unwrap(), QPoly::from_i64(&[1, 3, -12, -64]));
        let z = HeckePolynomial::new(2, FieldElt::from_i64(0), FieldElt::from_i64(0));
        assert_eq!(z.to_string(), "-8t^3+1");
        // the field of α² − α + 31 = 0
        let field = EigenField::Quadratic(-123);
        assert_eq!(field.min_poly(), QPoly::from_i64(&[31, -1, 1]));
        let alpha = FieldElt::new(field, q(0), q(1));
        let a1 = alpha.sub(&FieldElt::from_i64(4));
        let a2 = alpha.neg().sub(&FieldElt::from_i64(3));
        assert_eq!(a1.conj(), a2);
        let h = HeckePolynomial::new(3, a1, a2);
        assert_eq!(h.to_string(), "-27t^3+(-3α-9)t^2+(-α+4)t+1");
        assert!(h.rational().is_none());
    }

    #[test]
    fn field_arithmetic() {
        let field = EigenField::Quadratic(-3);
        let alpha = FieldElt::new(field, q(0), q(1));
        // α² − α + 1 = 0
        let r = alpha.mul(&alpha).sub(&alpha).add(&FieldElt::from_i64(1));
        assert!(r.a.is_zero() && r.b.is_zero());
        let g = EigenField::Quadratic(3);
        let s = FieldElt::new(g, q(0), q(1));
        assert_eq!(s.mul(&s), FieldElt::new(g, q(3), q(0)));
        assert_eq!(g.discriminant(), 12);
        assert_eq!(field.discriminant(), -3);
        assert!(!field.is_real() && g.is_real());
    }

    #[test]
    fn roots_of_quadratics() {
        let f = QPoly::from_i64(&[31, -1, 1]);
        let r = quadratic_root(&f);
        assert_eq!(r.field, EigenField::Quadratic(-123));
        assert!(r == FieldElt::new(r.field, q(0), q(1)) || r == FieldElt::new(r.field, q(1), q(-1)));
        // t² − 12 = 0: √12 = 2√3
        let r = quadratic_root(&QPoly::from_i64(&[-12, 0, 1]));
        assert_eq!(r.field, EigenField::Quadratic(3));
        assert_eq!(r.mul(&r), FieldElt::new(r.field, q(12), q(0)));
        // t² + t/2 + 1/4: disc = −3/4
        let f = QPoly::new(vec![BigRational::new(1.into(), 4.into()), BigRational::new(1.into(), 2.into()), q(1)]);
        let r = quadratic_root(&f);
        assert_eq!(r.field, EigenField::Quadratic(-3));
        let v = r.mul(&r).add(&r.scale(&f.coeffs()[1])).add(&FieldElt::rational(f.coeffs()[0].clone()));
        assert!(v.a.is_zero() && v.b.is_zero());
    }

    fn fake(level: HnfLabel, p: &PrimeIdeal, k: u8, m: QMat) -> HeckeMatrix {
        HeckeMatrix { level, prime: *p, k, matrix: m, traces: Vec::new() }
    }

    #[test]
    fn simultaneous_eigenspaces() {
        let level = HnfLabel::new(739, 320, 1);
        let ps = primes_up_to(4);
        // a companion block for α² − α + 31 next to a rational block
        let c = QMat::from_i64(&[vec![0, -31, 0, 0], vec![1, 1, 0, 0], vec![0, 0, 5, 0], vec![0, 0, 0, 5]]);
        // 2 − 3T on the first block, scalar 7 on the second
        let d = c.scale(&q(-3)).add(&QMat::identity(4).scale(&q(2)));
        let mut d2 = d.clone();
        for i in 2..4 {
            d2.set(i, i, q(7));
        }
        let ms = vec![fake(level, &ps[0], 1, c.clone()), fake(level, &ps[1], 1, d2)];
        assert!(ms[0].commutes_with(&ms[1]));
        let classes = eigensystems(&ms).unwrap();
        assert_eq!(classes.len(), 2);
        let rational = &classes[0];
        assert_eq!(rational.field, EigenField::Rational);
        assert_eq!(rational.multiplicity, 2);
        assert_eq!(rational.eigenvalue(ps[0].label(), 1), Some(&FieldElt::from_i64(5)));
        assert_eq!(rational.eigenvalue(ps[1].label(), 1), Some(&FieldElt::from_i64(7)));
        let quad = &classes[1];
        assert_eq!(quad.field, EigenField::Quadratic(-123));
        assert_eq!(quad.dimension(), 2);
        let a = quad.eigenvalue(ps[0].label(), 1).unwrap();
        let b = quad.eigenvalue(ps[1].label(), 1).unwrap();
        assert_eq!(b, &FieldElt::from_i64(2).sub(&a.scale(&q(3))));
        assert_eq!(quad.conjugate().eigenvalue(ps[0].label(), 1).unwrap(), &a.conj());
    }

    #[test]
    fn primes_dividing_the_level_are_refused() {
        let cx = VoronoiComplexLevel::build(EisIdeal::from_label(HnfLabel::new(49, 18, 1)).unwrap());
        let basis = cx.cycle_basis().unwrap();
        let bad = primes_up_to(7).into_iter().find(|p| p.ideal.divides(&cx.level)).unwrap();
        assert!(matches!(hecke_matrix(&cx, &basis, &bad, 1, 10, 1), Err(HeckeError::BadPrime(_))));
    }
}
