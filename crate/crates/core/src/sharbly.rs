//! Sharblies, their `Γ₀(n)`-coinvariants, and the reduction of 1-sharbly
//! cycles to cycles supported on Voronoi cells.
//!
//! A `k`-sharbly is an oriented list of `k + 3` nonzero vectors of `O³`,
//! determined by the rays they span. Its size is the largest norm of
//! `det(x_a, x_b, x_c)` over its vertex triples; sharblies of size 1 are
//! exactly the translates of the Voronoi 3-cells `f1` and `f2`.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use num_rational::BigRational;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::complex::VoronoiComplexLevel;
use crate::eisenstein::{
    det3, hermite_form, hermite_form_upper, rank_over_f, spanning_point, EisIdeal, EisInt, Mat3, ProjectivePlane,
    Vec3,
};
use crate::voronoi::{cell_equiv, perm_sign, CellType, VoronoiCell};

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum SharblyError {
    #[error("reduction did not finish within {0} iterations (size still {1})")]
    Budget(usize, i64),
    #[error("no reduction pass shrinks the chain below size {0}")]
    NoProgress(i64),
    #[error("sharbly of size {0} is not a Voronoi cell")]
    NotReduced(i64),
    #[error("no Voronoi cell of type {0} matches {1}")]
    NoMatch(CellType, Sharbly),
}

/// An oriented sharbly, stored by its vertex list.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Sharbly(pub Vec<Vec3>);

impl Sharbly {
    pub fn new(points: Vec<Vec3>) -> Self {
        Sharbly(points)
    }

    pub fn points(&self) -> &[Vec3] {
        &self.0
    }

    /// Sharbly degree `k` (one less than the number of vertices past 2).
    pub fn degree(&self) -> usize {
        self.0.len() - 3
    }

    /// Vertices replaced by spanning points and sorted, with the sign of the
    /// sorting permutation. `None` when the sharbly is zero: a repeated ray
    /// or vertices not spanning `F³`.
    pub fn normalized(&self) -> Option<(Sharbly, i8)> {
        let pts: Option<Vec<Vec3>> = self.0.iter().map(spanning_point).collect();
        let pts = pts?;
        let mut idx: Vec<usize> = (0..pts.len()).collect();
        idx.sort_by(|&i, &j| pts[i].cmp(&pts[j]));
        if idx.windows(2).any(|w| pts[w[0]] == pts[w[1]]) {
            return None;
        }
        if rank_over_f(&pts) < 3 {
            return None;
        }
        let sign = perm_sign(&idx);
        Some((Sharbly(idx.iter().map(|&i| pts[i]).collect()), sign))
    }

    /// The face omitting vertex `i` (0-based).
    pub fn face(&self, i: usize) -> Sharbly {
        let mut v = self.0.clone();
        v.remove(i);
        Sharbly(v)
    }

    /// `∂[x₁, …, x_m] = Σ (-1)^i [x₁, …, x̂_i, …, x_m]`, indices from 1.
    /// Degenerate faces are kept; they vanish after normalization.
    pub fn boundary(&self) -> Vec<(Sharbly, i8)> {
        (0..self.0.len()).map(|i| (self.face(i), if i % 2 == 0 { -1 } else { 1 })).collect()
    }

    /// Size: the largest `|N(det)|` over vertex triples (0 if all vanish).
    pub fn size(&self) -> i64 {
        let n = self.0.len();
        let mut best = 0;
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    best = best.max(det3(self.0[i], self.0[j], self.0[k]).norm());
                }
            }
        }
        best
    }

    pub fn is_reduced(&self) -> bool {
        self.size() <= 1
    }

    pub fn translate(&self, g: &Mat3) -> Sharbly {
        Sharbly(self.0.iter().map(|v| g.mul_vec(v)).collect())
    }
}

impl fmt::Display for Sharbly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "({}, {}, {})", v[0], v[1], v[2])?;
        }
        write!(f, "]")
    }
}

/// A chain of sharblies without any quotient by `Γ`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SharblyChain {
    terms: HashMap<Sharbly, i64>,
}

impl SharblyChain {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, s: &Sharbly, c: i64) {
        if c == 0 {
            return;
        }
        if let Some((n, sign)) = s.normalized() {
            let e = self.terms.entry(n).or_insert(0);
            *e += c * sign as i64;
            if *e == 0 {
                let (n, _) = s.normalized().unwrap();
                self.terms.remove(&n);
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Sharbly, i64)> {
        self.terms.iter().map(|(s, &c)| (s, c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn boundary(&self) -> SharblyChain {
        let mut out = SharblyChain::new();
        for (s, c) in self.terms() {
            for (f, e) in s.boundary() {
                out.add(&f, c * e as i64);
            }
        }
        out
    }
}

/// `a · h⁻¹` for a nonsingular `h`, assuming the quotient is integral.
fn mul_inverse(a: &Mat3, h: &Mat3) -> Mat3 {
    let d = h.det();
    let m = *a * h.adjugate();
    let mut out = m.0;
    for row in out.iter_mut() {
        for x in row.iter_mut() {
            *x = x.div_exact(d).expect("integral quotient");
        }
    }
    Mat3(out)
}

const PERMS3: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

/// Frames `Y D = g H` of an ordered nonsingular triple `Y` under all column
/// unit scalings `D = diag(1, u, v)`: `H` in Hermite form, `g ∈ GL₃(O)`.
fn frames(y: &Mat3) -> Vec<(Mat3, EisInt, EisInt)> {
    let h0 = hermite_form(y);
    let units = EisInt::units();
    let mut out = Vec::with_capacity(36);
    for u in units {
        for v in units {
            let d = Mat3::diag([EisInt::ONE, u, v]);
            out.push((hermite_form_upper(&(h0 * d)), u, v));
        }
    }
    out
}

/// `Γ₀(n)`-invariant key of a 0-sharbly: the Hermite form of its frame and
/// the coset of the transporter.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct FaceKey {
    pub hermite: Mat3,
    pub point: u32,
}

/// Canonical form of a nondegenerate 0-sharbly `[y₁, y₂, y₃]`: the face is
/// `sign · g·[H e₁, H e₂, H e₃]` up to scaling vertices by units.
#[derive(Clone, Copy, Debug)]
pub struct FaceForm {
    pub key: FaceKey,
    /// Orientation relative to the canonical form; 0 when an element of
    /// `Γ₀(n)` reverses the orientation, so the face vanishes in coinvariants.
    pub sign: i8,
    pub transport: Mat3,
    /// An element of `Γ₀(n)` mapping the face to itself with odd vertex
    /// permutation, when there is one.
    pub reverser: Option<Mat3>,
}

pub fn canonical_face(plane: &ProjectivePlane, ys: &[Vec3; 3]) -> Option<FaceForm> {
    if det3(ys[0], ys[1], ys[2]).is_zero() {
        return None;
    }
    let mut best: Option<FaceForm> = None;
    for p in PERMS3 {
        let y = Mat3::from_columns([ys[p[0]], ys[p[1]], ys[p[2]]]);
        let s = perm_sign(&p);
        for (h, u, v) in frames(&y) {
            if let Some(b) = &best {
                if h > b.key.hermite {
                    continue;
                }
            }
            let yd = Mat3::from_columns([ys[p[0]], ys[p[1]].map(|x| x * u), ys[p[2]].map(|x| x * v)]);
            let g = mul_inverse(&yd, &h);
            let key = FaceKey { hermite: h, point: plane.coset_of_matrix(&g) };
            match &mut best {
                Some(b) if key == b.key => {
                    if b.sign != s && b.reverser.is_none() {
                        b.sign = 0;
                        b.reverser = Some(b.transport * g.inverse().expect("unimodular transporter"));
                    }
                }
                Some(b) if key > b.key => {}
                _ => best = Some(FaceForm { key, sign: s, transport: g, reverser: None }),
            }
        }
    }
    best
}

/// A reducing vector in the frame of a Hermite form `H` of determinant
/// norm > 1: the lattice point `v` for which the cofactors `c = H⁻¹v` have
/// the smallest largest norm, then the smallest total norm. Every nonzero
/// class of `O³/HO³` gives `N(c_k) ≤ 1/3`, so each face `[.., w]` with
/// `w = g v` is at most a third of the size.
pub fn reducing_vector(h: &Mat3) -> Vec3 {
    reducing_candidates(h)[0]
}

/// All candidate reducing vectors for `H`, best first; each nonzero class of
/// `O³/HO³` contributes the representatives shrinking every face of the
/// frame.
pub fn reducing_candidates(h: &Mat3) -> Vec<Vec3> {
    let delta = h.det();
    let adj = h.adjugate();
    let reps: Vec<Vec<EisInt>> = (0..3).map(|i| residue_reps(h.0[i][i])).collect();
    let mut all: Vec<((i64, i64, Vec3), Vec3)> = Vec::new();
    for a in &reps[0] {
        for b in &reps[1] {
            for c in &reps[2] {
                let v = [*a, *b, *c];
                if v.iter().all(|x| x.is_zero()) {
                    continue;
                }
                // numerators of H⁻¹v over the common denominator det H
                let num = adj.mul_vec(&v);
                let choices: Vec<Vec<(EisInt, i64)>> = num.iter().map(|&n| nearest(n, delta)).collect();
                for q0 in &choices[0] {
                    for q1 in &choices[1] {
                        for q2 in &choices[2] {
                            let q = [q0.0, q1.0, q2.0];
                            let hq = h.mul_vec(&q);
                            let w = [v[0] - hq[0], v[1] - hq[1], v[2] - hq[2]];
                            let norms = [q0.1, q1.1, q2.1];
                            all.push(((*norms.iter().max().unwrap(), norms.iter().sum::<i64>(), w), w));
                        }
                    }
                }
            }
        }
    }
    assert!(!all.is_empty(), "determinant norm above 1");
    all.sort();
    all.into_iter().map(|(_, w)| w).collect()
}

/// All `q` with `N(n - qδ) < N(δ)`, with that norm.
fn nearest(n: EisInt, delta: EisInt) -> Vec<(EisInt, i64)> {
    let (q, _) = n.div_rem(delta);
    let units = EisInt::units();
    let mut cands = vec![q];
    for u in &units {
        cands.push(q + *u);
        for v in &units {
            cands.push(q + *u + *v);
        }
    }
    cands.sort();
    cands.dedup();
    let bound = delta.norm();
    cands.into_iter().map(|c| (c, (n - c * delta).norm())).filter(|&(_, x)| x < bound).collect()
}

/// Representatives of `O/(m)`.
fn residue_reps(m: EisInt) -> Vec<EisInt> {
    let l = EisIdeal::from_generator(m).expect("nonzero").label();
    let d = l.d as i64;
    let a = (l.norm / l.d) as i64;
    let mut out = Vec::with_capacity((a * d) as usize);
    for b in 0..d {
        for x in 0..a {
            out.push(EisInt::new(x, b));
        }
    }
    out
}

/// `Γ₀(n)`-invariant key of a nondegenerate 1-sharbly.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct SharblyKey {
    pub hermite: Mat3,
    pub fourth: Vec3,
    pub point: u32,
}

/// Canonical key of a normalized 1-sharbly with its orientation sign (0 when
/// it vanishes in coinvariants). Frames are taken on the faces of least size;
/// the fourth vertex in frame coordinates is `g⁻¹x = H D⁻¹ Y⁻¹ x`.
pub fn canonical_sharbly(plane: &ProjectivePlane, u: &Sharbly) -> Option<(SharblyKey, i8)> {
    let x = u.points();
    debug_assert_eq!(x.len(), 4);
    let dets: Vec<i64> = (0..4).map(|d| face_det(x, d).norm()).collect();
    let m = dets.iter().copied().filter(|&n| n > 0).min()?;
    let mut best: Option<(SharblyKey, i8)> = None;
    for d in 0..4 {
        if dets[d] != m {
            continue;
        }
        let others: Vec<usize> = (0..4).filter(|&i| i != d).collect();
        for p in PERMS3 {
            let order = [others[p[0]], others[p[1]], others[p[2]], d];
            let s = perm_sign(&order);
            let y = Mat3::from_columns([x[order[0]], x[order[1]], x[order[2]]]);
            let dy = y.det();
            let r = y.adjugate().mul_vec(&x[d]);
            for (h, uu, vv) in frames(&y) {
                if let Some(b) = &best {
                    if h > b.0.hermite {
                        continue;
                    }
                }
                let rd = [r[0], r[1] * uu.unit_inverse(), r[2] * vv.unit_inverse()];
                let f = h.mul_vec(&rd).map(|t| t.div_exact(dy).expect("integral frame coordinates"));
                let fourth = spanning_point(&f).unwrap();
                if let Some(b) = &best {
                    if (h, fourth) > (b.0.hermite, b.0.fourth) {
                        continue;
                    }
                }
                let yd = Mat3::from_columns([x[order[0]], x[order[1]].map(|t| t * uu), x[order[2]].map(|t| t * vv)]);
                let g = mul_inverse(&yd, &h);
                let key = SharblyKey { hermite: h, fourth, point: plane.coset_of_matrix(&g) };
                match &mut best {
                    Some(b) if key == b.0 => {
                        if b.1 != s {
                            b.1 = 0;
                        }
                    }
                    Some(b) if key > b.0 => {}
                    _ => best = Some((key, s)),
                }
            }
        }
    }
    best
}

fn face_det(x: &[Vec3], omit: usize) -> EisInt {
    let t: Vec<Vec3> = (0..x.len()).filter(|&i| i != omit).map(|i| x[i]).collect();
    det3(t[0], t[1], t[2])
}

/// A 1-chain in the `Γ₀(n)`-coinvariants, one representative per orbit,
/// with integer coefficients over a common denominator.
#[derive(Clone, Debug)]
pub struct GammaChain {
    terms: HashMap<SharblyKey, (Sharbly, i8, i64)>,
    denom: i64,
}

impl Default for GammaChain {
    fn default() -> Self {
        GammaChain { terms: HashMap::new(), denom: 1 }
    }
}

impl GammaChain {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn denominator(&self) -> i64 {
        self.denom
    }

    /// Coefficient of a representative as a rational number.
    pub fn coefficient(&self, c: i64) -> BigRational {
        BigRational::new(c.into(), self.denom.into())
    }

    /// Remove common factors of the coefficients and the denominator.
    fn reduce_content(&mut self) {
        let g = self.terms.values().fold(self.denom, |g, t| num_integer::gcd(g, t.2));
        if g > 1 {
            self.denom /= g;
            for t in self.terms.values_mut() {
                t.2 /= g;
            }
        }
    }

    /// Add `c·u` for a 1-sharbly `u`.
    pub fn add(&mut self, plane: &ProjectivePlane, u: &Sharbly, c: i64) {
        if c == 0 {
            return;
        }
        let Some((n, s0)) = u.normalized() else { return };
        let Some((key, s1)) = canonical_sharbly(plane, &n) else { return };
        if s1 == 0 {
            return;
        }
        let sign = (s0 * s1) as i64;
        let e = self.terms.entry(key).or_insert((n, s1, 0));
        // u = sign·canonical and rep = e.1·canonical
        e.2 += c * sign * e.1 as i64;
    }

    /// Drop zero coefficients.
    pub fn prune(&mut self) {
        self.terms.retain(|_, t| t.2 != 0);
    }

    /// Terms `(representative, coefficient)`.
    pub fn terms(&self) -> impl Iterator<Item = (&Sharbly, i64)> {
        self.terms.values().filter(|t| t.2 != 0).map(|t| (&t.0, t.2))
    }

    pub fn sorted_terms(&self) -> Vec<(Sharbly, i64)> {
        let mut v: Vec<(SharblyKey, Sharbly, i64)> =
            self.terms.iter().filter(|t| t.1 .2 != 0).map(|(k, t)| (*k, t.0.clone(), t.2)).collect();
        v.sort_by_key(|a| a.0);
        v.into_iter().map(|(_, s, c)| (s, c)).collect()
    }

    pub fn len(&self) -> usize {
        self.terms().count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Largest size over the support.
    pub fn size(&self) -> i64 {
        self.terms().map(|(s, _)| s.size()).max().unwrap_or(0)
    }

    /// Whether the boundary vanishes in the coinvariants of 0-sharblies.
    /// Number of sharblies of the largest size.
    pub fn count_at_size(&self) -> usize {
        let s = self.size();
        self.terms().filter(|(u, _)| u.size() == s).count()
    }

    pub fn is_cycle(&self, plane: &ProjectivePlane) -> bool {
        let mut acc: HashMap<FaceKey, i64> = HashMap::new();
        for (u, c) in self.terms() {
            for (f, e) in u.boundary() {
                let p = f.points();
                if let Some(form) = canonical_face(plane, &[p[0], p[1], p[2]]) {
                    if form.sign != 0 {
                        *acc.entry(form.key).or_insert(0) += c * (e * form.sign) as i64;
                    }
                }
            }
        }
        acc.values().all(|&v| v == 0)
    }

    pub fn scaled(&self, k: i64) -> GammaChain {
        let mut out = self.clone();
        for t in out.terms.values_mut() {
            t.2 *= k;
        }
        out.prune();
        out
    }
}

/// Signed index lists into `(x₁..x₄, w₁..w₄)` for the replacements of a
/// 1-sharbly with 1, 2, 3 or 4 nonreduced faces. In each case the
/// nonreduced faces come first: `f₁`, then `f₁, f₂`, then `f₁, f₂, f₃`.
const RED1: &[(i8, [usize; 4])] = &[(1, [0, 1, 2, 4]), (-1, [0, 1, 3, 4]), (1, [0, 2, 3, 4])];
const RED2: &[(i8, [usize; 4])] =
    &[(-1, [0, 1, 3, 4]), (-1, [0, 2, 4, 5]), (1, [0, 1, 2, 4]), (1, [0, 3, 4, 5]), (-1, [2, 3, 4, 5])];
const RED3: &[(i8, [usize; 4])] = &[
    (1, [0, 1, 2, 4]),
    (-1, [0, 2, 4, 5]),
    (1, [0, 4, 5, 6]),
    (1, [0, 1, 4, 6]),
    (-1, [2, 3, 4, 5]),
    (-1, [3, 4, 5, 6]),
    (1, [1, 3, 4, 6]),
    (-1, [0, 3, 5, 6]),
];
const RED4: &[(i8, [usize; 4])] = &[
    (-1, [0, 3, 5, 6]),
    (1, [0, 5, 6, 7]),
    (1, [0, 2, 5, 7]),
    (1, [1, 3, 4, 6]),
    (-1, [1, 4, 6, 7]),
    (-1, [1, 2, 4, 7]),
    (-1, [0, 1, 6, 7]),
    (-1, [2, 3, 4, 5]),
    (-1, [3, 4, 5, 6]),
    (-1, [4, 5, 6, 7]),
    (1, [2, 4, 5, 7]),
];

/// Replacement of `u` given reducing points for its nonreduced faces
/// (`reducing[i]` for the face omitting vertex `i`). Returns signed
/// 1-sharblies; `u` itself if every face is reduced.
pub fn replace(u: &Sharbly, reducing: &[Option<Vec3>; 4]) -> Vec<(i8, Sharbly)> {
    let x = u.points();
    let nonred: Vec<usize> = (0..4).filter(|&i| reducing[i].is_some()).collect();
    if nonred.is_empty() {
        return vec![(1, u.clone())];
    }
    let mut order = nonred.clone();
    order.extend((0..4).filter(|i| !nonred.contains(i)));
    let sign = perm_sign(&order);
    let mut pts: Vec<Vec3> = order.iter().map(|&i| x[i]).collect();
    pts.extend(nonred.iter().map(|&i| reducing[i].unwrap()));
    let table = match nonred.len() {
        1 => RED1,
        2 => RED2,
        3 => RED3,
        _ => RED4,
    };
    table.iter().map(|(s, idx)| (s * sign, Sharbly(idx.iter().map(|&i| pts[i]).collect()))).collect()
}

/// A reducing point for face `i` of a sharbly, with the reverser image for
/// a face that vanishes in the coinvariants.
type Choice = (usize, Vec3, Option<Vec3>);

fn plan_term(occurrences: &[Occurrence], occ: &[usize], chosen: &HashMap<FaceKey, Vec3>) -> Vec<Choice> {
    occ.iter()
        .map(|&o| {
            let o = &occurrences[o];
            let v = chosen[&o.form.key];
            let w = spanning_point(&o.form.transport.mul_vec(&v)).unwrap();
            let alt = o.form.reverser.map(|s| spanning_point(&s.mul_vec(&w)).unwrap());
            (o.face, w, alt)
        })
        .collect()
}

/// Every assignment of reducing points, taking `w` or its reverser image at
/// each vanishing face.
fn expand(choices: &[Choice]) -> Vec<[Option<Vec3>; 4]> {
    let k = choices.iter().filter(|t| t.2.is_some()).count();
    (0..1usize << k)
        .map(|mask| {
            let mut reducing = [None; 4];
            let mut bit = 0;
            for &(i, w, alt) in choices {
                reducing[i] = Some(match alt {
                    Some(a) => {
                        bit += 1;
                        if mask & (1 << (bit - 1)) != 0 {
                            a
                        } else {
                            w
                        }
                    }
                    None => w,
                });
            }
            reducing
        })
        .collect()
}

/// Largest size among the replacement sharblies, and how many reach it.
fn children_cost(u: &Sharbly, choices: &[Choice]) -> (i64, usize) {
    let mut cost = (0i64, 0usize);
    for reducing in expand(choices) {
        for (_, v) in replace(u, &reducing) {
            let s = v.size();
            if s > cost.0 {
                cost = (s, 1);
            } else if s == cost.0 {
                cost.1 += 1;
            }
        }
    }
    cost
}

/// Per-iteration record of a reduction.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ReductionTrace {
    /// Chain size before each iteration, ending with the final size.
    pub sizes: Vec<i64>,
    /// Support size before each iteration, ending with the final support.
    pub support: Vec<usize>,
    /// Per iteration, the number of sharblies replaced with 1, 2, 3 and 4
    /// nonreduced faces.
    pub cases: Vec<[usize; 4]>,
}

impl ReductionTrace {
    pub fn iterations(&self) -> usize {
        self.cases.len()
    }

    /// Whether the size dropped at every iteration.
    pub fn strictly_decreasing(&self) -> bool {
        self.sizes.windows(2).all(|w| w[1] < w[0])
    }
}

impl fmt::Display for ReductionTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.cases.iter().enumerate() {
            writeln!(
                f,
                "iter {} size {} support {} red1 {} red2 {} red3 {} red4 {}",
                i, self.sizes[i], self.support[i], c[0], c[1], c[2], c[3]
            )?;
        }
        write!(f, "final size {} support {}", self.sizes.last().unwrap_or(&0), self.support.last().unwrap_or(&0))
    }
}

/// How many of the best candidates are scored against the sharblies that
/// contain a face.
const LOOKAHEAD: usize = 48;

/// Candidates per face class screened before the search.
const FILTER: usize = 256;

/// Rounds of coordinate descent over the face classes.
const SWEEPS: usize = 3;

/// Bound on the local search steps of a pass, and the chance that a step
/// takes a random candidate.
const MAX_FLIPS: usize = 20_000;
const NOISE: f64 = 0.1;

/// Passes that fail to shrink the chain are retried with this many
/// alternative candidate choices before giving up.
const MAX_VARIANTS: usize = 6;

/// Term checks allowed to the exhaustive search that backs up the local
/// search.
const BACKTRACK_CHECKS: usize = 400_000;

/// Complete search over the face classes linked to the `violated` terms,
/// with the other classes fixed. On success `chosen` clears every term;
/// otherwise it is left as it was.
fn backtrack(
    violated: &BTreeSet<usize>,
    class_terms: &HashMap<FaceKey, Vec<usize>>,
    term_classes: &[Vec<FaceKey>],
    domains: &HashMap<FaceKey, Vec<Vec3>>,
    chosen: &mut HashMap<FaceKey, Vec3>,
    clear: &dyn Fn(usize, &HashMap<FaceKey, Vec3>) -> bool,
    limit: usize,
) -> bool {
    // breadth first from the violated terms, so constrained classes are
    // assigned close together
    let mut order: Vec<FaceKey> = Vec::new();
    let mut pos: HashMap<FaceKey, usize> = HashMap::new();
    let mut queue: VecDeque<FaceKey> = violated.iter().flat_map(|&t| term_classes[t].iter().copied()).collect();
    while let Some(k) = queue.pop_front() {
        if pos.contains_key(&k) {
            continue;
        }
        pos.insert(k, order.len());
        order.push(k);
        for &t in &class_terms[&k] {
            queue.extend(term_classes[t].iter().filter(|c| !pos.contains_key(c)));
        }
    }
    // terms to check once the class at each depth is assigned
    let due: Vec<Vec<usize>> = order
        .iter()
        .enumerate()
        .map(|(i, k)| {
            class_terms[k]
                .iter()
                .copied()
                .filter(|&t| term_classes[t].iter().all(|c| pos.get(c).is_none_or(|&p| p <= i)))
                .collect()
        })
        .collect();
    let saved = chosen.clone();
    let mut checks = 0usize;
    fn go(
        i: usize,
        order: &[FaceKey],
        due: &[Vec<usize>],
        domains: &HashMap<FaceKey, Vec<Vec3>>,
        chosen: &mut HashMap<FaceKey, Vec3>,
        clear: &dyn Fn(usize, &HashMap<FaceKey, Vec3>) -> bool,
        checks: &mut usize,
        limit: usize,
    ) -> Option<bool> {
        if i == order.len() {
            return Some(true);
        }
        let key = order[i];
        let first = chosen[&key];
        let values = std::iter::once(first).chain(domains[&key].iter().copied().filter(|v| *v != first));
        for v in values {
            chosen.insert(key, v);
            let mut ok = true;
            for &t in &due[i] {
                *checks += 1;
                if *checks > limit {
                    return None;
                }
                if !clear(t, chosen) {
                    ok = false;
                    break;
                }
            }
            if ok && go(i + 1, order, due, domains, chosen, clear, checks, limit)? {
                return Some(true);
            }
        }
        Some(false)
    }
    let found = go(0, &order, &due, domains, chosen, clear, &mut checks, limit) == Some(true);
    if !found {
        *chosen = saved;
    }
    found
}

/// Reduction of 1-sharbly cycles at a fixed level.
///
/// Each pass first assigns one reducing vector per `Γ₀(n)`-class of
/// nonreduced face, in the frame of its canonical form, so every occurrence
/// of a class gets an equivalent point. Among the best candidates for the
/// class, the one keeping the faces `[x_a, x_b, w]` of all sharblies
/// containing it smallest is taken.
pub struct Reducer<'a> {
    plane: &'a ProjectivePlane,
    candidates: HashMap<Mat3, Vec<Vec3>>,
}

struct Occurrence {
    term: usize,
    face: usize,
    form: FaceForm,
}

impl<'a> Reducer<'a> {
    pub fn new(plane: &'a ProjectivePlane) -> Self {
        Reducer { plane, candidates: HashMap::new() }
    }

    /// The default reducing point of a nonreduced face: the best candidate
    /// of its canonical form, transported back.
    pub fn reducing_point(&mut self, face: &[Vec3; 3]) -> Vec3 {
        let form = canonical_face(self.plane, face).expect("nondegenerate face");
        let h = form.key.hermite;
        let v = self.candidates.entry(h).or_insert_with(|| reducing_candidates(&h))[0];
        spanning_point(&form.transport.mul_vec(&v)).unwrap()
    }

    /// One pass: every sharbly with a nonreduced face is replaced. Returns
    /// the new chain and the counts of each replacement case.
    ///
    /// A face vanishing in the coinvariants is reduced by the average of its
    /// reducing point `w` and `s·w` for an orientation-reversing `s`; the
    /// two cones `[f, w]` and `[f, s·w]` then cancel.
    pub fn step(&mut self, chain: &GammaChain) -> (GammaChain, [usize; 4]) {
        self.step_variant(chain, 0)
    }

    /// Like [`Reducer::step`], but variant `r > 0` starts the search from
    /// the `r`-th candidate of each face class.
    pub fn step_variant(&mut self, chain: &GammaChain, variant: usize) -> (GammaChain, [usize; 4]) {
        let terms = chain.sorted_terms();
        let mut occurrences = Vec::new();
        let mut by_term: Vec<Vec<usize>> = vec![Vec::new(); terms.len()];
        let mut by_key: BTreeMap<FaceKey, Vec<usize>> = BTreeMap::new();
        for (t, (u, _)) in terms.iter().enumerate() {
            let x = u.points();
            for i in 0..4 {
                if face_det(x, i).norm() > 1 {
                    let f = u.face(i);
                    let p = f.points();
                    let form = canonical_face(self.plane, &[p[0], p[1], p[2]]).expect("nondegenerate face");
                    by_key.entry(form.key).or_default().push(occurrences.len());
                    by_term[t].push(occurrences.len());
                    occurrences.push(Occurrence { term: t, face: i, form });
                }
            }
        }
        // Each class keeps the candidates under which the sharblies where it
        // is the only nonreduced class already shrink.
        let size = chain.size();
        let mut chosen: HashMap<FaceKey, Vec3> = HashMap::new();
        let mut domains: HashMap<FaceKey, Vec<Vec3>> = HashMap::new();
        for (key, occ) in &by_key {
            let h = key.hermite;
            let cands = self.candidates.entry(h).or_insert_with(|| reducing_candidates(&h));
            let mut unary: Vec<usize> = occ
                .iter()
                .map(|&o| occurrences[o].term)
                .filter(|&t| by_term[t].iter().all(|&o| occurrences[o].form.key == *key))
                .collect();
            unary.dedup();
            let mut domain = Vec::new();
            for v in cands.iter().take(FILTER) {
                chosen.insert(*key, *v);
                if unary
                    .iter()
                    .all(|&t| children_cost(&terms[t].0, &plan_term(&occurrences, &by_term[t], &chosen)).0 < size)
                {
                    domain.push(*v);
                }
            }
            if domain.is_empty() {
                domain = cands.iter().take(FILTER).copied().collect();
            }
            chosen.insert(*key, domain[variant % domain.len()]);
            domains.insert(*key, domain);
        }
        // Coordinate descent: each class takes the candidate minimizing the
        // largest replacement sharbly (then how many reach it) over the terms
        // containing it, with the other classes fixed.
        for _ in 0..SWEEPS {
            let mut changed = false;
            for (key, occ) in &by_key {
                let cands = &domains[key];
                let prev = chosen[key];
                let mut touched: Vec<usize> = occ.iter().map(|&o| occurrences[o].term).collect();
                touched.dedup();
                let mut best: Option<((i64, usize), usize)> = None;
                let n = cands.len().min(LOOKAHEAD);
                for r in 0..n {
                    let rank = (r + variant) % cands.len();
                    chosen.insert(*key, cands[rank]);
                    let mut cost = (0i64, 0usize);
                    for &t in &touched {
                        let plan = plan_term(&occurrences, &by_term[t], &chosen);
                        let c = children_cost(&terms[t].0, &plan);
                        if c.0 > cost.0 {
                            cost = c;
                        } else if c.0 == cost.0 {
                            cost.1 += c.1;
                        }
                    }
                    if best.is_none_or(|b| cost < b.0) {
                        best = Some((cost, rank));
                    }
                }
                let pick = cands[best.unwrap().1];
                chosen.insert(*key, pick);
                changed |= pick != prev;
            }
            if !changed {
                break;
            }
        }
        // Repair by min-conflicts search: a term is violated while some
        // replacement is as large as the chain. Reducing points of different
        // faces meet in the faces [x, w_i, w_j], so classes sharing terms
        // have to be re-chosen together.
        let excess = |t: usize, chosen: &HashMap<FaceKey, Vec3>| -> usize {
            let mut n = 0;
            for reducing in expand(&plan_term(&occurrences, &by_term[t], chosen)) {
                n += replace(&terms[t].0, &reducing).iter().filter(|(_, v)| v.size() >= size).count();
            }
            n
        };
        let touched: HashMap<FaceKey, Vec<usize>> = by_key
            .iter()
            .map(|(k, occ)| {
                let mut ts: Vec<usize> = occ.iter().map(|&o| occurrences[o].term).collect();
                ts.dedup();
                (*k, ts)
            })
            .collect();
        let mut violated: BTreeSet<usize> = (0..terms.len()).filter(|&t| excess(t, &chosen) > 0).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(variant as u64);
        for _ in 0..MAX_FLIPS {
            if violated.is_empty() {
                break;
            }
            let t = *violated.iter().nth(rng.gen_range(0..violated.len())).unwrap();
            let keys: Vec<FaceKey> = by_term[t].iter().map(|&o| occurrences[o].form.key).collect();
            let key = keys[rng.gen_range(0..keys.len())];
            let domain = &domains[&key];
            let pick = if rng.gen_bool(NOISE) {
                domain[rng.gen_range(0..domain.len())]
            } else {
                let mut best: Vec<Vec3> = Vec::new();
                let mut best_cost = usize::MAX;
                for v in domain.iter().take(LOOKAHEAD) {
                    chosen.insert(key, *v);
                    let mut cost = 0;
                    for &u in &touched[&key] {
                        cost += excess(u, &chosen);
                        if cost > best_cost {
                            break;
                        }
                    }
                    if cost < best_cost {
                        best_cost = cost;
                        best.clear();
                    }
                    if cost == best_cost {
                        best.push(*v);
                    }
                }
                best[rng.gen_range(0..best.len())]
            };
            chosen.insert(key, pick);
            for &u in &touched[&key] {
                if excess(u, &chosen) > 0 {
                    violated.insert(u);
                } else {
                    violated.remove(&u);
                }
            }
        }
        if !violated.is_empty() {
            let term_classes: Vec<Vec<FaceKey>> = by_term
                .iter()
                .map(|occ| {
                    let mut ks: Vec<FaceKey> = occ.iter().map(|&o| occurrences[o].form.key).collect();
                    ks.sort();
                    ks.dedup();
                    ks
                })
                .collect();
            let clear = |t: usize, c: &HashMap<FaceKey, Vec3>| excess(t, c) == 0;
            backtrack(&violated, &touched, &term_classes, &domains, &mut chosen, &clear, BACKTRACK_CHECKS);
        }
        let plans: Vec<Vec<Choice>> = by_term.iter().map(|occ| plan_term(&occurrences, occ, &chosen)).collect();
        let depth = plans.iter().map(|p| p.iter().filter(|t| t.2.is_some()).count()).max().unwrap_or(0);
        let mut cases = [0usize; 4];
        let mut out = GammaChain { terms: HashMap::new(), denom: chain.denom << depth };
        for ((u, c), choices) in terms.iter().zip(plans) {
            if !choices.is_empty() {
                cases[choices.len() - 1] += 1;
            }
            let k = choices.iter().filter(|t| t.2.is_some()).count();
            let weight = c << (depth - k);
            for reducing in expand(&choices) {
                for (s, v) in replace(u, &reducing) {
                    out.add(self.plane, &v, weight * s as i64);
                }
            }
        }
        out.prune();
        out.reduce_content();
        (out, cases)
    }

    /// Reduce until every sharbly has size 1, within `budget` passes. Each
    /// pass lowers the size, or failing that the number of sharblies of
    /// that size; otherwise the reduction fails.
    pub fn reduce(&mut self, chain: &GammaChain, budget: usize) -> Result<(GammaChain, ReductionTrace), SharblyError> {
        let mut cur = chain.clone();
        cur.prune();
        let mut trace = ReductionTrace::default();
        loop {
            let size = cur.size();
            trace.sizes.push(size);
            trace.support.push(cur.len());
            if size <= 1 {
                return Ok((cur, trace));
            }
            if trace.cases.len() >= budget {
                return Err(SharblyError::Budget(budget, size));
            }
            let mut found = None;
            let mut fallback: Option<((i64, usize), GammaChain, [usize; 4])> = None;
            for variant in 0..MAX_VARIANTS {
                let (next, cases) = self.step_variant(&cur, variant);
                if next.size() < size {
                    found = Some((next, cases));
                    break;
                }
                let m = (next.size(), next.count_at_size());
                if fallback.as_ref().is_none_or(|f| m < f.0) {
                    fallback = Some((m, next, cases));
                }
            }
            let (next, cases) = match (found, fallback) {
                (Some(x), _) => x,
                // no pass shrinks the size; one that leaves fewer sharblies
                // of that size still makes progress, and shows up in the
                // trace as a non-strict step
                (None, Some((m, next, cases))) if m < (size, cur.count_at_size()) => (next, cases),
                _ => return Err(SharblyError::NoProgress(size)),
            };
            trace.cases.push(cases);
            cur = next;
        }
    }
}

/// The 1-sharbly chain of a Voronoi 3-chain, one translate per basis orbit.
pub fn voronoi_to_sharbly(cx: &VoronoiComplexLevel, y: &[i64]) -> GammaChain {
    let mut out = GammaChain::new();
    for (j, &c) in y.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let o = cx.orbit(3, j);
        let g = cx.plane.lift_point(o.label);
        let cell = VoronoiCell::rep(o.kind).translate(&g);
        out.add(&cx.plane, &Sharbly(cell.vertices), c);
    }
    out
}

/// The Voronoi 3-chain of a reduced 1-sharbly chain.
pub fn sharbly_to_voronoi(cx: &VoronoiComplexLevel, chain: &GammaChain) -> Result<Vec<BigRational>, SharblyError> {
    let mut y = vec![BigRational::zero(); cx.dim(3)];
    for (u, c) in chain.terms() {
        let size = u.size();
        if size > 1 {
            return Err(SharblyError::NotReduced(size));
        }
        let x = u.points();
        let kind = if (0..4).any(|i| face_det(x, i).is_zero()) { CellType::F2 } else { CellType::F1 };
        let rep = VoronoiCell::rep(kind);
        let m = cell_equiv(&rep.vertices, x).ok_or_else(|| SharblyError::NoMatch(kind, u.clone()))?;
        // γσ lists u in the order perm, so [u] = sgn(perm)·[γσ]
        let point = cx.plane.coset_of_matrix(&m.gamma);
        if let Some((j, s)) = cx.locate(kind, point) {
            y[j] += chain.coefficient(c * (perm_sign(&m.perm) * s) as i64);
        }
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eisenstein::HnfLabel;
    use proptest::prelude::*;

    fn e(a: i64, b: i64) -> EisInt {
        EisInt::new(a, b)
    }

    fn v(t: [(i64, i64); 3]) -> Vec3 {
        [e(t[0].0, t[0].1), e(t[1].0, t[1].1), e(t[2].0, t[2].1)]
    }

    fn small_vec() -> impl Strategy<Value = Vec3> {
        prop::array::uniform3((-4i64..=4, -4i64..=4)).prop_map(v)
    }

    fn plane(label: &str) -> ProjectivePlane {
        ProjectivePlane::new(EisIdeal::from_label(label.parse::<HnfLabel>().unwrap()).unwrap())
    }

    #[test]
    fn size_and_boundary() {
        let u = Sharbly(vec![v([(1, 0), (0, 0), (0, 0)]), v([(0, 0), (1, 0), (0, 0)]), v([(0, 0), (0, 0), (2, 0)]), v([(1, 0), (1, 0), (1, 0)])]);
        assert_eq!(u.size(), 4);
        let mut c = SharblyChain::new();
        c.add(&u, 1);
        assert!(c.boundary().boundary().is_empty());
    }

    #[test]
    fn relations() {
        let a = v([(1, 0), (0, 0), (0, 0)]);
        let b = v([(0, 0), (1, 0), (0, 0)]);
        let c = v([(0, 0), (0, 0), (1, 0)]);
        let s1 = Sharbly(vec![a, b, c]).normalized().unwrap();
        let s2 = Sharbly(vec![b, a.map(|x| x * e(0, 1)), c]).normalized().unwrap();
        assert_eq!(s1.0, s2.0);
        assert_eq!(s1.1, -s2.1);
        assert!(Sharbly(vec![a, b, a.map(|x| x * e(-1, 0))]).normalized().is_none());
    }

    /// Each replacement changes the boundary by the cones `[f_i, w_i]` over
    /// the replaced faces, which cancel across a cycle.
    fn check_replacement(x: [Vec3; 4], w: [Vec3; 4], nonred: &[usize]) {
        let u = Sharbly(x.to_vec());
        let mut reducing = [None; 4];
        for &i in nonred {
            reducing[i] = Some(w[i]);
        }
        let mut lhs = SharblyChain::new();
        for (s, t) in replace(&u, &reducing) {
            lhs.add(&t, s as i64);
        }
        let mut rhs = SharblyChain::new();
        rhs.add(&u, 1);
        for &i in nonred {
            let mut cone = u.face(i).0;
            cone.push(w[i]);
            let sign = if i % 2 == 0 { 1 } else { -1 };
            rhs.add(&Sharbly(cone), sign);
        }
        let mut diff = lhs.boundary();
        for (t, c) in rhs.boundary().terms() {
            diff.add(t, -c);
        }
        assert!(diff.is_empty(), "nonreduced {:?}", nonred);
    }

    proptest! {
        #[test]
        fn replacements_are_homologous(x in prop::array::uniform4(small_vec()), w in prop::array::uniform4(small_vec()), mask in 1u8..16) {
            let nonred: Vec<usize> = (0..4).filter(|i| mask & (1 << i) != 0).collect();
            check_replacement(x, w, &nonred);
        }

        #[test]
        fn sharbly_keys_are_invariant(x in prop::array::uniform4(small_vec()), perm in Just([2usize, 0, 3, 1]), u in 0usize..6) {
            let pl = plane("[9,0,3]");
            let s = Sharbly(x.to_vec());
            if let Some((n, _)) = s.normalized() {
                let (k1, s1) = canonical_sharbly(&pl, &n).unwrap();
                // an element of Γ₀((3))
                let lower = Mat3([[e(1, 0), e(0, 0), e(0, 0)], [e(1, 0), e(1, 0), e(0, 0)], [e(3, 0), e(0, 3), e(1, 0)]]);
                let upper = Mat3([[e(1, 0), e(1, 1), e(2, 0)], [e(0, 0), e(1, 0), e(0, 1)], [e(0, 0), e(0, 0), e(1, 0)]]);
                let g = lower * upper;
                let unit = EisInt::units()[u];
                let t = Sharbly(perm.iter().map(|&i| g.mul_vec(&x[i]).map(|c| c * unit)).collect());
                let (tn, ts) = t.normalized().unwrap();
                let (k2, s2) = canonical_sharbly(&pl, &tn).unwrap();
                prop_assert_eq!(k1, k2);
                let (_, s0) = s.normalized().unwrap();
                prop_assert_eq!((s1 * s0) as i32 * perm_sign(&perm) as i32, (s2 * ts) as i32);
            }
        }

        #[test]
        fn reducing_vectors_shrink_faces(y in prop::array::uniform3(small_vec())) {
            let m = Mat3::from_columns(y);
            prop_assume!(m.det().norm() > 1);
            let h = hermite_form(&m);
            let w = reducing_vector(&h);
            let d = h.det().norm();
            let c = [h.column(0), h.column(1), h.column(2)];
            for i in 0..3 {
                let mut t = c;
                t[i] = w;
                prop_assert!(3 * det3(t[0], t[1], t[2]).norm() <= d);
            }
        }
    }

    #[test]
    fn round_trip_through_sharblies() {
        let level = EisIdeal::from_label("[49,18,1]".parse().unwrap()).unwrap();
        let cx = VoronoiComplexLevel::build(level);
        let cb = cx.cycle_basis().unwrap();
        for z in &cb.cycles {
            let zi: Vec<i64> = z.iter().map(|x| i64::try_from(x).unwrap()).collect();
            let ch = voronoi_to_sharbly(&cx, &zi);
            assert!(ch.is_cycle(&cx.plane));
            let back = sharbly_to_voronoi(&cx, &ch).unwrap();
            let want: Vec<BigRational> = z.iter().map(|x| BigRational::from_integer(x.clone())).collect();
            assert_eq!(back, want);
        }
    }
}
