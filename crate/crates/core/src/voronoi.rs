//! The Voronoi cell database for `GL₃(O)`.
//!
//! Cells are cones spanned by `q(v) = v v*` for minimal vectors `v`, given by
//! columns of a fixed 3×13 matrix `A`. The representatives, their dimensions
//! and the expected facet incidences live in `data/voronoi.txt`; everything
//! else (face lattices, facet types, stabilizers, orientation characters) is
//! recomputed here from exact rank tests.

use std::collections::HashMap;
use std::fmt;
use std::sync::OnceLock;

use thiserror::Error;

use crate::eisenstein::{det3, rank_over_f, spanning_point, EisInt, Mat3, Vec3};

const DATA: &str = include_str!("../data/voronoi.txt");

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VoronoiError {
    #[error("no Voronoi cells of dimension {0}")]
    BadDimension(usize),
    #[error("unknown cell type {0}")]
    UnknownType(String),
    #[error("facet {0:?} of {1} matches no representative")]
    Unclassified(Vec<usize>, CellType),
    #[error("zero vector has no Hermitian form")]
    ZeroVector,
}

#[derive(Copy, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum CellType {
    A1,
    A2,
    B1,
    B2,
    C1,
    C2,
    C3,
    D1,
    D2,
    D3,
    D4,
    E1,
    E2,
    E3,
    F1,
    F2,
    G1,
}

impl CellType {
    pub const ALL: [CellType; 17] = [
        CellType::A1,
        CellType::A2,
        CellType::B1,
        CellType::B2,
        CellType::C1,
        CellType::C2,
        CellType::C3,
        CellType::D1,
        CellType::D2,
        CellType::D3,
        CellType::D4,
        CellType::E1,
        CellType::E2,
        CellType::E3,
        CellType::F1,
        CellType::F2,
        CellType::G1,
    ];

    pub fn name(self) -> &'static str {
        use CellType::*;
        match self {
            A1 => "a1",
            A2 => "a2",
            B1 => "b1",
            B2 => "b2",
            C1 => "c1",
            C2 => "c2",
            C3 => "c3",
            D1 => "d1",
            D2 => "d2",
            D3 => "d3",
            D4 => "d4",
            E1 => "e1",
            E2 => "e2",
            E3 => "e3",
            F1 => "f1",
            F2 => "f2",
            G1 => "g1",
        }
    }

    pub fn from_name(s: &str) -> Result<CellType, VoronoiError> {
        CellType::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| VoronoiError::UnknownType(s.to_string()))
    }

    pub fn dim(self) -> usize {
        database().cells[self as usize].dim
    }

    pub fn of_dim(dim: usize) -> Vec<CellType> {
        CellType::ALL.into_iter().filter(|t| t.dim() == dim).collect()
    }
}

impl fmt::Display for CellType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A rank-one Hermitian form `v v*`, stored as the nine real coordinates
/// `(|v₀|², |v₁|², |v₂|², v₀v̄₁, v₀v̄₂, v₁v̄₂)` with each off-diagonal entry
/// split into its `(a, b)` components.
#[derive(Copy, Clone, PartialEq, Eq, Hash, Debug)]
pub struct HermitianForm(pub [i64; 9]);

impl HermitianForm {
    pub fn trace(&self) -> i64 {
        self.0[0] + self.0[1] + self.0[2]
    }

    /// Entry `(i, j)` of the matrix.
    pub fn entry(&self, i: usize, j: usize) -> EisInt {
        if i == j {
            return EisInt::from_int(self.0[i]);
        }
        let (lo, hi) = if i < j { (i, j) } else { (j, i) };
        let k = match (lo, hi) {
            (0, 1) => 3,
            (0, 2) => 5,
            _ => 7,
        };
        let x = EisInt::new(self.0[k], self.0[k + 1]);
        if i < j {
            x
        } else {
            x.conj()
        }
    }

    pub fn rank(&self) -> usize {
        let rows: Vec<Vec3> = (0..3).map(|i| [self.entry(i, 0), self.entry(i, 1), self.entry(i, 2)]).collect();
        rank_over_f(&rows)
    }
}

pub fn q_map(v: &Vec3) -> Result<HermitianForm, VoronoiError> {
    if v.iter().all(|x| x.is_zero()) {
        return Err(VoronoiError::ZeroVector);
    }
    Ok(q_unchecked(v))
}

fn q_unchecked(v: &Vec3) -> HermitianForm {
    let p01 = v[0] * v[1].conj();
    let p02 = v[0] * v[2].conj();
    let p12 = v[1] * v[2].conj();
    HermitianForm([v[0].norm(), v[1].norm(), v[2].norm(), p01.a, p01.b, p02.a, p02.b, p12.a, p12.b])
}

/// Whether the cone on the given vertices misses the open cone of
/// positive-definite forms, i.e. the vectors do not span `F³`.
pub fn is_at_infinity(vertices: &[Vec3]) -> bool {
    rank_over_f(vertices) < 3
}

struct CellRecord {
    dim: usize,
    columns: Vec<usize>,
}

struct Database {
    matrix: Vec<Vec3>,
    cells: Vec<CellRecord>,
    incidences: Vec<Vec<(Option<CellType>, usize)>>,
}

fn parse_eis(s: &str) -> EisInt {
    let (a, b) = s.split_once(',').expect("entry a,b");
    EisInt::new(a.parse().expect("integer"), b.parse().expect("integer"))
}

fn database() -> &'static Database {
    static DB: OnceLock<Database> = OnceLock::new();
    DB.get_or_init(|| {
        let mut matrix = Vec::new();
        let mut cells: Vec<Option<CellRecord>> = (0..CellType::ALL.len()).map(|_| None).collect();
        let mut incidences = vec![Vec::new(); CellType::ALL.len()];
        for line in DATA.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split_whitespace();
            match it.next() {
                Some("column") => {
                    let v: Vec<EisInt> = it.map(parse_eis).collect();
                    matrix.push([v[0], v[1], v[2]]);
                }
                Some("cell") => {
                    let t = CellType::from_name(it.next().unwrap()).unwrap();
                    let dim = it.next().unwrap().parse().unwrap();
                    let columns = it.map(|x| x.parse().unwrap()).collect();
                    cells[t as usize] = Some(CellRecord { dim, columns });
                }
                Some("facets") => {
                    let t = CellType::from_name(it.next().unwrap()).unwrap();
                    let mut v: Vec<(Option<CellType>, usize)> = it
                        .map(|x| {
                            let (name, n) = x.split_once(':').unwrap();
                            let kind = if name == "inf" { None } else { Some(CellType::from_name(name).unwrap()) };
                            (kind, n.parse().unwrap())
                        })
                        .collect();
                    v.sort();
                    incidences[t as usize] = v;
                }
                _ => {}
            }
        }
        let cells = cells.into_iter().map(|c| c.expect("all cell types listed")).collect();
        Database { matrix, cells, incidences }
    })
}

/// The 13 columns of `A`.
pub fn matrix_a() -> &'static [Vec3] {
    &database().matrix
}

/// A cell given by explicit vertex vectors, in a fixed order.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct VoronoiCell {
    pub kind: CellType,
    pub vertices: Vec<Vec3>,
}

impl VoronoiCell {
    /// The representative of a type, with vertices in the printed order.
    pub fn rep(kind: CellType) -> VoronoiCell {
        let db = database();
        let vertices = db.cells[kind as usize].columns.iter().map(|&i| db.matrix[i - 1]).collect();
        VoronoiCell { kind, vertices }
    }

    pub fn columns(kind: CellType) -> &'static [usize] {
        &database().cells[kind as usize].columns
    }

    pub fn dim(&self) -> usize {
        self.kind.dim()
    }

    pub fn is_simplex(&self) -> bool {
        self.vertices.len() == self.dim() + 1
    }

    pub fn translate(&self, g: &Mat3) -> VoronoiCell {
        VoronoiCell { kind: self.kind, vertices: self.vertices.iter().map(|v| g.mul_vec(v)).collect() }
    }

    pub fn forms(&self) -> Vec<HermitianForm> {
        self.vertices.iter().map(q_unchecked).collect()
    }
}

/// Representatives of the given dimension.
pub fn cell_reps(dim: usize) -> Result<Vec<VoronoiCell>, VoronoiError> {
    let v: Vec<VoronoiCell> = CellType::of_dim(dim).into_iter().map(VoronoiCell::rep).collect();
    if v.is_empty() {
        Err(VoronoiError::BadDimension(dim))
    } else {
        Ok(v)
    }
}

/// Exact rank of integer vectors by fraction-free elimination.
pub fn int_rank(rows: &[[i64; 9]]) -> usize {
    let mut m: Vec<[i128; 9]> = rows.iter().map(|r| r.map(|x| x as i128)).collect();
    let mut rank = 0;
    let mut prev: i128 = 1;
    for col in 0..9 {
        let Some(p) = (rank..m.len()).find(|&i| m[i][col] != 0) else { continue };
        m.swap(rank, p);
        let piv = m[rank];
        for row in m.iter_mut().skip(rank + 1) {
            let f = row[col];
            for k in 0..9 {
                row[k] = (piv[col] * row[k] - f * piv[k]) / prev;
            }
        }
        prev = piv[col];
        rank += 1;
        if rank == m.len() {
            break;
        }
    }
    rank
}

/// Determinant of a square integer matrix (Bareiss).
fn int_det(mut m: Vec<Vec<i128>>) -> i128 {
    let n = m.len();
    let mut sign = 1;
    let mut prev = 1;
    for k in 0..n {
        let Some(p) = (k..n).find(|&i| m[i][k] != 0) else { return 0 };
        if p != k {
            m.swap(p, k);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                m[i][j] = (m[k][k] * m[i][j] - m[i][k] * m[k][j]) / prev;
            }
        }
        prev = m[k][k];
    }
    sign * m[n - 1][n - 1]
}

/// The full face lattice of the polytope spanned by the given forms, as
/// vertex bitmasks grouped by dimension (`faces[0]` is the empty face).
pub fn face_lattice_of(forms: &[HermitianForm]) -> Vec<Vec<u32>> {
    let n = forms.len();
    let full_rank = int_rank(&forms.iter().map(|f| f.0).collect::<Vec<_>>());
    let rank_of = |mask: u32| {
        let rows: Vec<[i64; 9]> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| forms[i].0).collect();
        int_rank(&rows)
    };
    let facets = facets_of(forms, full_rank);
    let all = (1u32 << n) - 1;
    let mut faces: std::collections::BTreeSet<u32> = std::collections::BTreeSet::new();
    faces.insert(all);
    let mut frontier: Vec<u32> = facets.clone();
    for f in &facets {
        faces.insert(*f);
    }
    while let Some(f) = frontier.pop() {
        for g in &facets {
            let h = f & g;
            if faces.insert(h) {
                frontier.push(h);
            }
        }
    }
    let mut out = vec![Vec::new(); full_rank + 1];
    for f in faces {
        out[rank_of(f)].push(f);
    }
    out
}

/// Facets (as vertex bitmasks) of a full-rank-`r` cone on the given forms.
fn facets_of(forms: &[HermitianForm], r: usize) -> Vec<u32> {
    let n = forms.len();
    if n == r {
        return (0..n).map(|i| ((1u32 << n) - 1) & !(1 << i)).collect();
    }
    // restrict to coordinates where the forms have full rank r
    let coords = independent_coords(forms, r);
    let proj: Vec<Vec<i128>> =
        forms.iter().map(|f| coords.iter().map(|&c| f.0[c] as i128).collect()).collect();
    let mut seen = std::collections::BTreeSet::new();
    let mut subset: Vec<usize> = (0..r - 1).collect();
    loop {
        let rows: Vec<&Vec<i128>> = subset.iter().map(|&i| &proj[i]).collect();
        // normal vector via cofactors of the (r-1)×r matrix
        let normal: Vec<i128> = (0..r)
            .map(|skip| {
                let m: Vec<Vec<i128>> = rows
                    .iter()
                    .map(|row| (0..r).filter(|&c| c != skip).map(|c| row[c]).collect())
                    .collect();
                let d = int_det(m);
                if skip % 2 == 0 {
                    d
                } else {
                    -d
                }
            })
            .collect();
        if normal.iter().any(|&x| x != 0) {
            let dots: Vec<i128> =
                proj.iter().map(|p| p.iter().zip(&normal).map(|(a, b)| a * b).sum()).collect();
            let pos = dots.iter().any(|&d| d > 0);
            let neg = dots.iter().any(|&d| d < 0);
            if !(pos && neg) {
                let mask = dots.iter().enumerate().filter(|(_, &d)| d == 0).fold(0u32, |m, (i, _)| m | 1 << i);
                seen.insert(mask);
            }
        }
        if !next_subset(&mut subset, n) {
            break;
        }
    }
    seen.into_iter().collect()
}

fn independent_coords(forms: &[HermitianForm], r: usize) -> Vec<usize> {
    let mut chosen: Vec<usize> = Vec::new();
    for c in 0..9 {
        let mut trial = chosen.clone();
        trial.push(c);
        let rows: Vec<Vec<i64>> = forms.iter().map(|f| trial.iter().map(|&k| f.0[k]).collect()).collect();
        if generic_rank(&rows) == trial.len() {
            chosen = trial;
        }
        if chosen.len() == r {
            break;
        }
    }
    chosen
}

fn generic_rank(rows: &[Vec<i64>]) -> usize {
    let w = rows.first().map_or(0, |r| r.len());
    let padded: Vec<[i64; 9]> = rows
        .iter()
        .map(|r| {
            let mut a = [0i64; 9];
            a[..w].copy_from_slice(r);
            a
        })
        .collect();
    int_rank(&padded)
}

fn next_subset(s: &mut [usize], n: usize) -> bool {
    let k = s.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if s[i] < n - k + i {
            s[i] += 1;
            for j in i + 1..k {
                s[j] = s[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// The f-vector `(f₋₁, f₀, …, f_d)` of a representative.
pub fn face_lattice(kind: CellType) -> Vec<usize> {
    face_lattice_of(&VoronoiCell::rep(kind).forms()).iter().map(|v| v.len()).collect()
}

/// A match `γ·x_j ~ y_{perm[j]}` between two vertex lists.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct CellMatch {
    pub gamma: Mat3,
    pub perm: Vec<usize>,
}

struct RayIndex {
    map: HashMap<Vec3, usize>,
}

impl RayIndex {
    fn new(vs: &[Vec3]) -> Self {
        RayIndex { map: vs.iter().enumerate().map(|(i, v)| (spanning_point(v).unwrap(), i)).collect() }
    }
    fn find(&self, v: &Vec3) -> Option<usize> {
        spanning_point(v).and_then(|s| self.map.get(&s).copied())
    }
}

fn first_independent_triple(xs: &[Vec3]) -> Option<[usize; 3]> {
    let n = xs.len();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                if !det3(xs[i], xs[j], xs[k]).is_zero() {
                    return Some([i, j, k]);
                }
            }
        }
    }
    None
}

/// Search for `γ ∈ GL₃(O)` carrying the rays of `xs` bijectively onto those
/// of `ys`. With `all = false` the first match (fixed search order) is
/// returned; otherwise all matches, each up to the six scalar units.
fn equiv_search(xs: &[Vec3], ys: &[Vec3], all: bool) -> Vec<CellMatch> {
    let mut out = Vec::new();
    if xs.len() != ys.len() {
        return out;
    }
    let Some(t) = first_independent_triple(xs) else { return out };
    let v = Mat3::from_columns([xs[t[0]], xs[t[1]], xs[t[2]]]);
    let dv = v.det();
    let adj = v.adjugate();
    let index = RayIndex::new(ys);
    let n = ys.len();
    let units = EisInt::units();
    for a in 0..n {
        for b in 0..n {
            if b == a {
                continue;
            }
            for c in 0..n {
                if c == a || c == b {
                    continue;
                }
                let w = Mat3::from_columns([ys[a], ys[b], ys[c]]);
                let dw = w.det();
                if dw.is_zero() || dw.norm() != dv.norm() {
                    continue;
                }
                for u2 in units {
                    for u3 in units {
                        let wd = Mat3::from_columns([ys[a], ys[b] .map(|x| x * u2), ys[c].map(|x| x * u3)]);
                        let num = wd * adj;
                        let Some(g) = exact_div(&num, dv) else { continue };
                        if !g.det().is_unit() {
                            continue;
                        }
                        let mut perm = vec![usize::MAX; n];
                        let mut used = vec![false; n];
                        let mut ok = true;
                        for (j, x) in xs.iter().enumerate() {
                            match index.find(&g.mul_vec(x)) {
                                Some(k) if !used[k] => {
                                    used[k] = true;
                                    perm[j] = k;
                                }
                                _ => {
                                    ok = false;
                                    break;
                                }
                            }
                        }
                        if ok {
                            out.push(CellMatch { gamma: g, perm });
                            if !all {
                                return out;
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

fn exact_div(m: &Mat3, d: EisInt) -> Option<Mat3> {
    let mut r = m.0;
    for row in r.iter_mut() {
        for x in row.iter_mut() {
            *x = x.div_exact(d)?;
        }
    }
    Some(Mat3(r))
}

/// `γ` with `γ·c1 = c2` as sets of rays, if it exists.
pub fn cell_equiv(c1: &[Vec3], c2: &[Vec3]) -> Option<CellMatch> {
    equiv_search(c1, c2, false).into_iter().next()
}

/// Sign of a permutation given as an image list.
pub fn perm_sign(perm: &[usize]) -> i8 {
    let mut seen = vec![false; perm.len()];
    let mut sign = 1i8;
    for i in 0..perm.len() {
        if seen[i] {
            continue;
        }
        let mut len = 0;
        let mut j = i;
        while !seen[j] {
            seen[j] = true;
            j = perm[j];
            len += 1;
        }
        if len % 2 == 0 {
            sign = -sign;
        }
    }
    sign
}

#[derive(Clone, Debug)]
pub struct StabElement {
    pub gamma: Mat3,
    pub perm: Vec<usize>,
    /// Orientation character `ε(γ)`.
    pub sign: i8,
}

#[derive(Clone, Debug)]
pub struct Stabilizer {
    pub elements: Vec<StabElement>,
}

impl Stabilizer {
    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn sign_of(&self, g: &Mat3) -> Option<i8> {
        self.elements.iter().find(|e| e.gamma == *g).map(|e| e.sign)
    }
}

/// Orientation sign of the linear map on the cell's span induced by a
/// vertex permutation.
pub fn orientation_sign(cell: &VoronoiCell, perm: &[usize]) -> i8 {
    if cell.is_simplex() {
        return perm_sign(perm);
    }
    let forms = cell.forms();
    let rows: Vec<[i64; 9]> = forms.iter().map(|f| f.0).collect();
    let r = int_rank(&rows);
    let coords = independent_coords(&forms, r);
    // a basis of the span among the vertices
    let mut basis: Vec<usize> = Vec::new();
    for i in 0..forms.len() {
        let mut t: Vec<[i64; 9]> = basis.iter().map(|&b| rows[b]).collect();
        t.push(rows[i]);
        if int_rank(&t) == t.len() {
            basis.push(i);
        }
        if basis.len() == r {
            break;
        }
    }
    let det_of = |idx: &Vec<usize>| {
        int_det(idx.iter().map(|&i| coords.iter().map(|&c| rows[i][c] as i128).collect()).collect())
    };
    let d0 = det_of(&basis);
    let d1 = det_of(&basis.iter().map(|&i| perm[i]).collect());
    if (d0 > 0) == (d1 > 0) {
        1
    } else {
        -1
    }
}

/// All of `γ ∈ GL₃(O)` fixing the cell setwise, with orientation signs.
pub fn stabilizer(cell: &VoronoiCell) -> Stabilizer {
    let base = equiv_search(&cell.vertices, &cell.vertices, true);
    let mut elements = Vec::new();
    for m in base {
        let sign = orientation_sign(cell, &m.perm);
        for u in EisInt::units() {
            let g = m.gamma * Mat3::scalar(u);
            elements.push(StabElement { gamma: g, perm: m.perm.clone(), sign });
        }
    }
    elements.sort_by_key(|e| format!("{:?}", e.gamma.0));
    elements.dedup_by(|a, b| a.gamma == b.gamma);
    Stabilizer { elements }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FacetKind {
    AtInfinity,
    /// The facet equals `gamma · rep(kind)`; `perm[j]` is the position in
    /// the facet's vertex list of the image of the representative's
    /// `j`-th vertex, and `sign` is that permutation's orientation sign.
    Cell { kind: CellType, gamma: Mat3, perm: Vec<usize>, sign: i8 },
}

#[derive(Clone, Debug)]
pub struct Facet {
    /// Indices into the cell's vertex list, increasing.
    pub vertices: Vec<usize>,
    pub kind: FacetKind,
}

impl Facet {
    pub fn cell_type(&self) -> Option<CellType> {
        match &self.kind {
            FacetKind::AtInfinity => None,
            FacetKind::Cell { kind, .. } => Some(*kind),
        }
    }
}

/// Classify a vertex list against the representatives of one dimension.
pub fn classify_vertices(vs: &[Vec3], dim: usize) -> Option<FacetKind> {
    if is_at_infinity(vs) {
        return Some(FacetKind::AtInfinity);
    }
    for kind in CellType::of_dim(dim) {
        let rep = VoronoiCell::rep(kind);
        if let Some(m) = cell_equiv(&rep.vertices, vs) {
            let sign = orientation_sign(&rep, &m.perm);
            return Some(FacetKind::Cell { kind, gamma: m.gamma, perm: m.perm, sign });
        }
    }
    None
}

/// Facets of a cell; for simplices, facet `i` omits vertex `i`.
pub fn facets(cell: &VoronoiCell) -> Result<Vec<Facet>, VoronoiError> {
    let n = cell.vertices.len();
    let masks: Vec<u32> = if cell.is_simplex() {
        (0..n).map(|i| ((1u32 << n) - 1) & !(1 << i)).collect()
    } else {
        let forms = cell.forms();
        let r = int_rank(&forms.iter().map(|f| f.0).collect::<Vec<_>>());
        facets_of(&forms, r)
    };
    let mut out = Vec::new();
    for mask in masks {
        let idx: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        let vs: Vec<Vec3> = idx.iter().map(|&i| cell.vertices[i]).collect();
        let kind = classify_vertices(&vs, cell.dim() - 1)
            .ok_or_else(|| VoronoiError::Unclassified(idx.clone(), cell.kind))?;
        out.push(Facet { vertices: idx, kind });
    }
    Ok(out)
}

/// Facet type counts of a representative, at-infinity facets under `None`.
pub fn facet_counts(kind: CellType) -> Result<Vec<(Option<CellType>, usize)>, VoronoiError> {
    let mut counts: std::collections::BTreeMap<Option<CellType>, usize> = Default::default();
    for f in facets(&VoronoiCell::rep(kind))? {
        *counts.entry(f.cell_type()).or_default() += 1;
    }
    Ok(counts.into_iter().collect())
}

/// The shipped incidence table for a type, sorted as [`facet_counts`].
pub fn expected_facet_counts(kind: CellType) -> &'static [(Option<CellType>, usize)] {
    &database().incidences[kind as usize]
}

/// Types whose recomputed facet counts differ from the shipped table.
pub fn incidence_mismatches() -> Result<Vec<CellType>, VoronoiError> {
    let mut bad = Vec::new();
    for kind in CellType::ALL {
        if facet_counts(kind)? != expected_facet_counts(kind) {
            bad.push(kind);
        }
    }
    Ok(bad)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn columns_of_a() {
        let a = matrix_a();
        assert_eq!(a.len(), 13);
        assert_eq!(a[8], [EisInt::ZERO, EisInt::ZERO, EisInt::ONE]);
        assert_eq!(a[0], [EisInt::ONE, EisInt::new(-1, -1), EisInt::ONE]);
        for v in a {
            assert_eq!(spanning_point(v).map(|s| s.len()), Some(3));
            let g = v.iter().fold(EisInt::ZERO, |g, x| crate::eisenstein::gcd(g, *x).unwrap_or(g));
            assert!(g.is_unit());
        }
    }

    #[test]
    fn q_examples() {
        let e1 = [EisInt::ONE, EisInt::ZERO, EisInt::ZERO];
        assert_eq!(q_map(&e1).unwrap().0, [1, 0, 0, 0, 0, 0, 0, 0, 0]);
        let v = [EisInt::ONE, EisInt::ONE, EisInt::ZERO];
        let q = q_map(&v).unwrap();
        assert_eq!(q.trace(), 2);
        assert_eq!(q.rank(), 1);
        assert!(q_map(&[EisInt::ZERO; 3]).is_err());
    }

    #[test]
    fn reps_by_dimension() {
        let names = |d| cell_reps(d).unwrap().iter().map(|c| c.kind.name()).collect::<Vec<_>>();
        assert_eq!(names(3), vec!["f1", "f2"]);
        assert_eq!(names(5).len(), 4);
        assert_eq!(names(2), vec!["g1"]);
        assert!(cell_reps(1).is_err());
    }

    #[test]
    fn infinity() {
        let e = |i: usize| {
            let mut v = [EisInt::ZERO; 3];
            v[i] = EisInt::ONE;
            v
        };
        assert!(!is_at_infinity(&[e(0), e(1), e(2)]));
        assert!(is_at_infinity(&[e(0)]));
        let g = VoronoiCell::rep(CellType::G1);
        for f in facets(&g).unwrap() {
            assert_eq!(f.kind, FacetKind::AtInfinity);
        }
    }

    #[test]
    fn incidences_of_small_cells() {
        for kind in [CellType::E1, CellType::E2, CellType::E3, CellType::F1, CellType::F2, CellType::G1] {
            assert_eq!(facet_counts(kind).unwrap(), expected_facet_counts(kind));
        }
    }

    #[test]
    fn equivalence_of_reps() {
        let f1 = VoronoiCell::rep(CellType::F1);
        let f2 = VoronoiCell::rep(CellType::F2);
        let m = cell_equiv(&f1.vertices, &f1.vertices).unwrap();
        assert!(m.gamma.det().is_unit());
        assert!(cell_equiv(&f1.vertices, &f2.vertices).is_none());
    }

    #[test]
    fn f_vector_a1() {
        assert_eq!(face_lattice(CellType::A1), vec![1, 9, 36, 84, 126, 126, 84, 36, 9, 1]);
    }
}
