//! The Voronoi chain complex of `Γ₀(n)` in degrees 2, 3, 4 and its third
//! homology, which is isomorphic to `H⁵(Γ₀(n); C)`.
//!
//! `Γ₀(n)`-orbits of translates `gσ` of a representative `σ` correspond to
//! orbits of the stabilizer of `σ` acting on the right of `P²(O/n)`, the
//! label of `gσ` being the bottom row of `g`.

use std::sync::OnceLock;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::eisenstein::{EisIdeal, Mat3, ProjectivePlane};
use crate::linalg::{self, large_primes, lift_vectors, primitive_integer, LinalgError, ModElim, QMat, SparseMat};
use crate::voronoi::{facets, stabilizer, CellType, FacetKind, VoronoiCell};

/// Cell types in each degree of the complex.
pub fn degree_types(degree: usize) -> &'static [CellType] {
    match degree {
        2 => &[CellType::G1],
        3 => &[CellType::F1, CellType::F2],
        4 => &[CellType::E1, CellType::E2, CellType::E3],
        _ => &[],
    }
}

/// Per-type data needed to build the complex at any level.
#[derive(Clone, Debug)]
pub struct TypeData {
    pub kind: CellType,
    /// Stabilizer modulo scalars with orientation signs.
    pub stab: Vec<(Mat3, i8)>,
    /// Facets in vertex-deletion order: incidence sign and, unless the facet
    /// lies at infinity, its type and transport matrix.
    pub facets: Vec<(i8, Option<(CellType, Mat3)>)>,
}

fn compute_type_data(kind: CellType) -> TypeData {
    let rep = VoronoiCell::rep(kind);
    let stab = stabilizer(&rep)
        .elements
        .into_iter()
        .filter(|e| {
            let first = e.gamma.0.iter().flatten().find(|x| !x.is_zero()).copied().unwrap();
            first.canonical() == first
        })
        .map(|e| (e.gamma, e.sign))
        .collect();
    let fs = facets(&rep).expect("representative facets classify");
    let facets = fs
        .into_iter()
        .enumerate()
        .map(|(i, f)| {
            let pos = if i % 2 == 0 { 1 } else { -1 };
            match f.kind {
                FacetKind::AtInfinity => (pos, None),
                FacetKind::Cell { kind, gamma, sign, .. } => (pos * sign, Some((kind, gamma))),
            }
        })
        .collect();
    TypeData { kind, stab, facets }
}

pub fn type_data(kind: CellType) -> &'static TypeData {
    static DATA: OnceLock<Vec<TypeData>> = OnceLock::new();
    let all = DATA.get_or_init(|| {
        [2, 3, 4].iter().flat_map(|&d| degree_types(d).iter().map(|&k| compute_type_data(k))).collect()
    });
    all.iter().find(|t| t.kind == kind).expect("type used in the complex")
}

/// One `Γ₀(n)`-orbit of cells of a given type.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct CellOrbit {
    pub kind: CellType,
    /// Canonical coset label (index into the projective plane).
    pub label: u32,
    pub killed: bool,
}

/// The orbit decomposition of `P²(O/n)` under one stabilizer.
#[derive(Clone, Debug)]
pub struct OrbitTable {
    pub kind: CellType,
    pub orbits: Vec<CellOrbit>,
    /// For each point: orbit index and the orientation sign relating the
    /// cell labelled by the point to the orbit representative.
    pub of_point: Vec<(u32, i8)>,
}

impl OrbitTable {
    pub fn new(plane: &ProjectivePlane, kind: CellType) -> OrbitTable {
        let td = type_data(kind);
        let n = plane.len();
        let mut of_point = vec![(u32::MAX, 0i8); n];
        let mut orbits = Vec::new();
        for p in 0..n as u32 {
            if of_point[p as usize].0 != u32::MAX {
                continue;
            }
            let id = orbits.len() as u32;
            let mut killed = false;
            for (s, eps) in &td.stab {
                let x = plane.act_right(p, s);
                let slot = &mut of_point[x as usize];
                if slot.0 == u32::MAX {
                    *slot = (id, *eps);
                } else if slot.1 != *eps {
                    killed = true;
                }
            }
            orbits.push(CellOrbit { kind, label: p, killed });
        }
        OrbitTable { kind, orbits, of_point }
    }
}

/// The complex at one level.
#[derive(Clone, Debug)]
pub struct VoronoiComplexLevel {
    pub level: EisIdeal,
    pub plane: ProjectivePlane,
    pub tables: Vec<OrbitTable>,
    /// Per degree 2, 3, 4: the list of live orbits as (table index, orbit index).
    pub basis: [Vec<(usize, u32)>; 3],
    /// For each table and orbit, its index in its degree's basis.
    index: Vec<Vec<Option<u32>>>,
    /// `d₃ : V₃ → V₂` (rows `V₂`).
    pub d3: SparseMat,
    /// `d₄ : V₄ → V₃` (rows `V₃`).
    pub d4: SparseMat,
}

impl VoronoiComplexLevel {
    pub fn build(level: EisIdeal) -> VoronoiComplexLevel {
        let plane = ProjectivePlane::new(level);
        let mut tables = Vec::new();
        let mut basis: [Vec<(usize, u32)>; 3] = Default::default();
        let mut index = Vec::new();
        for d in 2..=4 {
            for &k in degree_types(d) {
                let t = OrbitTable::new(&plane, k);
                let ti = tables.len();
                let mut idx = Vec::with_capacity(t.orbits.len());
                for (oi, o) in t.orbits.iter().enumerate() {
                    if o.killed {
                        idx.push(None);
                    } else {
                        idx.push(Some(basis[d - 2].len() as u32));
                        basis[d - 2].push((ti, oi as u32));
                    }
                }
                index.push(idx);
                tables.push(t);
            }
        }
        let mut cx = VoronoiComplexLevel {
            level,
            plane,
            tables,
            basis,
            index,
            d3: SparseMat::zero(0, 0),
            d4: SparseMat::zero(0, 0),
        };
        cx.d3 = cx.boundary(3);
        cx.d4 = cx.boundary(4);
        cx
    }

    fn table_index(&self, kind: CellType) -> usize {
        self.tables.iter().position(|t| t.kind == kind).expect("type in complex")
    }

    pub fn dim(&self, degree: usize) -> usize {
        self.basis[degree - 2].len()
    }

    /// Basis index and sign of the cell `gσ_kind` with `Γ₀(n)g` labelled by
    /// `point`; `None` if the orbit is killed.
    pub fn locate(&self, kind: CellType, point: u32) -> Option<(usize, i8)> {
        let ti = self.table_index(kind);
        let (orb, sign) = self.tables[ti].of_point[point as usize];
        self.index[ti][orb as usize].map(|i| (i as usize, sign))
    }

    /// The orbit behind a basis element of a degree.
    pub fn orbit(&self, degree: usize, i: usize) -> CellOrbit {
        let (ti, oi) = self.basis[degree - 2][i];
        self.tables[ti].orbits[oi as usize]
    }

    /// Boundary of the cell `gσ_kind` labelled by `point`, in the basis of
    /// the degree below.
    pub fn cell_boundary(&self, kind: CellType, point: u32) -> Vec<(usize, i64)> {
        let td = type_data(kind);
        let mut out = Vec::new();
        for (sign, target) in &td.facets {
            let Some((tk, h)) = target else { continue };
            let q = self.plane.act_right(point, h);
            if let Some((j, s)) = self.locate(*tk, q) {
                out.push((j, (*sign * s) as i64));
            }
        }
        out
    }

    fn boundary(&self, degree: usize) -> SparseMat {
        let mut trip = Vec::new();
        for (col, &(ti, oi)) in self.basis[degree - 2].iter().enumerate() {
            let o = self.tables[ti].orbits[oi as usize];
            for (row, v) in self.cell_boundary(o.kind, o.label) {
                trip.push((row, col, v));
            }
        }
        SparseMat::new(self.dim(degree - 1), self.dim(degree), trip)
    }

    /// Whether `d₃ ∘ d₄ = 0` exactly.
    pub fn boundary_squared_is_zero(&self) -> bool {
        self.d3.mul(&self.d4).is_zero()
    }

    /// `dim H₃ = dim ker d₃ - rank d₄`.
    pub fn homology_dim(&self) -> Result<usize, LinalgError> {
        let r3 = linalg::rank(&self.d3)?;
        let r4 = linalg::rank(&self.d4)?;
        Ok(self.dim(3) - r3 - r4)
    }

    /// Explicit cycles representing a basis of `H₃`, with dual functionals.
    pub fn cycle_basis(&self) -> Result<CycleBasis, LinalgError> {
        CycleBasis::new(self)
    }
}

pub fn homology_dim(level: EisIdeal) -> Result<usize, LinalgError> {
    VoronoiComplexLevel::build(level).homology_dim()
}

/// Incremental row echelon form over `F_p` for short dense vectors.
struct Echelon {
    p: u64,
    rows: Vec<(usize, Vec<u64>)>,
}

impl Echelon {
    fn new(p: u64) -> Self {
        Echelon { p, rows: Vec::new() }
    }

    fn insert(&mut self, mut v: Vec<u64>) -> bool {
        let p = self.p;
        for (c, r) in &self.rows {
            let f = v[*c];
            if f != 0 {
                for (x, y) in v.iter_mut().zip(r) {
                    *x = (*x + p - (f as u128 * *y as u128 % p as u128) as u64) % p;
                }
            }
        }
        let Some(c) = v.iter().position(|&x| x != 0) else { return false };
        let inv = modinv(v[c], p);
        for x in v.iter_mut() {
            *x = (*x as u128 * inv as u128 % p as u128) as u64;
        }
        self.rows.push((c, v));
        true
    }
}

fn modinv(a: u64, p: u64) -> u64 {
    let (mut r, mut b, mut e) = (1u128, a as u128, p - 2);
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % p as u128;
        }
        b = b * b % p as u128;
        e >>= 1;
    }
    r as u64
}

fn dot_mod(a: &[u64], b: &[u64], p: u64) -> u64 {
    a.iter().zip(b).fold(0u128, |s, (x, y)| (s + *x as u128 * *y as u128) % p as u128) as u64
}

fn big_mod(x: &BigInt, p: u64) -> u64 {
    let pb = BigInt::from(p);
    (((x % &pb) + &pb) % &pb).to_u64().unwrap()
}

/// Integral cycles `z_j` spanning `H₃`, integral functionals `φ_i`
/// vanishing on boundaries, and the inverse of the pairing `M = (φ_i z_j)`.
#[derive(Clone, Debug)]
pub struct CycleBasis {
    pub cycles: Vec<Vec<BigInt>>,
    pub functionals: Vec<Vec<BigInt>>,
    pairing_inverse: QMat,
}

impl CycleBasis {
    fn new(cx: &VoronoiComplexLevel) -> Result<CycleBasis, LinalgError> {
        let p = large_primes()[0];
        let e3 = ModElim::new(&cx.d3, p);
        let d4t = cx.d4.transpose();
        let e4 = ModElim::new(&d4t, p);
        let free3 = e3.free_columns();
        let free4 = e4.free_columns();
        let h = free3.len() - (cx.dim(3) - free4.len());
        if h == 0 {
            return Ok(CycleBasis { cycles: Vec::new(), functionals: Vec::new(), pairing_inverse: QMat::zeros(0, 0) });
        }
        // random functionals vanishing on boundaries detect independent cycles
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let probes: Vec<Vec<u64>> = (0..h + 4)
            .map(|_| {
                let vals: Vec<(usize, u64)> = free4.iter().map(|&f| (f, rng.gen_range(0..p))).collect();
                e4.kernel_combination(&vals)
            })
            .collect();
        let mut ech = Echelon::new(p);
        let mut chosen = Vec::new();
        for &g in &free3 {
            let k = e3.kernel_vector(g);
            let row: Vec<u64> = probes.iter().map(|f| dot_mod(f, &k, p)).collect();
            if ech.insert(row) {
                chosen.push(g);
                if chosen.len() == h {
                    break;
                }
            }
        }
        if chosen.len() < h {
            return Err(LinalgError::Reconstruction);
        }
        let d3 = &cx.d3;
        let cycles = lift_vectors(
            |q| {
                let e = ModElim::new(d3, q);
                chosen.iter().map(|&g| e.kernel_vector(g)).collect()
            },
            |c| c.iter().all(|v| d3.mul_vec_q(v).iter().all(|x| x.is_zero())),
        )?;
        let cycles: Vec<Vec<BigInt>> = cycles.iter().map(|v| primitive_integer(v)).collect();
        let zmod: Vec<Vec<u64>> = cycles.iter().map(|v| v.iter().map(|x| big_mod(x, p)).collect()).collect();
        let mut ech = Echelon::new(p);
        let mut fchosen = Vec::new();
        for &f in &free4 {
            let psi = e4.kernel_vector(f);
            let row: Vec<u64> = zmod.iter().map(|z| dot_mod(&psi, z, p)).collect();
            if ech.insert(row) {
                fchosen.push(f);
                if fchosen.len() == h {
                    break;
                }
            }
        }
        if fchosen.len() < h {
            return Err(LinalgError::Reconstruction);
        }
        let functionals = lift_vectors(
            |q| {
                let e = ModElim::new(&d4t, q);
                fchosen.iter().map(|&f| e.kernel_vector(f)).collect()
            },
            |c| c.iter().all(|v| d4t.mul_vec_q(v).iter().all(|x| x.is_zero())),
        )?;
        let functionals: Vec<Vec<BigInt>> = functionals.iter().map(|v| primitive_integer(v)).collect();
        let mut m = QMat::zeros(h, h);
        for (i, phi) in functionals.iter().enumerate() {
            for (j, z) in cycles.iter().enumerate() {
                let s: BigInt = phi.iter().zip(z).map(|(a, b)| a * b).sum();
                m.set(i, j, BigRational::from_integer(s));
            }
        }
        let pairing_inverse = m.inverse()?;
        Ok(CycleBasis { cycles, functionals, pairing_inverse })
    }

    pub fn len(&self) -> usize {
        self.cycles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cycles.is_empty()
    }

    /// `Φ y`.
    pub fn pair(&self, y: &[BigRational]) -> Vec<BigRational> {
        self.functionals
            .iter()
            .map(|phi| {
                phi.iter().zip(y).fold(BigRational::zero(), |s, (a, b)| {
                    if a.is_zero() || b.is_zero() {
                        s
                    } else {
                        s + BigRational::from_integer(a.clone()) * b
                    }
                })
            })
            .collect()
    }

    /// Coordinates of the class of a cycle `y` in the basis `z_j`.
    pub fn coordinates(&self, y: &[BigRational]) -> Vec<BigRational> {
        self.pairing_inverse.mul_vec(&self.pair(y))
    }

    /// Whether a cycle is a boundary.
    pub fn is_boundary(&self, y: &[BigRational]) -> bool {
        self.pair(y).iter().all(|x| x.is_zero())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eisenstein::HnfLabel;

    fn level(n: u64, c: u64, d: u64) -> EisIdeal {
        EisIdeal::from_label(HnfLabel::new(n, c, d)).unwrap()
    }

    #[test]
    fn full_level() {
        let cx = VoronoiComplexLevel::build(EisIdeal::unit());
        assert!(cx.boundary_squared_is_zero());
        assert_eq!(cx.homology_dim().unwrap(), 0);
    }

    #[test]
    fn norm_49() {
        let cx = VoronoiComplexLevel::build(level(49, 18, 1));
        assert!(cx.boundary_squared_is_zero());
        assert_eq!(cx.homology_dim().unwrap(), 2);
        let cb = cx.cycle_basis().unwrap();
        assert_eq!(cb.len(), 2);
    }
}
