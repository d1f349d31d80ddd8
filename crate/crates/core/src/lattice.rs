//! Finite crystals and their weighted distance domain.
//!
//! A lattice with primitive vectors `a_i`, extents `N_i` and a basis `b_α`
//! has atoms at `n·a + b_α` with `0 ≤ n_i < N_i`. Every pair difference is
//! `r(n, γ) = Σ n_i a_i + c_γ` with `n_i ∈ [-(N_i-1), N_i-1]` and `c_γ` drawn
//! from the basis difference set. The number of ordered atom pairs sharing a
//! given `(n, γ)` is `ω_γ ∏(N_i - |n_i|)`, so a sum over all N² pairs of a
//! function of the pair separation reduces to ∏(2N_i - 1)·|D_b| weighted terms.

use crate::consts::{CARBON_MASS, GRAPHENE_LATTICE_STEP};
use crate::error::{invalid, Error, Result};
use crate::vec3::Vec3;
use std::ops::RangeInclusive;

/// One atom of the unit cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisAtom {
    /// Offset from the cell origin, m.
    pub offset: Vec3,
    /// Mass, kg.
    pub mass: f64,
    /// Intrinsic (nuclear) radius, m. Zero for point nuclei.
    pub radius: f64,
}

impl BasisAtom {
    pub const fn point(offset: Vec3, mass: f64) -> Self {
        BasisAtom {
            offset,
            mass,
            radius: 0.0,
        }
    }
}

/// A merged class of intra-cell basis differences `c_γ = b_α - b_β`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisPair {
    pub offset: Vec3,
    /// Number of ordered (α, β) pairs merged into this class (ω_γ).
    pub multiplicity: u64,
    /// m_α m_β, kg².
    pub mass_product: f64,
    /// (R_α² + R_β²) / 2, m².
    pub radius_sq_mean: f64,
}

/// One element of the weighted distance domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceEntry {
    /// Cell offset (n_1, n_2, n_3); n_3 = 0 for 2D lattices.
    pub cell: [i64; 3],
    /// Index into [`Lattice::basis_pairs`].
    pub gamma: usize,
    /// Separation vector, m.
    pub r: Vec3,
    /// Number of ordered atom pairs with this separation class.
    pub weight: u64,
    /// kg².
    pub mass_product: f64,
    /// m².
    pub radius_sq_mean: f64,
}

/// An atom with an explicit position, used by the pairwise oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub position: Vec3,
    pub mass: f64,
    pub radius: f64,
}

/// A finite crystal. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    dimension: u32,
    vectors: [Vec3; 3],
    basis: Vec<BasisAtom>,
    extents: [u64; 3],
    pairs: Vec<BasisPair>,
}

impl Lattice {
    /// Builds a lattice from explicit primitive vectors, basis and extents.
    ///
    /// `vectors` and `extents` must both have `dimension` entries. For
    /// `dimension == 2` all vectors and offsets must lie in the z = 0 plane.
    pub fn new(
        dimension: u32,
        vectors: &[Vec3],
        basis: Vec<BasisAtom>,
        extents: &[u64],
    ) -> Result<Self> {
        if !(2..=3).contains(&dimension) {
            return Err(Error::InvalidLattice(format!(
                "dimension must be 2 or 3, got {dimension}"
            )));
        }
        let dim = dimension as usize;
        if vectors.len() != dim || extents.len() != dim {
            return Err(Error::InvalidLattice(format!(
                "expected {dim} primitive vectors and extents, got {} and {}",
                vectors.len(),
                extents.len()
            )));
        }
        if basis.is_empty() {
            return Err(Error::InvalidLattice("basis is empty".into()));
        }
        if let Some(i) = extents.iter().position(|&n| n == 0) {
            return Err(Error::InvalidLattice(format!("extent N{} must be ≥ 1", i + 1)));
        }
        if vectors.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidLattice("primitive vectors must be finite".into()));
        }
        if dim == 2 && vectors.iter().any(|v| v.0[2] != 0.0) {
            return Err(Error::InvalidLattice(
                "2D primitive vectors must lie in the z = 0 plane".into(),
            ));
        }
        for (i, atom) in basis.iter().enumerate() {
            if !(atom.mass > 0.0 && atom.mass.is_finite()) {
                return Err(Error::InvalidLattice(format!("basis atom {i}: mass must be > 0")));
            }
            if !(atom.radius >= 0.0 && atom.radius.is_finite()) {
                return Err(Error::InvalidLattice(format!("basis atom {i}: radius must be ≥ 0")));
            }
            if !atom.offset.is_finite() || (dim == 2 && atom.offset.0[2] != 0.0) {
                return Err(Error::InvalidLattice(format!(
                    "basis atom {i}: offset must be finite and in-plane for 2D lattices"
                )));
            }
        }

        // Gram determinant relative to the product of squared lengths is the
        // squared sine volume; zero means linearly dependent vectors.
        let gram_det = gram_determinant(vectors);
        let scale: f64 = vectors.iter().map(|v| v.dot(*v)).product();
        if !(scale > 0.0) || gram_det <= 1e-12 * scale {
            return Err(Error::InvalidLattice(
                "primitive vectors are linearly dependent".into(),
            ));
        }

        let mut vs = [Vec3::ZERO; 3];
        let mut ns = [1u64; 3];
        vs[..dim].copy_from_slice(vectors);
        ns[..dim].copy_from_slice(extents);
        let n_atoms = (ns[0] as u128) * (ns[1] as u128) * (ns[2] as u128) * (basis.len() as u128);
        if n_atoms > u64::MAX as u128 {
            return Err(Error::InvalidLattice("atom count overflows u64".into()));
        }

        let pairs = merge_basis_pairs(&basis);
        Ok(Lattice {
            dimension,
            vectors: vs,
            basis,
            extents: ns,
            pairs,
        })
    }

    /// Single-layer graphene: a = 2.46 Å, two carbon atoms per cell.
    pub fn graphene_sheet(n1: u64, n2: u64) -> Result<Self> {
        let (a1, a2, basis) = graphene_cell();
        Lattice::new(2, &[a1, a2], basis, &[n1, n2])
    }

    /// Monoatomic square lattice with step `a` and atomic mass `mass`.
    pub fn square(n1: u64, n2: u64, a: f64, mass: f64) -> Result<Self> {
        check_positive("a", a)?;
        check_positive("mass", mass)?;
        Lattice::new(
            2,
            &[Vec3::xy(a, 0.0), Vec3::xy(0.0, a)],
            vec![BasisAtom::point(Vec3::ZERO, mass)],
            &[n1, n2],
        )
    }

    /// Monoatomic simple cubic lattice.
    pub fn simple_cubic(n1: u64, n2: u64, n3: u64, a: f64, mass: f64) -> Result<Self> {
        check_positive("a", a)?;
        check_positive("mass", mass)?;
        Lattice::new(
            3,
            &[
                Vec3::new(a, 0.0, 0.0),
                Vec3::new(0.0, a, 0.0),
                Vec3::new(0.0, 0.0, a),
            ],
            vec![BasisAtom::point(Vec3::ZERO, mass)],
            &[n1, n2, n3],
        )
    }

    /// AA-stacked graphene layers separated by `interlayer`.
    pub fn stacked_graphene(n1: u64, n2: u64, n3: u64, interlayer: f64) -> Result<Self> {
        check_positive("interlayer", interlayer)?;
        let (a1, a2, basis) = graphene_cell();
        Lattice::new(
            3,
            &[a1, a2, Vec3::new(0.0, 0.0, interlayer)],
            basis,
            &[n1, n2, n3],
        )
    }

    pub fn dimension(&self) -> u32 {
        self.dimension
    }

    pub fn vectors(&self) -> &[Vec3] {
        &self.vectors[..self.dimension as usize]
    }

    pub fn basis(&self) -> &[BasisAtom] {
        &self.basis
    }

    pub fn extents(&self) -> &[u64] {
        &self.extents[..self.dimension as usize]
    }

    /// Merged intra-cell difference classes (D_b with multiplicities ω_γ).
    pub fn basis_pairs(&self) -> &[BasisPair] {
        &self.pairs
    }

    pub fn n_cells(&self) -> u64 {
        self.extents.iter().product()
    }

    pub fn n_atoms(&self) -> u64 {
        self.n_cells() * self.basis.len() as u64
    }

    /// Area (2D) or volume (3D) of the unit cell.
    pub fn cell_measure(&self) -> f64 {
        let [a1, a2, a3] = self.vectors;
        match self.dimension {
            2 => a1.cross(a2).norm(),
            _ => a1.cross(a2).dot(a3).abs(),
        }
    }

    /// Edge lengths `N_i |a_i|`.
    pub fn side_lengths(&self) -> Vec<f64> {
        self.vectors()
            .iter()
            .zip(self.extents())
            .map(|(v, &n)| n as f64 * v.norm())
            .collect()
    }

    /// Number of entries streamed by [`Lattice::distance_domain`].
    pub fn domain_len(&self) -> u64 {
        self.extents.iter().map(|&n| 2 * n - 1).product::<u64>() * self.pairs.len() as u64
    }

    /// Range of the outermost cell index n_1.
    pub fn n1_range(&self) -> RangeInclusive<i64> {
        let n = self.extents[0] as i64;
        -(n - 1)..=(n - 1)
    }

    /// Streams the weighted distance domain in lexicographic order of
    /// (n_1, n_2, n_3, γ).
    pub fn distance_domain(&self) -> DistanceDomain<'_> {
        DistanceDomain::new(self, self.n1_range())
    }

    /// The part of the domain with n_1 in `n1`. Contiguous sub-ranges of
    /// [`Lattice::n1_range`] partition the domain.
    pub fn domain_slabs(&self, n1: RangeInclusive<i64>) -> DistanceDomain<'_> {
        let full = self.n1_range();
        let lo = (*n1.start()).max(*full.start());
        let hi = (*n1.end()).min(*full.end());
        DistanceDomain::new(self, lo..=hi)
    }

    /// Explicit atom list in cell-major order, for the pairwise oracle.
    pub fn atoms(&self) -> Vec<Atom> {
        let [n1, n2, n3] = self.extents;
        let [a1, a2, a3] = self.vectors;
        let mut out = Vec::with_capacity(self.n_atoms() as usize);
        for i in 0..n1 {
            for j in 0..n2 {
                for k in 0..n3 {
                    let origin = i as f64 * a1 + j as f64 * a2 + k as f64 * a3;
                    for b in &self.basis {
                        out.push(Atom {
                            position: origin + b.offset,
                            mass: b.mass,
                            radius: b.radius,
                        });
                    }
                }
            }
        }
        out
    }

    #[inline]
    pub(crate) fn cell_vector(&self, n: [i64; 3]) -> Vec3 {
        let [a1, a2, a3] = self.vectors;
        n[0] as f64 * a1 + n[1] as f64 * a2 + n[2] as f64 * a3
    }

    #[inline]
    pub(crate) fn cell_weight(&self, n: [i64; 3]) -> u64 {
        (0..3)
            .map(|i| self.extents[i] - n[i].unsigned_abs())
            .product()
    }
}

fn check_positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(name, format!("must be a positive finite number, got {v}")))
    }
}

fn graphene_cell() -> (Vec3, Vec3, Vec<BasisAtom>) {
    let a = GRAPHENE_LATTICE_STEP;
    let s3 = 3f64.sqrt();
    let a1 = Vec3::xy(a, 0.0);
    let a2 = Vec3::xy(0.5 * a, 0.5 * s3 * a);
    let basis = vec![
        BasisAtom::point(Vec3::ZERO, CARBON_MASS),
        BasisAtom::point(Vec3::xy(0.5 * a, s3 / 6.0 * a), CARBON_MASS),
    ];
    (a1, a2, basis)
}

fn gram_determinant(v: &[Vec3]) -> f64 {
    match v.len() {
        2 => {
            let (g11, g12, g22) = (v[0].dot(v[0]), v[0].dot(v[1]), v[1].dot(v[1]));
            g11 * g22 - g12 * g12
        }
        3 => {
            let vol = v[0].cross(v[1]).dot(v[2]);
            vol * vol
        }
        _ => 0.0,
    }
}

/// Builds D_b. Classes are ordered by first occurrence over (α, β) in
/// lexicographic order; two ordered pairs merge only when the offset, the mass
/// product and the radius term all coincide exactly.
fn merge_basis_pairs(basis: &[BasisAtom]) -> Vec<BasisPair> {
    let mut pairs: Vec<BasisPair> = Vec::new();
    for a in basis {
        for b in basis {
            let offset = a.offset - b.offset;
            let mass_product = a.mass * b.mass;
            let radius_sq_mean = 0.5 * (a.radius * a.radius + b.radius * b.radius);
            match pairs.iter_mut().find(|p| {
                p.offset == offset
                    && p.mass_product == mass_product
                    && p.radius_sq_mean == radius_sq_mean
            }) {
                Some(p) => p.multiplicity += 1,
                None => pairs.push(BasisPair {
                    offset,
                    multiplicity: 1,
                    mass_product,
                    radius_sq_mean,
                }),
            }
        }
    }
    pairs
}

/// Lexicographic stream over a contiguous n_1 range of the distance domain.
#[derive(Debug, Clone)]
pub struct DistanceDomain<'a> {
    lat: &'a Lattice,
    n1_end: i64,
    n: [i64; 3],
    gamma: usize,
    done: bool,
}

impl<'a> DistanceDomain<'a> {
    fn new(lat: &'a Lattice, n1: RangeInclusive<i64>) -> Self {
        let lo2 = -(lat.extents[1] as i64 - 1);
        let lo3 = -(lat.extents[2] as i64 - 1);
        DistanceDomain {
            lat,
            n1_end: *n1.end(),
            n: [*n1.start(), lo2, lo3],
            gamma: 0,
            done: n1.start() > n1.end(),
        }
    }

    fn advance(&mut self) {
        self.gamma += 1;
        if self.gamma < self.lat.pairs.len() {
            return;
        }
        self.gamma = 0;
        for axis in (0..3).rev() {
            let hi = self.lat.extents[axis] as i64 - 1;
            let limit = if axis == 0 { self.n1_end } else { hi };
            if self.n[axis] < limit {
                self.n[axis] += 1;
                return;
            }
            self.n[axis] = -hi;
        }
        self.done = true;
    }
}

impl Iterator for DistanceDomain<'_> {
    type Item = DistanceEntry;

    #[inline]
    fn next(&mut self) -> Option<DistanceEntry> {
        if self.done {
            return None;
        }
        let pair = &self.lat.pairs[self.gamma];
        let entry = DistanceEntry {
            cell: self.n,
            gamma: self.gamma,
            r: self.lat.cell_vector(self.n) + pair.offset,
            weight: pair.multiplicity * self.lat.cell_weight(self.n),
            mass_product: pair.mass_product,
            radius_sq_mean: pair.radius_sq_mean,
        };
        self.advance();
        Some(entry)
    }
}
