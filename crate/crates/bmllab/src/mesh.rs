//! Exact dyadic geometry: cubes, thirds-shifted grids, mesh functions, and
//! overlap measures in rational arithmetic.

use crate::rat::{self, ceil_int, floor_int, from_int, pow2, rat, Rat};
use crate::{Error, Result};
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub const MAX_DIM: usize = 2;

/// Half-open dyadic cube `Π_i [2^{-j} m_i, 2^{-j}(m_i+1))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DyadicCube {
    pub j: i32,
    pub m: [i64; MAX_DIM],
    pub n: usize,
}

impl DyadicCube {
    pub fn new(j: i32, m: &[i64]) -> Self {
        let n = m.len();
        assert!((1..=MAX_DIM).contains(&n));
        let mut mm = [0i64; MAX_DIM];
        mm[..n].copy_from_slice(m);
        DyadicCube { j, m: mm, n }
    }

    pub fn side(&self) -> Rat {
        pow2(-self.j)
    }

    pub fn volume(&self) -> Rat {
        let mut v = from_int(1);
        for _ in 0..self.n {
            v *= self.side();
        }
        v
    }

    pub fn corner(&self) -> Vec<Rat> {
        (0..self.n).map(|i| self.side() * from_int(self.m[i] as i128)).collect()
    }

    pub fn region(&self) -> Region {
        let mut lo = [Rat::zero(); MAX_DIM];
        let mut hi = [Rat::zero(); MAX_DIM];
        for i in 0..self.n {
            lo[i] = self.side() * from_int(self.m[i] as i128);
            hi[i] = lo[i] + self.side();
        }
        Region { n: self.n, lo, hi }
    }

    /// Dyadic ancestor at scale `j - levels`.
    pub fn parent(&self, levels: u32) -> DyadicCube {
        let mut m = [0i64; MAX_DIM];
        for (slot, v) in m[..self.n].iter_mut().zip(&self.m) {
            *slot = v >> levels;
        }
        DyadicCube { j: self.j - levels as i32, m, n: self.n }
    }

    pub fn contains(&self, other: &DyadicCube) -> bool {
        if other.j < self.j {
            return false;
        }
        *self == other.parent((other.j - self.j) as u32)
    }

    pub fn disjoint(&self, other: &DyadicCube) -> bool {
        !self.contains(other) && !other.contains(self)
    }
}

/// Cube of the shifted grid `D_{k,ā}`: each edge `2^{-k}[m_i + a_i/3, m_i + a_i/3 + 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ShiftedCube {
    pub k: i32,
    pub m: [i64; MAX_DIM],
    pub a: [u8; MAX_DIM],
    pub n: usize,
}

impl ShiftedCube {
    pub fn new(k: i32, m: &[i64], a: &[u8]) -> Self {
        let n = m.len();
        assert!((1..=MAX_DIM).contains(&n) && a.len() == n);
        assert!(a.iter().all(|&ai| ai < 3));
        let mut mm = [0i64; MAX_DIM];
        mm[..n].copy_from_slice(m);
        let mut aa = [0u8; MAX_DIM];
        aa[..n].copy_from_slice(a);
        ShiftedCube { k, m: mm, a: aa, n }
    }

    pub fn side(&self) -> Rat {
        pow2(-self.k)
    }

    pub fn volume(&self) -> Rat {
        let mut v = from_int(1);
        for _ in 0..self.n {
            v *= self.side();
        }
        v
    }

    pub fn region(&self) -> Region {
        let mut lo = [Rat::zero(); MAX_DIM];
        let mut hi = [Rat::zero(); MAX_DIM];
        for i in 0..self.n {
            lo[i] = self.side() * (from_int(self.m[i] as i128) + rat(self.a[i] as i128, 3));
            hi[i] = lo[i] + self.side();
        }
        Region { n: self.n, lo, hi }
    }
}

/// Axis-aligned box `Π_i [lo_i, hi_i)` with rational endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Region {
    pub n: usize,
    pub lo: [Rat; MAX_DIM],
    pub hi: [Rat; MAX_DIM],
}

impl Region {
    pub fn new(lo: &[Rat], hi: &[Rat]) -> Result<Self> {
        let n = lo.len();
        if n == 0 || n > MAX_DIM || hi.len() != n {
            return Err(Error::InvalidMesh(format!("region dimension {n}")));
        }
        if (0..n).any(|i| lo[i] >= hi[i]) {
            return Err(Error::EmptyRegion);
        }
        let mut l = [Rat::zero(); MAX_DIM];
        let mut h = [Rat::zero(); MAX_DIM];
        l[..n].copy_from_slice(lo);
        h[..n].copy_from_slice(hi);
        Ok(Region { n, lo: l, hi: h })
    }

    pub fn interval(lo: Rat, hi: Rat) -> Result<Self> {
        Region::new(&[lo], &[hi])
    }

    /// Cube with the given center and half-side.
    pub fn cube(center: &[Rat], half_side: Rat) -> Result<Self> {
        let lo: Vec<Rat> = center.iter().map(|c| *c - half_side).collect();
        let hi: Vec<Rat> = center.iter().map(|c| *c + half_side).collect();
        Region::new(&lo, &hi)
    }

    pub fn measure(&self) -> Rat {
        let mut v = from_int(1);
        for i in 0..self.n {
            v *= self.hi[i] - self.lo[i];
        }
        v
    }

    pub fn side(&self, axis: usize) -> Rat {
        self.hi[axis] - self.lo[axis]
    }

    pub fn is_cube(&self) -> bool {
        (1..self.n).all(|i| self.side(i) == self.side(0))
    }

    pub fn center(&self) -> Vec<Rat> {
        (0..self.n).map(|i| (self.lo[i] + self.hi[i]) / from_int(2)).collect()
    }

    pub fn intersection_measure(&self, other: &Region) -> Rat {
        assert_eq!(self.n, other.n);
        let mut v = from_int(1);
        for i in 0..self.n {
            let lo = self.lo[i].max(other.lo[i]);
            let hi = self.hi[i].min(other.hi[i]);
            if lo >= hi {
                return Rat::zero();
            }
            v *= hi - lo;
        }
        v
    }

    pub fn contains_region_ae(&self, other: &Region) -> bool {
        self.intersection_measure(other) == other.measure()
    }

    /// Smallest cube (equal sides) containing both regions.
    pub fn bounding_cube(&self, other: &Region) -> Region {
        assert_eq!(self.n, other.n);
        let mut lo = [Rat::zero(); MAX_DIM];
        let mut hi = [Rat::zero(); MAX_DIM];
        let mut side = Rat::zero();
        for i in 0..self.n {
            lo[i] = self.lo[i].min(other.lo[i]);
            hi[i] = self.hi[i].max(other.hi[i]);
            side = side.max(hi[i] - lo[i]);
        }
        for i in 0..self.n {
            hi[i] = lo[i] + side;
        }
        Region { n: self.n, lo, hi }
    }
}

/// Exact Lebesgue measure of `r ∩ cell`.
pub fn overlap_measure(r: &Region, cell: &Region) -> Rat {
    r.intersection_measure(cell)
}

/// `cube_geometry`: exact corner, side and volume of a dyadic cube.
pub fn cube_geometry(c: &DyadicCube) -> (Vec<Rat>, Rat, Rat) {
    (c.corner(), c.side(), c.volume())
}

/// Covering construction: a shifted-grid cube `R ⊇ Q` with `|R| ≤ 6^n |Q|`.
///
/// The grid scale is the one with `2^{-k} ∈ (2ℓ, 4ℓ]`; the offset is found by
/// exhaustive search over `{0,1,2}^n` (at most two of the three offset
/// lattices per axis can cut an interval shorter than half their spacing).
pub fn cover_cube(q: &Region) -> Result<(Vec<u8>, ShiftedCube)> {
    if !q.is_cube() {
        return Err(Error::InvalidMesh("cover_cube needs an axis-aligned cube".into()));
    }
    let len = q.side(0);
    // 2^{-k} in (2ℓ, 4ℓ]: smallest power of two > 2ℓ, i.e. <= 4ℓ.
    let mut k = 0i32;
    while pow2(-k) <= from_int(2) * len {
        k -= 1;
    }
    while pow2(-(k + 1)) > from_int(2) * len {
        k += 1;
    }
    let side = pow2(-k);
    debug_assert!(side > from_int(2) * len && side <= from_int(4) * len);
    let mut choice = [0u8; MAX_DIM];
    let mut index = [0i64; MAX_DIM];
    for axis in 0..q.n {
        let mut found = false;
        for a in 0..3u8 {
            // Interval fits iff the grid point at/below lo also clears hi.
            let t = q.lo[axis] / side - rat(a as i128, 3);
            let m = floor_int(t);
            let lo = side * (from_int(m) + rat(a as i128, 3));
            if lo + side >= q.hi[axis] {
                choice[axis] = a;
                index[axis] = i64::try_from(m).expect("grid index out of range");
                found = true;
                break;
            }
        }
        if !found {
            // At most two of the three offset lattices can cut an interval
            // shorter than half their spacing; reaching here is a bug.
            unreachable!("no covering offset at scale {k}");
        }
    }
    let cube = ShiftedCube::new(k, &index[..q.n], &choice[..q.n]);
    debug_assert!(cube.region().contains_region_ae(q));
    Ok((choice[..q.n].to_vec(), cube))
}

/// Generator descriptors for `synthesize`.
#[derive(Debug, Clone)]
pub enum Generator {
    /// Indicator of a region (must sit inside the domain).
    Indicator(Region),
    /// Indicator of the dyadic cube `Q_{j,m}`.
    DyadicIndicator { j: i32, m: Vec<i64> },
    /// Seeded random step function: a random sub-box gets i.i.d. values.
    RandomStep { seed: u64, lo: f64, hi: f64 },
    /// Gaussian bump sampled at cell centers.
    GaussianBump { center: Vec<f64>, width: f64, amplitude: f64 },
    /// `Σ coeffs_i · χ` over unit cubes at the given integer offsets.
    SumOfShiftedIndicators { offsets: Vec<Vec<i64>>, coeffs: Vec<f64> },
}

/// Real piecewise-constant function on the uniform dyadic mesh of cell side
/// `2^{-J}` over the domain `[-2^L, 2^L)^n`, zero outside the domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshFunction {
    n: usize,
    #[serde(rename = "L")]
    l_exp: i32,
    #[serde(rename = "J")]
    j_exp: i32,
    values: Vec<f64>,
}

impl MeshFunction {
    pub fn zero(n: usize, l_exp: i32, j_exp: i32) -> Result<Self> {
        if n == 0 || n > MAX_DIM {
            return Err(Error::InvalidMesh(format!("dimension {n}")));
        }
        if j_exp < -l_exp {
            return Err(Error::InvalidMesh(format!("J = {j_exp} < -L = {}", -l_exp)));
        }
        let width = Self::axis_cells(l_exp, j_exp)?;
        let len = width.checked_pow(n as u32).ok_or_else(|| {
            Error::InvalidMesh("mesh too large".into())
        })?;
        Ok(MeshFunction { n, l_exp, j_exp, values: vec![0.0; len] })
    }

    fn axis_cells(l_exp: i32, j_exp: i32) -> Result<usize> {
        let e = l_exp + j_exp + 1;
        if !(0..=26).contains(&e) {
            return Err(Error::InvalidMesh(format!("2^{e} cells per axis")));
        }
        Ok(1usize << e)
    }

    pub fn from_values(n: usize, l_exp: i32, j_exp: i32, values: Vec<f64>) -> Result<Self> {
        let mut f = Self::zero(n, l_exp, j_exp)?;
        if values.len() != f.values.len() {
            return Err(Error::InvalidMesh(format!(
                "expected {} values, got {}",
                f.values.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidMesh("non-finite value".into()));
        }
        f.values = values;
        Ok(f)
    }

    pub fn synthesize(n: usize, l_exp: i32, j_exp: i32, gen: &Generator) -> Result<Self> {
        let mut f = Self::zero(n, l_exp, j_exp)?;
        match gen {
            Generator::Indicator(region) => {
                if region.n != n {
                    return Err(Error::InvalidMesh("generator dimension mismatch".into()));
                }
                if !f.domain().contains_region_ae(region) {
                    return Err(Error::OutsideDomain(format!("{region:?}")));
                }
                f.add_indicator(region, 1.0);
            }
            Generator::DyadicIndicator { j, m } => {
                let cube = DyadicCube::new(*j, m);
                if cube.n != n {
                    return Err(Error::InvalidMesh("generator dimension mismatch".into()));
                }
                let region = cube.region();
                if !f.domain().contains_region_ae(&region) {
                    return Err(Error::OutsideDomain(format!("{cube:?}")));
                }
                f.add_indicator(&region, 1.0);
            }
            Generator::RandomStep { seed, lo, hi } => {
                if !lo.is_finite() || !hi.is_finite() || lo >= hi {
                    return Err(Error::InvalidMesh("bad value range".into()));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let w = f.cells_per_axis();
                // Random sub-box, then i.i.d. cell values on it.
                let mut lo_idx = [0usize; MAX_DIM];
                let mut hi_idx = [0usize; MAX_DIM];
                for axis in 0..n {
                    let a = rng.gen_range(0..w);
                    let b = rng.gen_range(0..w);
                    lo_idx[axis] = a.min(b);
                    hi_idx[axis] = a.max(b) + 1;
                }
                let idx = [0usize; MAX_DIM];
                f.for_each_box(&lo_idx, &hi_idx, &mut idx.clone(), |f, cell| {
                    let v = rng.gen_range(*lo..*hi);
                    let flat = f.flat_index(cell);
                    f.values[flat] = v;
                });
            }
            Generator::GaussianBump { center, width, amplitude } => {
                if center.len() != n || !width.is_finite() || *width <= 0.0 || !amplitude.is_finite()
                {
                    return Err(Error::InvalidMesh("bad bump parameters".into()));
                }
                let w = f.cells_per_axis();
                let mut cell = [0usize; MAX_DIM];
                loop {
                    let mut d2 = 0.0;
                    for axis in 0..n {
                        let c = rat::to_f64(f.cell_center(axis, cell[axis]));
                        d2 += (c - center[axis]).powi(2);
                    }
                    let flat = f.flat_index(&cell);
                    f.values[flat] = amplitude * (-d2 / (width * width)).exp();
                    if !increment(&mut cell, n, w) {
                        break;
                    }
                }
            }
            Generator::SumOfShiftedIndicators { offsets, coeffs } => {
                if offsets.len() != coeffs.len() {
                    return Err(Error::InvalidMesh("offsets/coeffs length mismatch".into()));
                }
                for (off, &c) in offsets.iter().zip(coeffs) {
                    if !c.is_finite() {
                        return Err(Error::InvalidMesh("non-finite coefficient".into()));
                    }
                    if off.len() != n {
                        return Err(Error::InvalidMesh("generator dimension mismatch".into()));
                    }
                    let lo: Vec<Rat> = off.iter().map(|&o| from_int(o as i128)).collect();
                    let hi: Vec<Rat> = lo.iter().map(|l| *l + from_int(1)).collect();
                    let region = Region::new(&lo, &hi)?;
                    if !f.domain().contains_region_ae(&region) {
                        return Err(Error::OutsideDomain(format!("unit cube at {off:?}")));
                    }
                    f.add_indicator(&region, c);
                }
            }
        }
        Ok(f)
    }

    fn add_indicator(&mut self, region: &Region, coeff: f64) {
        let cellvol = self.cell_volume();
        let (lo, hi) = self.index_box(region);
        let mut cell = lo;
        loop {
            let cr = self.cell_region(&cell);
            let ov = overlap_measure(region, &cr);
            if ov == cr.measure() {
                let flat = self.flat_index(&cell);
                self.values[flat] += coeff;
            } else if !ov.is_zero() {
                // Regions are expected to be mesh-aligned for exactness; a
                // partial cell means the caller gave a non-aligned region.
                // Project by area fraction so the construction stays usable.
                let frac = rat::to_f64(ov / cellvol);
                let flat = self.flat_index(&cell);
                self.values[flat] += coeff * frac;
            }
            if !increment_box(&mut cell, self.n, &lo, &hi) {
                break;
            }
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn l_exp(&self) -> i32 {
        self.l_exp
    }

    pub fn j_exp(&self) -> i32 {
        self.j_exp
    }

    pub fn cells_per_axis(&self) -> usize {
        1usize << (self.l_exp + self.j_exp + 1)
    }

    pub fn cell_side(&self) -> Rat {
        pow2(-self.j_exp)
    }

    pub fn cell_volume(&self) -> Rat {
        let mut v = from_int(1);
        for _ in 0..self.n {
            v *= self.cell_side();
        }
        v
    }

    pub fn domain(&self) -> Region {
        let mut lo = [Rat::zero(); MAX_DIM];
        let mut hi = [Rat::zero(); MAX_DIM];
        for i in 0..self.n {
            lo[i] = -pow2(self.l_exp);
            hi[i] = pow2(self.l_exp);
        }
        Region { n: self.n, lo, hi }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn flat_index(&self, cell: &[usize]) -> usize {
        let w = self.cells_per_axis();
        match self.n {
            1 => cell[0],
            _ => cell[0] * w + cell[1],
        }
    }

    pub fn cell_of_flat(&self, flat: usize) -> [usize; MAX_DIM] {
        let w = self.cells_per_axis();
        match self.n {
            1 => [flat, 0],
            _ => [flat / w, flat % w],
        }
    }

    pub fn get(&self, cell: &[usize]) -> f64 {
        self.values[self.flat_index(cell)]
    }

    pub fn set(&mut self, cell: &[usize], v: f64) {
        let i = self.flat_index(cell);
        self.values[i] = v;
    }

    /// Left endpoint of cell `i` along `axis`.
    pub fn cell_lo(&self, _axis: usize, i: usize) -> Rat {
        -pow2(self.l_exp) + self.cell_side() * from_int(i as i128)
    }

    pub fn cell_center(&self, axis: usize, i: usize) -> Rat {
        self.cell_lo(axis, i) + self.cell_side() / from_int(2)
    }

    pub fn cell_region(&self, cell: &[usize]) -> Region {
        let mut lo = [Rat::zero(); MAX_DIM];
        let mut hi = [Rat::zero(); MAX_DIM];
        for axis in 0..self.n {
            lo[axis] = self.cell_lo(axis, cell[axis]);
            hi[axis] = lo[axis] + self.cell_side();
        }
        Region { n: self.n, lo, hi }
    }

    /// Index of the cell containing `x`, if inside the domain.
    pub fn locate(&self, x: &[Rat]) -> Option<[usize; MAX_DIM]> {
        let mut cell = [0usize; MAX_DIM];
        for axis in 0..self.n {
            let t = (x[axis] + pow2(self.l_exp)) / self.cell_side();
            let i = floor_int(t);
            if i < 0 || i as usize >= self.cells_per_axis() {
                return None;
            }
            cell[axis] = i as usize;
        }
        Some(cell)
    }

    /// Per-axis exact overlap lengths of `region` with each cell row in
    /// range: `(index, length)` with `length = cell side` except possibly at
    /// the two ends. Rational work is O(1) per axis, not per cell.
    pub fn axis_overlaps(&self, region: &Region, axis: usize) -> Vec<(usize, Rat)> {
        let (lo, hi) = self.index_box(region);
        let mut out = Vec::with_capacity(hi[axis].saturating_sub(lo[axis]));
        let h = self.cell_side();
        for i in lo[axis]..hi[axis] {
            let c_lo = self.cell_lo(axis, i);
            let c_hi = c_lo + h;
            let a = region.lo[axis].max(c_lo);
            let b = region.hi[axis].min(c_hi);
            if a < b {
                out.push((i, b - a));
            }
        }
        out
    }

    /// Cell index box `[lo, hi)` per axis covering `region ∩ domain`.
    pub fn index_box(&self, region: &Region) -> ([usize; MAX_DIM], [usize; MAX_DIM]) {
        let w = self.cells_per_axis() as i128;
        let mut lo = [0usize; MAX_DIM];
        let mut hi = [0usize; MAX_DIM];
        for axis in 0..self.n {
            let t_lo = (region.lo[axis] + pow2(self.l_exp)) / self.cell_side();
            let t_hi = (region.hi[axis] + pow2(self.l_exp)) / self.cell_side();
            let a = floor_int(t_lo).clamp(0, w);
            let b = ceil_int(t_hi).clamp(0, w);
            lo[axis] = a as usize;
            hi[axis] = b.max(a) as usize;
        }
        (lo, hi)
    }

    fn for_each_box<F: FnMut(&mut Self, &[usize])>(
        &mut self,
        lo: &[usize; MAX_DIM],
        hi: &[usize; MAX_DIM],
        cell: &mut [usize; MAX_DIM],
        mut body: F,
    ) {
        *cell = *lo;
        if (0..self.n).any(|a| lo[a] >= hi[a]) {
            return;
        }
        loop {
            body(self, &cell.clone());
            if !increment_box(cell, self.n, lo, hi) {
                break;
            }
        }
    }

    /// Flat indices of nonzero cells.
    pub fn support_cells(&self) -> Vec<usize> {
        self.values
            .iter()
            .enumerate()
            .filter_map(|(i, &v)| (v != 0.0).then_some(i))
            .collect()
    }

    /// Cell-index bounding box of the support, if nonempty.
    pub fn support_box(&self) -> Option<([usize; MAX_DIM], [usize; MAX_DIM])> {
        let mut lo = [usize::MAX; MAX_DIM];
        let mut hi = [0usize; MAX_DIM];
        let mut any = false;
        for (flat, &v) in self.values.iter().enumerate() {
            if v != 0.0 {
                any = true;
                let c = self.cell_of_flat(flat);
                for axis in 0..self.n {
                    lo[axis] = lo[axis].min(c[axis]);
                    hi[axis] = hi[axis].max(c[axis] + 1);
                }
            }
        }
        any.then_some((lo, hi))
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> MeshFunction {
        let mut out = self.clone();
        for v in &mut out.values {
            *v = f(*v);
        }
        out
    }

    pub fn zip(&self, other: &MeshFunction, f: impl Fn(f64, f64) -> f64) -> Result<MeshFunction> {
        if self.n != other.n || self.l_exp != other.l_exp || self.j_exp != other.j_exp {
            return Err(Error::MismatchedMesh);
        }
        let mut out = self.clone();
        for (v, &w) in out.values.iter_mut().zip(&other.values) {
            *v = f(*v, w);
        }
        Ok(out)
    }

    pub fn abs(&self) -> MeshFunction {
        self.map(f64::abs)
    }

    pub fn scale(&self, c: f64) -> MeshFunction {
        self.map(|v| c * v)
    }

    pub fn add(&self, other: &MeshFunction) -> Result<MeshFunction> {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &MeshFunction) -> Result<MeshFunction> {
        self.zip(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &MeshFunction) -> Result<MeshFunction> {
        self.zip(other, |a, b| a * b)
    }

    /// Zero out everything outside `region` (a.e.; region must be mesh aligned
    /// for the restriction to be exact, which all callers guarantee).
    pub fn restrict(&self, region: &Region) -> MeshFunction {
        let mut out = MeshFunction::zero(self.n, self.l_exp, self.j_exp).unwrap();
        let (lo, hi) = self.index_box(region);
        let mut cell = lo;
        if (0..self.n).any(|a| lo[a] >= hi[a]) {
            return out;
        }
        loop {
            let cr = self.cell_region(&cell);
            if region.contains_region_ae(&cr) {
                let flat = self.flat_index(&cell);
                out.values[flat] = self.values[flat];
            }
            if !increment_box(&mut cell, self.n, &lo, &hi) {
                break;
            }
        }
        out
    }

    /// `∫ f` (exact measures, compensated f64 sum).
    pub fn integral(&self) -> f64 {
        let vol = rat::to_f64(self.cell_volume());
        let mut s = rat::KahanSum::new();
        for &v in &self.values {
            if v != 0.0 {
                s.add(v);
            }
        }
        s.total() * vol
    }

    pub fn l1_norm(&self) -> f64 {
        let vol = rat::to_f64(self.cell_volume());
        let mut s = rat::KahanSum::new();
        for &v in &self.values {
            if v != 0.0 {
                s.add(v.abs());
            }
        }
        s.total() * vol
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Re-embed on a larger domain `[-2^l_new, 2^l_new)^n` (same mesh cells).
    pub fn embed(&self, l_new: i32) -> Result<MeshFunction> {
        if l_new < self.l_exp {
            return Err(Error::InvalidMesh("embed must not shrink the domain".into()));
        }
        if l_new == self.l_exp {
            return Ok(self.clone());
        }
        let mut out = MeshFunction::zero(self.n, l_new, self.j_exp)?;
        let shift = (1usize << (l_new + self.j_exp)) - (1usize << (self.l_exp + self.j_exp));
        for (flat, &v) in self.values.iter().enumerate() {
            if v != 0.0 {
                let c = self.cell_of_flat(flat);
                let mut nc = [0usize; MAX_DIM];
                for axis in 0..self.n {
                    nc[axis] = c[axis] + shift;
                }
                let nf = out.flat_index(&nc);
                out.values[nf] = v;
            }
        }
        Ok(out)
    }

    /// Subdivide each cell `2^extra` times per axis (same function).
    pub fn refine(&self, extra: u32) -> Result<MeshFunction> {
        if extra == 0 {
            return Ok(self.clone());
        }
        let mut out = MeshFunction::zero(self.n, self.l_exp, self.j_exp + extra as i32)?;
        let k = 1usize << extra;
        for (flat, &v) in self.values.iter().enumerate() {
            if v != 0.0 {
                let c = self.cell_of_flat(flat);
                let mut sub = [0usize; MAX_DIM];
                loop {
                    let mut nc = [0usize; MAX_DIM];
                    for axis in 0..self.n {
                        nc[axis] = c[axis] * k + sub[axis];
                    }
                    let nf = out.flat_index(&nc);
                    out.values[nf] = v;
                    if !increment(&mut sub, self.n, k) {
                        break;
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({
            "n": self.n,
            "L": self.l_exp,
            "J": self.j_exp,
            "values": self.values,
        })
        .to_string()
    }

    pub fn from_json(s: &str) -> Result<MeshFunction> {
        let v: serde_json::Value =
            serde_json::from_str(s).map_err(|e| Error::Input(e.to_string()))?;
        let n = v["n"].as_u64().ok_or_else(|| Error::Input("missing n".into()))? as usize;
        let l = v["L"].as_i64().ok_or_else(|| Error::Input("missing L".into()))? as i32;
        let j = v["J"].as_i64().ok_or_else(|| Error::Input("missing J".into()))? as i32;
        let vals = v["values"]
            .as_array()
            .ok_or_else(|| Error::Input("missing values".into()))?
            .iter()
            .map(|x| x.as_f64().ok_or_else(|| Error::Input("non-numeric value".into())))
            .collect::<Result<Vec<f64>>>()?;
        MeshFunction::from_values(n, l, j, vals)
    }
}

pub fn increment(cell: &mut [usize; MAX_DIM], n: usize, width: usize) -> bool {
    for axis in (0..n).rev() {
        cell[axis] += 1;
        if cell[axis] < width {
            return true;
        }
        cell[axis] = 0;
    }
    false
}

pub fn increment_box(
    cell: &mut [usize; MAX_DIM],
    n: usize,
    lo: &[usize; MAX_DIM],
    hi: &[usize; MAX_DIM],
) -> bool {
    for axis in (0..n).rev() {
        cell[axis] += 1;
        if cell[axis] < hi[axis] {
            return true;
        }
        cell[axis] = lo[axis];
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn cube_geometry_examples() {
        let (corner, side, vol) = cube_geometry(&DyadicCube::new(0, &[0]));
        assert_eq!(corner[0], from_int(0));
        assert_eq!(side, from_int(1));
        assert_eq!(vol, from_int(1));

        let (corner, side, vol) = cube_geometry(&DyadicCube::new(1, &[3]));
        assert_eq!(corner[0], rat(3, 2));
        assert_eq!(side, rat(1, 2));
        assert_eq!(vol, rat(1, 2));

        let (corner, side, vol) = cube_geometry(&DyadicCube::new(-2, &[-1, 0]));
        assert_eq!(corner, vec![from_int(-4), from_int(0)]);
        assert_eq!(side, from_int(4));
        assert_eq!(vol, from_int(16));
    }

    #[test]
    fn cover_cube_examples() {
        // Q = [0.3, 0.8): covered at side 2 by the unshifted interval [0, 2).
        let q = Region::interval(rat(3, 10), rat(4, 5)).unwrap();
        let (a, r) = cover_cube(&q).unwrap();
        assert_eq!(a, vec![0]);
        assert_eq!(r.k, -1);
        assert_eq!(r.region().lo[0], from_int(0));
        assert!(r.region().contains_region_ae(&q));
        assert!(r.volume() <= from_int(6) * q.measure());

        let q = Region::interval(from_int(0), from_int(1)).unwrap();
        let (_, r) = cover_cube(&q).unwrap();
        assert!(r.region().contains_region_ae(&q));
        assert!(r.volume() <= from_int(6) * q.measure());
    }

    #[test]
    fn overlap_examples() {
        let cell = Region::interval(from_int(0), from_int(1)).unwrap();
        let r = Region::interval(rat(1, 3), rat(4, 3)).unwrap();
        assert_eq!(overlap_measure(&r, &cell), rat(2, 3));
        let disj = Region::interval(from_int(2), from_int(3)).unwrap();
        assert_eq!(overlap_measure(&disj, &cell), from_int(0));
        let big = Region::interval(from_int(-1), from_int(2)).unwrap();
        assert_eq!(overlap_measure(&big, &cell), from_int(1));
    }

    #[test]
    fn synthesize_indicator() {
        let region = Region::interval(from_int(0), from_int(1)).unwrap();
        let f =
            MeshFunction::synthesize(1, 2, 4, &Generator::Indicator(region)).unwrap();
        let ones = f.values().iter().filter(|&&v| v == 1.0).count();
        assert_eq!(ones, 16);
        assert_eq!(f.values().iter().filter(|&&v| v != 0.0).count(), 16);
    }

    #[test]
    fn synthesize_random_is_deterministic() {
        let g = Generator::RandomStep { seed: 7, lo: -1.0, hi: 1.0 };
        let f1 = MeshFunction::synthesize(1, 2, 4, &g).unwrap();
        let f2 = MeshFunction::synthesize(1, 2, 4, &g).unwrap();
        assert_eq!(f1.values(), f2.values());
    }

    #[test]
    fn synthesize_outside_domain_fails() {
        let region = Region::interval(from_int(3), from_int(5)).unwrap();
        let err = MeshFunction::synthesize(1, 2, 2, &Generator::Indicator(region));
        assert!(matches!(err, Err(Error::OutsideDomain(_))));
    }

    #[test]
    fn far_separated_indicator_sum() {
        let g = Generator::SumOfShiftedIndicators {
            offsets: vec![vec![0], vec![16]],
            coeffs: vec![1.0, 1.0],
        };
        let f = MeshFunction::synthesize(1, 5, 0, &g).unwrap();
        assert_eq!(f.integral(), 2.0);
        let sup = f.support_box().unwrap();
        assert_eq!(sup.1[0] - sup.0[0], 17);
    }

    #[test]
    fn embed_preserves_geometry() {
        let region = Region::interval(from_int(0), from_int(1)).unwrap();
        let f = MeshFunction::synthesize(1, 1, 3, &Generator::Indicator(region)).unwrap();
        let g = f.embed(3).unwrap();
        assert_eq!(g.integral(), f.integral());
        let cell = g.locate(&[rat(1, 2)]).unwrap();
        assert_eq!(g.get(&cell), 1.0);
    }

    #[test]
    fn refine_preserves_values() {
        let region = Region::interval(from_int(0), from_int(1)).unwrap();
        let f = MeshFunction::synthesize(1, 1, 2, &Generator::Indicator(region)).unwrap();
        let g = f.refine(2).unwrap();
        assert_eq!(g.integral(), 1.0);
        assert_eq!(g.cells_per_axis(), 4 * f.cells_per_axis());
    }

    #[test]
    fn json_round_trip_and_length_check() {
        let region = Region::interval(from_int(0), from_int(1)).unwrap();
        let f = MeshFunction::synthesize(1, 1, 2, &Generator::Indicator(region)).unwrap();
        let s = f.to_json();
        let g = MeshFunction::from_json(&s).unwrap();
        assert_eq!(f, g);
        let bad = r#"{"n":1,"L":1,"J":2,"values":[1.0,2.0]}"#;
        assert!(MeshFunction::from_json(bad).is_err());
    }

    fn arb_cube(n: usize) -> impl Strategy<Value = DyadicCube> {
        (-4i32..8, proptest::collection::vec(-64i64..64, n)).prop_map(move |(j, m)| {
            DyadicCube::new(j, &m)
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(500))]

        // Nesting trichotomy: disjoint, or one contains the other.
        #[test]
        fn dyadic_trichotomy(a in arb_cube(1), b in arb_cube(1)) {
            let ra = a.region();
            let rb = b.region();
            let inter = ra.intersection_measure(&rb);
            let nested = a.contains(&b) || b.contains(&a);
            if inter.is_zero() {
                prop_assert!(!nested);
            } else {
                prop_assert!(nested);
            }
        }

        #[test]
        fn dyadic_trichotomy_2d(a in arb_cube(2), b in arb_cube(2)) {
            let inter = a.region().intersection_measure(&b.region());
            let nested = a.contains(&b) || b.contains(&a);
            prop_assert_eq!(inter.is_zero(), !nested);
        }

        // Covering: containment plus the 6^n volume bound, rational cubes.
        #[test]
        fn cover_cube_bound(num in 1i128..200, den in 1i128..100, len_num in 1i128..50, len_den in 1i128..40) {
            let lo = rat(num - 100, den);
            let len = rat(len_num, len_den);
            let q = Region::interval(lo, lo + len).unwrap();
            let (_, r) = cover_cube(&q).unwrap();
            prop_assert!(r.region().contains_region_ae(&q));
            prop_assert!(r.volume() <= from_int(6) * q.measure());
        }

        #[test]
        fn cover_cube_bound_2d(num in -60i128..60, den in 1i128..40, len_num in 1i128..30, len_den in 1i128..20) {
            let lo = rat(num, den);
            let len = rat(len_num, len_den);
            let q = Region::new(&[lo, lo + rat(1,7)], &[lo + len, lo + rat(1,7) + len]).unwrap();
            let (_, r) = cover_cube(&q).unwrap();
            prop_assert!(r.region().contains_region_ae(&q));
            prop_assert!(r.volume() <= from_int(36) * q.measure());
        }

        // Overlap is additive over the cell partition of any region.
        #[test]
        fn overlap_additivity(lo_n in -40i128..40, len_n in 1i128..60) {
            let region = Region::interval(rat(lo_n, 12), rat(lo_n, 12) + rat(len_n, 12)).unwrap();
            let f = MeshFunction::zero(1, 2, 3).unwrap();
            let mut acc = Rat::zero();
            for i in 0..f.cells_per_axis() {
                acc += overlap_measure(&region, &f.cell_region(&[i, 0]));
            }
            let clipped = region.intersection_measure(&f.domain());
            prop_assert_eq!(acc, clipped);
        }
    }
}
