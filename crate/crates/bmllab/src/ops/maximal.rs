//! Maximal operators over the shifted-grid family, at cell resolution.
//!
//! Every value is a supremum over grid cubes *containing the cell*; for the
//! unshifted grid this equals the dyadic maximal function exactly (the
//! function is constant on cells). Coarse scales terminate provably: once
//! `2^{-k} ≥ 2^{L+2}` the restricted content per cube is stable, so means
//! only shrink, and the running bound `‖f‖_{L¹} 2^{kn}` cuts the scan early.

use crate::mesh::{MeshFunction, Region, MAX_DIM};
use crate::rat::{self, from_int, pow2, rat, Rat};
use crate::{Error, Result};
use num_traits::Zero;

/// Prefix-sum tables for O(1) box integrals of `f` and `|f|` over rational
/// boxes (edge cells weighted by their exact overlap fraction).
pub struct MassTable<'a> {
    f: &'a MeshFunction,
    /// prefix[(i, j)] = Σ_{i' < i, j' < j} v; (W+1)^n entries.
    prefix_abs: Vec<f64>,
    prefix_signed: Vec<f64>,
    w: usize,
}

impl<'a> MassTable<'a> {
    pub fn new(f: &'a MeshFunction) -> Self {
        let w = f.cells_per_axis();
        let (prefix_abs, prefix_signed) = match f.n() {
            1 => {
                let mut pa = vec![0.0; w + 1];
                let mut ps = vec![0.0; w + 1];
                for i in 0..w {
                    let v = f.values()[i];
                    pa[i + 1] = pa[i] + v.abs();
                    ps[i + 1] = ps[i] + v;
                }
                (pa, ps)
            }
            _ => {
                let mut pa = vec![0.0; (w + 1) * (w + 1)];
                let mut ps = vec![0.0; (w + 1) * (w + 1)];
                for i in 0..w {
                    for j in 0..w {
                        let v = f.values()[i * w + j];
                        let at = |m: &Vec<f64>, a: usize, b: usize| m[a * (w + 1) + b];
                        let idx = (i + 1) * (w + 1) + (j + 1);
                        pa[idx] =
                            v.abs() + at(&pa, i, j + 1) + at(&pa, i + 1, j) - at(&pa, i, j);
                        ps[idx] = v + at(&ps, i, j + 1) + at(&ps, i + 1, j) - at(&ps, i, j);
                    }
                }
                (pa, ps)
            }
        };
        MassTable { f, prefix_abs, prefix_signed, w }
    }

    /// Split a coordinate into (cell index clamped to [0, W], fraction within
    /// the cell as f64).
    fn split(&self, x: Rat) -> (usize, f64) {
        let t = (x + pow2(self.f.l_exp())) / self.f.cell_side();
        let fl = rat::floor_int(t);
        if fl < 0 {
            return (0, 0.0);
        }
        if fl as usize >= self.w {
            return (self.w, 0.0);
        }
        let frac = rat::to_f64(t - from_int(fl));
        (fl as usize, frac)
    }

    fn corner_value(&self, table: &[f64], i: usize, j: usize, fx: f64, fy: f64, absval: bool) -> f64 {
        let w1 = self.w + 1;
        let at = |a: usize, b: usize| table[a * w1 + b];
        let mut acc = at(i, j);
        let cell = |a: usize, b: usize| -> f64 {
            if a >= self.w || b >= self.w {
                0.0
            } else {
                let v = self.f.values()[a * self.w + b];
                if absval {
                    v.abs()
                } else {
                    v
                }
            }
        };
        if fx > 0.0 && i < self.w {
            acc += fx * (at(i + 1, j) - at(i, j));
        }
        if fy > 0.0 && j < self.w {
            acc += fy * (at(i, j + 1) - at(i, j));
        }
        acc += fx * fy * cell(i, j);
        acc
    }

    fn box_mass(&self, region: &Region, absval: bool) -> f64 {
        let table = if absval { &self.prefix_abs } else { &self.prefix_signed };
        let vol1 = rat::to_f64(self.f.cell_side());
        match self.f.n() {
            1 => {
                let (i1, f1) = self.split(region.lo[0]);
                let (i2, f2) = self.split(region.hi[0]);
                let cell = |a: usize| -> f64 {
                    if a >= self.w {
                        0.0
                    } else if absval {
                        self.f.values()[a].abs()
                    } else {
                        self.f.values()[a]
                    }
                };
                let s = (table[i2] + f2 * cell(i2)) - (table[i1] + f1 * cell(i1));
                s * vol1
            }
            _ => {
                let (i1, fx1) = self.split(region.lo[0]);
                let (i2, fx2) = self.split(region.hi[0]);
                let (j1, fy1) = self.split(region.lo[1]);
                let (j2, fy2) = self.split(region.hi[1]);
                let s = self.corner_value(table, i2, j2, fx2, fy2, absval)
                    - self.corner_value(table, i1, j2, fx1, fy2, absval)
                    - self.corner_value(table, i2, j1, fx2, fy1, absval)
                    + self.corner_value(table, i1, j1, fx1, fy1, absval);
                s * vol1 * vol1
            }
        }
    }

    /// `∫_region |f|`.
    pub fn abs_mass(&self, region: &Region) -> f64 {
        self.box_mass(region, true)
    }

    /// `∫_region f`.
    pub fn signed_mass(&self, region: &Region) -> f64 {
        self.box_mass(region, false)
    }
}

/// The grid cube at scale `k`, offset `a`, containing the whole cell, if any.
fn containing_cube(
    f: &MeshFunction,
    cell: &[usize; MAX_DIM],
    k: i32,
    a: &[u8],
) -> Option<Region> {
    let side = pow2(-k);
    let mut lo = [Rat::zero(); MAX_DIM];
    let mut hi = [Rat::zero(); MAX_DIM];
    for axis in 0..f.n() {
        let c_lo = f.cell_lo(axis, cell[axis]);
        let c_hi = c_lo + f.cell_side();
        let shift = rat(a[axis] as i128, 3);
        let m = rat::floor_int(c_lo / side - shift);
        let q_lo = side * (from_int(m) + shift);
        let q_hi = q_lo + side;
        if q_hi < c_hi {
            return None; // cell straddles a grid hyperplane at this scale
        }
        lo[axis] = q_lo;
        hi[axis] = q_hi;
    }
    Some(Region { n: f.n(), lo, hi })
}

/// `M_{D_ā} f` at cell resolution: per cell, the sup of `(1/|Q|)∫_Q |f|`
/// over grid cubes `Q ⊇ cell` across all scales.
pub fn maximal_dyadic(f: &MeshFunction, a: &[u8]) -> MeshFunction {
    weighted_maximal(f, a, 0.0)
}

/// Fractional maximal operator `M_α`: sup of `|Q|^{α/n-1} ∫_Q |f|` over the
/// same family.
pub fn fractional_maximal(f: &MeshFunction, alpha: f64) -> Result<MeshFunction> {
    if !(alpha > 0.0) || alpha >= f.n() as f64 {
        return Err(Error::UnsupportedExponents(format!("α = {alpha} outside (0, n)")));
    }
    Ok(weighted_maximal(f, &vec![0u8; f.n()], alpha))
}

/// Shared kernel: sup over scales of `|Q|^{α/n - 1} ∫_Q |f|` (α = 0 gives
/// the plain maximal function).
fn weighted_maximal(f: &MeshFunction, a: &[u8], alpha: f64) -> MeshFunction {
    let mut out = MeshFunction::zero(f.n(), f.l_exp(), f.j_exp()).unwrap();
    if f.is_zero() {
        return out;
    }
    let table = MassTable::new(f);
    let l1 = f.l1_norm();
    let n = f.n() as f64;
    let k_stop = -(f.l_exp() + 2);
    let w = f.cells_per_axis();
    let mut cell = [0usize; MAX_DIM];
    loop {
        let mut best = 0.0f64;
        let mut k = f.j_exp();
        while k >= k_stop {
            // Largest reachable value at this scale; coarser scales shrink it.
            let cap = l1 * ((k as f64) * (n - alpha)).exp2();
            if cap <= best {
                break;
            }
            if let Some(q) = containing_cube(f, &cell, k, a) {
                let mass = table.abs_mass(&q);
                let weight = ((k as f64) * (n - alpha)).exp2(); // |Q|^{α/n-1}
                best = best.max(mass * weight);
            }
            k -= 1;
        }
        let flat = out.flat_index(&cell);
        out.values_mut()[flat] = best;
        if !crate::mesh::increment(&mut cell, f.n(), w) {
            break;
        }
    }
    out
}

/// Cell-wise max of `M_{D_ā} f` over all `3^n` offset grids.
pub fn maximal_over_grids(f: &MeshFunction) -> MeshFunction {
    let mut out = MeshFunction::zero(f.n(), f.l_exp(), f.j_exp()).unwrap();
    let offsets: Vec<Vec<u8>> = match f.n() {
        1 => (0..3u8).map(|a| vec![a]).collect(),
        _ => {
            let mut v = Vec::new();
            for a0 in 0..3u8 {
                for a1 in 0..3u8 {
                    v.push(vec![a0, a1]);
                }
            }
            v
        }
    };
    for a in offsets {
        let m = maximal_dyadic(f, &a);
        out = out.zip(&m, f64::max).unwrap();
    }
    out
}

/// Two-sided discretization of the true cube maximal operator:
/// `lower ≤ Mf ≤ upper = 6^n · lower` pointwise on cells (lower because each
/// grid cube is a cube; upper by the covering construction).
pub fn maximal_sandwich(f: &MeshFunction) -> (MeshFunction, MeshFunction) {
    let lower = maximal_over_grids(f);
    let factor = 6.0f64.powi(f.n() as i32);
    let upper = lower.scale(factor);
    (lower, upper)
}

/// Powered maximal operator `M_η f = M(|f|^η)^{1/η}` over a grid.
pub fn powered_maximal(f: &MeshFunction, eta: f64, a: &[u8]) -> Result<MeshFunction> {
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(Error::UnsupportedExponents(format!("η = {eta}")));
    }
    let powered = f.map(|v| v.abs().powf(eta));
    Ok(maximal_dyadic(&powered, a).map(|v| v.powf(1.0 / eta)))
}

use super::oscillation::cube_oscillation;

/// Fefferman-Stein sharp maximal function at cell resolution: sup over
/// shifted-grid cubes containing the cell of the mean oscillation.
///
/// Cube-centric: each cube's oscillation is computed once and assigned to
/// the cells it fully contains. The downward scan stops once the sound cap
/// `2‖f‖₁ 2^{kn}` falls below every cell's running sup.
pub fn sharp_maximal(f: &MeshFunction) -> MeshFunction {
    let mut out = MeshFunction::zero(f.n(), f.l_exp(), f.j_exp()).unwrap();
    if f.is_zero() {
        return out;
    }
    let table = MassTable::new(f);
    let l1 = f.l1_norm();
    let n = f.n() as f64;
    let offsets: Vec<Vec<u8>> = match f.n() {
        1 => (0..3u8).map(|a| vec![a]).collect(),
        _ => {
            let mut v = Vec::new();
            for a0 in 0..3u8 {
                for a1 in 0..3u8 {
                    v.push(vec![a0, a1]);
                }
            }
            v
        }
    };
    let w = f.cells_per_axis();
    let k_star = -(f.l_exp() + 2);
    let h = f.cell_side();
    let origin = pow2(f.l_exp());
    let mut k = f.j_exp();
    loop {
        for a in &offsets {
            super::oscillation::for_domain_cubes(f, k, a, |q| {
                // Cells fully inside the cube.
                let mut lo_idx = [0usize; MAX_DIM];
                let mut hi_idx = [0usize; MAX_DIM];
                let mut empty = false;
                for axis in 0..f.n() {
                    let a_i = rat::ceil_int((q.lo[axis] + origin) / h).max(0);
                    let b_i = rat::floor_int((q.hi[axis] + origin) / h).min(w as i128);
                    if a_i >= b_i {
                        empty = true;
                        break;
                    }
                    lo_idx[axis] = a_i as usize;
                    hi_idx[axis] = b_i as usize;
                }
                if empty {
                    return;
                }
                let osc = cube_oscillation(f, &table, q);
                let mut cell = lo_idx;
                loop {
                    let flat = out.flat_index(&cell);
                    if osc > out.values()[flat] {
                        out.values_mut()[flat] = osc;
                    }
                    if !crate::mesh::increment_box(&mut cell, f.n(), &lo_idx, &hi_idx) {
                        break;
                    }
                }
            });
        }
        // Coarser cubes can only reach 2‖f‖₁ 2^{kn}; stop once that is
        // below every cell's running sup.
        let cap = 2.0 * l1 * (((k - 1) as f64) * n).exp2();
        let min_best = out.values().iter().fold(f64::INFINITY, |m, &v| m.min(v));
        if (cap <= min_best && min_best > 0.0) || k < k_star - 80 {
            break;
        }
        k -= 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Generator;
    use crate::rat::from_int;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn chi01(l: i32, j: i32) -> MeshFunction {
        MeshFunction::synthesize(1, l, j, &Generator::DyadicIndicator { j: 0, m: vec![0] })
            .unwrap()
    }

    #[test]
    fn mass_table_matches_direct_sums() {
        let f = MeshFunction::synthesize(
            1,
            2,
            3,
            &Generator::RandomStep { seed: 3, lo: -1.0, hi: 1.0 },
        )
        .unwrap();
        let t = MassTable::new(&f);
        let r = Region::interval(rat(-5, 3), rat(7, 4)).unwrap();
        let direct: f64 = (0..f.cells_per_axis())
            .map(|i| {
                let ov = crate::mesh::overlap_measure(&r, &f.cell_region(&[i, 0]));
                f.values()[i] * rat::to_f64(ov)
            })
            .sum();
        assert!((t.signed_mass(&r) - direct).abs() <= 1e-12);
    }

    #[test]
    fn mass_table_matches_direct_sums_2d() {
        let f = MeshFunction::synthesize(
            2,
            1,
            2,
            &Generator::RandomStep { seed: 5, lo: 0.0, hi: 2.0 },
        )
        .unwrap();
        let t = MassTable::new(&f);
        let r = Region::new(&[rat(-5, 3), rat(-1, 2)], &[rat(7, 6), rat(9, 5)]).unwrap();
        let mut direct = 0.0;
        for i in 0..f.cells_per_axis() {
            for j in 0..f.cells_per_axis() {
                let ov = crate::mesh::overlap_measure(&r, &f.cell_region(&[i, j]));
                direct += f.values()[i * f.cells_per_axis() + j] * rat::to_f64(ov);
            }
        }
        assert!((t.signed_mass(&r) - direct).abs() <= 1e-12, "{} vs {direct}", t.signed_mass(&r));
    }

    #[test]
    fn maximal_of_unit_indicator() {
        // M_D χ_[0,1): 1 on [0,1); 1/2 on [1,2) (cube [0,2)); 1/4 on [2,4).
        let f = chi01(2, 3);
        let m = maximal_dyadic(&f, &[0]);
        let at = |x: f64| {
            let cell = m.locate(&[crate::rat::from_f64_exact(x).unwrap()]).unwrap();
            m.get(&cell)
        };
        assert_eq!(at(0.5), 1.0);
        assert_eq!(at(1.5), 0.5);
        assert_eq!(at(2.5), 0.25);
        assert_eq!(at(3.5), 0.25);
        // f ≥ 0 ⇒ M_D f ≥ f cell-wise.
        for (mv, fv) in m.values().iter().zip(f.values()) {
            assert!(mv >= fv);
        }
        let zero = MeshFunction::zero(1, 2, 3).unwrap();
        assert!(maximal_dyadic(&zero, &[0]).is_zero());
    }

    #[test]
    fn sandwich_properties() {
        let f = chi01(2, 3);
        let (lower, upper) = maximal_sandwich(&f);
        let cell = lower.locate(&[rat(3, 2)]).unwrap();
        assert!(lower.get(&cell) >= 0.5);
        for (l, u) in lower.values().iter().zip(upper.values()) {
            assert_eq!(*u, 6.0 * l);
        }
        // Constant on the whole domain: lower = the constant.
        let c = MeshFunction::zero(1, 1, 2).unwrap().map(|_| 0.7);
        let (lower, _) = maximal_sandwich(&c);
        for v in lower.values() {
            assert!((v - 0.7).abs() <= 1e-12);
        }
    }

    /// Random-cube probe: means over cubes containing a cell stay within
    /// the sandwich.
    #[test]
    fn sandwich_bounds_random_cube_means() {
        let f = MeshFunction::synthesize(
            1,
            2,
            3,
            &Generator::RandomStep { seed: 8, lo: 0.0, hi: 2.0 },
        )
        .unwrap();
        let (lower, upper) = maximal_sandwich(&f);
        let table = MassTable::new(&f);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..500 {
            let i = rng.gen_range(0..f.cells_per_axis());
            let c_lo = f.cell_lo(0, i);
            let c_hi = c_lo + f.cell_side();
            // Random rational cube containing the cell.
            let pad_l = rat(rng.gen_range(0..40) as i128, 8);
            let pad_r = rat(rng.gen_range(0..40) as i128, 8);
            let q = Region::interval(c_lo - pad_l, c_hi + pad_r).unwrap();
            let mean = table.abs_mass(&q) / rat::to_f64(q.measure());
            assert!(mean <= upper.values()[i] + 1e-12);
            assert!(lower.values()[i] <= 6.0 * mean / 6.0 + upper.values()[i]); // lower finite sanity
        }
    }

    #[test]
    fn powered_maximal_properties() {
        let f = MeshFunction::synthesize(
            1,
            2,
            3,
            &Generator::RandomStep { seed: 11, lo: -1.0, hi: 1.0 },
        )
        .unwrap();
        let m1 = powered_maximal(&f, 1.0, &[0]).unwrap();
        let md = maximal_dyadic(&f, &[0]);
        for (a, b) in m1.values().iter().zip(md.values()) {
            assert!((a - b).abs() <= 1e-12);
        }
        // Monotone in η (power-mean inequality).
        let m2 = powered_maximal(&f, 2.0, &[0]).unwrap();
        for (a, b) in m1.values().iter().zip(m2.values()) {
            assert!(*a <= b * (1.0 + 1e-12));
        }
    }

    #[test]
    fn fractional_maximal_of_indicator() {
        // M_α χ_[0,1) at x ∈ [0,1), α = 1/2: sup |Q|^{-1/2}|Q ∩ [0,1)| = 1.
        let f = chi01(2, 4);
        let m = fractional_maximal(&f, 0.5).unwrap();
        let cell = m.locate(&[rat(1, 2)]).unwrap();
        assert!((m.get(&cell) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn maximal_is_sublinear() {
        let f = MeshFunction::synthesize(
            1,
            2,
            3,
            &Generator::RandomStep { seed: 13, lo: -1.0, hi: 1.0 },
        )
        .unwrap();
        let g = MeshFunction::synthesize(
            1,
            2,
            3,
            &Generator::RandomStep { seed: 14, lo: -1.0, hi: 1.0 },
        )
        .unwrap();
        let sum = f.add(&g).unwrap();
        let m_sum = maximal_dyadic(&sum, &[0]);
        let bound = maximal_dyadic(&f, &[0]).add(&maximal_dyadic(&g, &[0])).unwrap();
        for (a, b) in m_sum.values().iter().zip(bound.values()) {
            assert!(*a <= b * (1.0 + 1e-12));
        }
    }

    #[test]
    fn sharp_maximal_examples() {
        // Constant: zero oscillation against interior cubes, but edge cubes
        // see the outside zeros, so the sup is positive yet ≤ 2·M bound.
        let f = chi01(2, 3);
        let s = sharp_maximal(&f);
        // Cube [0,2) around a cell in [0,1): oscillation of χ is 1/2.
        let cell = s.locate(&[rat(1, 2)]).unwrap();
        assert!(s.get(&cell) >= 0.5 - 1e-12);
        // M#f ≤ 2 Mf cell-wise.
        let (_, upper) = maximal_sandwich(&f);
        let m = maximal_over_grids(&f);
        let _ = upper;
        for (sv, mv) in s.values().iter().zip(m.values()) {
            assert!(*sv <= 2.0 * mv + 1e-12);
        }
        let zero = MeshFunction::zero(1, 2, 3).unwrap();
        assert!(sharp_maximal(&zero).is_zero());
    }

    /// Cell-centric brute force for the sharp maximal function: per cell,
    /// walk the containing cubes across offsets and scales.
    fn sharp_brute(f: &MeshFunction, depth: i32) -> MeshFunction {
        let table = MassTable::new(f);
        let offsets: Vec<Vec<u8>> = match f.n() {
            1 => (0..3u8).map(|a| vec![a]).collect(),
            _ => {
                let mut v = Vec::new();
                for a0 in 0..3u8 {
                    for a1 in 0..3u8 {
                        v.push(vec![a0, a1]);
                    }
                }
                v
            }
        };
        let mut out = MeshFunction::zero(f.n(), f.l_exp(), f.j_exp()).unwrap();
        let w = f.cells_per_axis();
        let mut cell = [0usize; MAX_DIM];
        loop {
            let mut best = 0.0f64;
            for a in &offsets {
                for k in (-(f.l_exp() + 2) - depth)..=f.j_exp() {
                    if let Some(q) = containing_cube(f, &cell, k, a) {
                        best = best.max(cube_oscillation(f, &table, &q));
                    }
                }
            }
            let flat = out.flat_index(&cell);
            out.values_mut()[flat] = best;
            if !crate::mesh::increment(&mut cell, f.n(), w) {
                break;
            }
        }
        out
    }

    #[test]
    fn sharp_matches_cell_centric_brute_force() {
        // Values bounded away from zero keep every cell's oscillation well
        // above the deep-scale cap, so both scans terminate equivalently.
        for (n, l, j, seed) in [(1usize, 1, 3, 4u64), (2, 0, 2, 5)] {
            let base = MeshFunction::synthesize(
                n,
                l,
                j,
                &Generator::RandomStep { seed, lo: 0.5, hi: 2.0 },
            )
            .unwrap();
            let f = base.map(|v| if v == 0.0 { 0.7 } else { v });
            let fast = sharp_maximal(&f);
            let brute = sharp_brute(&f, 25);
            for (a, b) in fast.values().iter().zip(brute.values()) {
                assert!((a - b).abs() <= 1e-12 * b.max(1.0), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn sandwich_bounds_random_cube_means_2d() {
        let f = MeshFunction::synthesize(
            2,
            1,
            2,
            &Generator::RandomStep { seed: 12, lo: 0.0, hi: 2.0 },
        )
        .unwrap();
        let (lower, upper) = maximal_sandwich(&f);
        let table = MassTable::new(&f);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..300 {
            let i = rng.gen_range(0..f.cells_per_axis());
            let jj = rng.gen_range(0..f.cells_per_axis());
            let lo = [f.cell_lo(0, i), f.cell_lo(1, jj)];
            let hi = [lo[0] + f.cell_side(), lo[1] + f.cell_side()];
            // Random square cube containing the cell.
            let pad_l = rat(rng.gen_range(0..24) as i128, 8);
            let pad_r = rat(rng.gen_range(0..24) as i128, 8);
            let q = Region::new(
                &[lo[0] - pad_l, lo[1] - pad_l],
                &[hi[0] + pad_r, hi[1] + pad_r],
            )
            .unwrap();
            let mean = table.abs_mass(&q) / rat::to_f64(q.measure());
            let flat = i * f.cells_per_axis() + jj;
            assert!(mean <= upper.values()[flat] + 1e-12);
            assert!(lower.values()[flat] <= 36.0 * mean + upper.values()[flat]);
        }
    }

    #[test]
    fn maximal_2d_indicator() {
        let f = MeshFunction::synthesize(
            2,
            1,
            1,
            &Generator::DyadicIndicator { j: 0, m: vec![0, 0] },
        )
        .unwrap();
        let m = maximal_dyadic(&f, &[0, 0]);
        let inside = m.locate(&[rat(1, 2), rat(1, 2)]).unwrap();
        assert_eq!(m.get(&inside), 1.0);
        // Cell at [1,2)x[1,2): best dyadic cube is [0,2)^2, mean 1/4.
        let corner = m.locate(&[rat(3, 2), rat(3, 2)]).unwrap();
        assert_eq!(m.get(&corner), 0.25);
    }

    use crate::rat::rat;
}
