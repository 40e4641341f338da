//! Bourgain-Morrey-Lorentz norms over the full infinite dyadic lattice.
//!
//! The norm aggregates `|Q|^{1/t-1/p} ‖f‖_{L^{p,q}(Q)}` in `ℓ^r` over *all*
//! dyadic cubes. For a piecewise-constant `f` on a bounded mesh the infinite
//! sum splits into three zones, each exact:
//!
//! - coarse (`side > 2^{L+2}`): the restricted Lorentz norm per stabilized
//!   domain piece no longer depends on the scale, so the scale sum is a
//!   geometric series in closed form;
//! - middle (`2^{-J} ≤ side ≤ 2^{L+2}`): finite enumeration of the cubes
//!   meeting the support, restricted norms exact per [`crate::lorentz`];
//! - fine (`side < 2^{-J}`): inside cells the function is constant and the
//!   cube count per scale is explicit, so each support feature (cell
//!   interior, straddled cell face, straddled corner) contributes a
//!   geometric series in closed form.
//!
//! Divergence for trivial exponent patterns is decided symbolically from the
//! geometric ratios, never by numeric overflow.

use crate::lorentz::{lorentz_norm, rearrangement, LorentzExponents, StepProfile};
use crate::mesh::{
    increment_box, overlap_measure, DyadicCube, MeshFunction, Region, MAX_DIM,
};
use crate::rat::{self, ceil_int, floor_int, from_int, pow2, rat, KahanSum, Rat};
use crate::{Error, Result};
use num_traits::Zero;

/// Exponent quadruple `(p,q,t,r)` with `0 < p ≤ t < ∞`, `0 < q ≤ ∞`,
/// `0 < r ≤ ∞` (`f64::INFINITY` encodes `∞`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BmlExponents {
    pub p: f64,
    pub q: f64,
    pub t: f64,
    pub r: f64,
}

impl BmlExponents {
    pub fn new(p: f64, q: f64, t: f64, r: f64) -> Result<Self> {
        if !(p > 0.0) || !p.is_finite() || !(t > 0.0) || !t.is_finite() {
            return Err(Error::UnsupportedExponents(format!("p = {p}, t = {t}")));
        }
        if p > t {
            return Err(Error::UnsupportedExponents(format!("p = {p} > t = {t}")));
        }
        if !(q > 0.0) || !(r > 0.0) {
            return Err(Error::UnsupportedExponents(format!("q = {q}, r = {r}")));
        }
        Ok(BmlExponents { p, q, t, r })
    }

    pub fn lorentz(&self) -> LorentzExponents {
        LorentzExponents { p: self.p, q: self.q }
    }

    /// The space is nontrivial iff `p < t < r < ∞` or `p ≤ t, r = ∞`.
    pub fn nontrivial(&self) -> bool {
        (self.p < self.t && self.t < self.r && self.r.is_finite()) || self.r.is_infinite()
    }
}

pub fn nontrivial(e: &BmlExponents) -> bool {
    e.nontrivial()
}

/// Three-zone breakdown. For `r < ∞` the zone fields are sums of r-th powers
/// and `total^r = coarse_tail + middle + fine_tail`; for `r = ∞` they are
/// zone suprema and `total` is their max.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormBreakdown {
    pub coarse_tail: f64,
    pub middle: f64,
    pub fine_tail: f64,
    pub total: f64,
}

impl NormBreakdown {
    fn zero() -> Self {
        NormBreakdown { coarse_tail: 0.0, middle: 0.0, fine_tail: 0.0, total: 0.0 }
    }
}

/// Outcome of a norm computation: finite breakdown, or the divergence marker
/// for trivial exponents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormOutcome {
    Finite(NormBreakdown),
    Divergent,
}

impl NormOutcome {
    pub fn total(&self) -> Option<f64> {
        match self {
            NormOutcome::Finite(b) => Some(b.total),
            NormOutcome::Divergent => None,
        }
    }

    pub fn expect_finite(&self) -> NormBreakdown {
        match self {
            NormOutcome::Finite(b) => *b,
            NormOutcome::Divergent => panic!("divergent norm where finite was required"),
        }
    }
}

const ZERO_OFFSET: [u8; MAX_DIM] = [0; MAX_DIM];

/// `‖f‖_{M^{t,r}_{p,q}}` over the unshifted dyadic lattice.
pub fn bml_norm(f: &MeshFunction, e: &BmlExponents) -> NormOutcome {
    grid_norm(f, e, &ZERO_OFFSET[..f.n()])
}

/// Same norm over the thirds-shifted grid `D_ā`.
pub fn bml_norm_on_grid(f: &MeshFunction, e: &BmlExponents, a: &[u8]) -> NormOutcome {
    grid_norm(f, e, a)
}

fn grid_norm(f: &MeshFunction, e: &BmlExponents, a: &[u8]) -> NormOutcome {
    if !e.nontrivial() {
        return NormOutcome::Divergent;
    }
    let eng = Engine::new(f, e, a);
    let Some(eng) = eng else {
        return NormOutcome::Finite(NormBreakdown::zero());
    };
    let k_star = eng.k_star();
    let j = f.j_exp();
    if e.r.is_finite() {
        let mut middle = KahanSum::new();
        for k in k_star..=j {
            middle.add(eng.middle_scale_sum(k));
        }
        let coarse = eng.coarse_series_below(k_star);
        let fine = eng.fine_series_above(j);
        let middle = middle.total();
        let pow = coarse + middle + fine;
        NormOutcome::Finite(NormBreakdown {
            coarse_tail: coarse,
            middle,
            fine_tail: fine,
            total: pow.max(0.0).powf(1.0 / e.r),
        })
    } else {
        let mut middle = 0.0f64;
        for k in k_star..=j {
            middle = middle.max(eng.middle_scale_sup(k));
        }
        let coarse = eng.coarse_sup_below(k_star);
        let fine = eng.fine_sup_at(j + 1);
        NormOutcome::Finite(NormBreakdown {
            coarse_tail: coarse,
            middle,
            fine_tail: fine,
            total: coarse.max(middle).max(fine),
        })
    }
}

/// Norm restricted to lattice scales `j_min ..= j_max`, plus the closed-form
/// bound on everything left out. For `r < ∞`:
/// `|total^r − value^r| ≤ tail_bound`.
pub fn bml_norm_truncated(
    f: &MeshFunction,
    e: &BmlExponents,
    j_min: i32,
    j_max: i32,
) -> Result<(f64, f64)> {
    if !e.nontrivial() {
        return Err(Error::UnsupportedExponents("trivial exponents diverge".into()));
    }
    if j_min > j_max {
        return Err(Error::UnsupportedExponents(format!("window [{j_min}, {j_max}]")));
    }
    let Some(eng) = Engine::new(f, e, &ZERO_OFFSET[..f.n()]) else {
        return Ok((0.0, 0.0));
    };
    let k_star = eng.k_star();
    let j = f.j_exp();
    if e.r.is_finite() {
        let mut value = KahanSum::new();
        for k in j_min..=j_max {
            value.add(eng.scale_term(k, k_star));
        }
        let mut tail = 0.0f64;
        // Below the window.
        if j_min <= k_star {
            tail += eng.coarse_series_below(j_min);
        } else {
            tail += eng.coarse_series_below(k_star);
            for k in k_star..j_min.min(j + 1) {
                tail += eng.middle_scale_bound(k);
            }
            for k in (j + 1)..j_min {
                tail += eng.fine_scale_sum(k);
            }
        }
        // Above the window.
        if j_max >= j {
            tail += eng.fine_series_above(j_max);
        } else {
            for k in (j_max + 1)..=j {
                tail += eng.middle_scale_bound(k);
            }
            tail += eng.fine_series_above(j);
        }
        Ok((value.total().max(0.0).powf(1.0 / e.r), tail))
    } else {
        let mut value = 0.0f64;
        for k in j_min..=j_max {
            value = value.max(eng.scale_term(k, k_star));
        }
        let mut tail = 0.0f64;
        if j_min <= k_star {
            tail = tail.max(eng.coarse_sup_below(j_min));
        } else {
            tail = tail.max(eng.coarse_sup_below(k_star));
            for k in k_star..j_min.min(j + 1) {
                tail = tail.max(eng.middle_scale_sup(k));
            }
            for k in (j + 1)..j_min {
                tail = tail.max(eng.fine_sup_at(k));
            }
        }
        if j_max >= j {
            tail = tail.max(eng.fine_sup_at(j_max + 1));
        } else {
            for k in (j_max + 1)..=j {
                tail = tail.max(eng.middle_scale_sup(k));
            }
            tail = tail.max(eng.fine_sup_at(j + 1));
        }
        Ok((value, tail))
    }
}

/// A support feature whose fine-zone contribution is a geometric series:
/// a constant cell interior, a straddled cell face, or a straddled corner.
#[derive(Debug)]
enum Feature {
    /// `|v|` of a nonzero cell; cube count `Π_i (2^{k-J} - s_i)` per scale.
    Interior(f64),
    /// Unit-mass profile of a straddled face/corner; one cube per scale and
    /// per `count_axis` slot (`None` for n = 1 faces and corners).
    Straddle { profile: StepProfile, count_axis: Option<usize> },
}

struct Engine<'a> {
    f: &'a MeshFunction,
    e: BmlExponents,
    a: [u8; MAX_DIM],
    n: usize,
    sup_lo: [usize; MAX_DIM],
    sup_hi: [usize; MAX_DIM],
    /// Support bounding region in coordinates.
    sup_region: Region,
    c_pq: f64,
    features: Vec<Feature>,
}

impl<'a> Engine<'a> {
    fn new(f: &'a MeshFunction, e: &BmlExponents, a: &[u8]) -> Option<Self> {
        assert_eq!(a.len(), f.n());
        let (sup_lo, sup_hi) = f.support_box()?;
        let n = f.n();
        let mut lo = [Rat::zero(); MAX_DIM];
        let mut hi = [Rat::zero(); MAX_DIM];
        for axis in 0..n {
            lo[axis] = f.cell_lo(axis, sup_lo[axis]);
            hi[axis] = f.cell_lo(axis, sup_hi[axis]);
        }
        let sup_region = Region { n, lo, hi };
        let c_pq = if e.q.is_finite() { (e.p / e.q).powf(1.0 / e.q) } else { 1.0 };
        let mut aa = [0u8; MAX_DIM];
        aa[..n].copy_from_slice(a);
        let mut eng = Engine {
            f,
            e: *e,
            a: aa,
            n,
            sup_lo,
            sup_hi,
            sup_region,
            c_pq,
            features: Vec::new(),
        };
        eng.collect_features();
        Some(eng)
    }

    /// Scale below which every domain piece per offset pattern is stable.
    fn k_star(&self) -> i32 {
        -(self.f.l_exp() + 2)
    }

    /// Exponent of the per-scale weight `|Q|^{r(1/t-1/p)} = 2^{kβ}`.
    fn beta(&self) -> f64 {
        let r = if self.e.r.is_finite() { self.e.r } else { 1.0 };
        (self.n as f64) * r * (1.0 / self.e.p - 1.0 / self.e.t)
    }

    fn beta_inf(&self) -> f64 {
        (self.n as f64) * (1.0 / self.e.p - 1.0 / self.e.t)
    }

    /// Shifted-grid index range `[m_lo, m_hi]` of cubes at scale `k`
    /// overlapping `[lo, hi)` along `axis`.
    fn index_range(&self, axis: usize, k: i32, lo: Rat, hi: Rat) -> (i64, i64) {
        let shift = rat(self.a[axis] as i128, 3);
        let t_lo = lo * pow2(k) - shift;
        let t_hi = hi * pow2(k) - shift;
        // Overlap iff m < t_hi and m + 1 > t_lo.
        let m_lo = {
            let fl = floor_int(t_lo);
            if from_int(fl) + from_int(1) > t_lo { fl } else { fl + 1 }
        };
        let m_hi = {
            let cl = ceil_int(t_hi);
            if from_int(cl) < t_hi { cl } else { cl - 1 }
        };
        (m_lo as i64, m_hi as i64)
    }

    fn cube_region(&self, k: i32, m: &[i64; MAX_DIM]) -> Region {
        let side = pow2(-k);
        let mut lo = [Rat::zero(); MAX_DIM];
        let mut hi = [Rat::zero(); MAX_DIM];
        for axis in 0..self.n {
            lo[axis] = side * (from_int(m[axis] as i128) + rat(self.a[axis] as i128, 3));
            hi[axis] = lo[axis] + side;
        }
        Region { n: self.n, lo, hi }
    }

    /// Exact restricted Lorentz norm over one grid cube.
    fn cube_norm(&self, region: &Region) -> f64 {
        lorentz_norm(&rearrangement(self.f, Some(region)), self.e.lorentz())
    }

    /// `Σ_Q (|Q|^{1/t-1/p} ‖f‖_{L^{p,q}(Q)})^r` over cubes at scale `k`.
    fn middle_scale_sum(&self, k: i32) -> f64 {
        let weight = ((k * self.n as i32) as f64 * self.e.r * (1.0 / self.e.p - 1.0 / self.e.t))
            .exp2();
        let mut acc = KahanSum::new();
        self.for_cubes_at(k, |region| {
            let norm = self.cube_norm(region);
            if norm > 0.0 {
                acc.add(weight * norm.powf(self.e.r));
            }
        });
        acc.total()
    }

    fn middle_scale_sup(&self, k: i32) -> f64 {
        let weight = ((k * self.n as i32) as f64 * (1.0 / self.e.p - 1.0 / self.e.t)).exp2();
        let mut best = 0.0f64;
        self.for_cubes_at(k, |region| {
            best = best.max(weight * self.cube_norm(region));
        });
        best
    }

    /// Sound closed-form bound for a skipped middle scale: cube count times
    /// the full-function norm, no enumeration of cube contents.
    fn middle_scale_bound(&self, k: i32) -> f64 {
        let mut count = 1.0f64;
        for axis in 0..self.n {
            let (m_lo, m_hi) =
                self.index_range(axis, k, self.sup_region.lo[axis], self.sup_region.hi[axis]);
            count *= (m_hi - m_lo + 1) as f64;
        }
        let weight =
            ((k * self.n as i32) as f64 * self.e.r * (1.0 / self.e.p - 1.0 / self.e.t)).exp2();
        let full = lorentz_norm(&rearrangement(self.f, None), self.e.lorentz());
        count * weight * full.powf(self.e.r)
    }

    fn for_cubes_at(&self, k: i32, mut body: impl FnMut(&Region)) {
        let mut m_lo = [0i64; MAX_DIM];
        let mut m_hi = [0i64; MAX_DIM];
        for axis in 0..self.n {
            let (lo, hi) =
                self.index_range(axis, k, self.sup_region.lo[axis], self.sup_region.hi[axis]);
            m_lo[axis] = lo;
            m_hi[axis] = hi;
        }
        let mut m = m_lo;
        loop {
            let region = self.cube_region(k, &m);
            body(&region);
            let mut axis = self.n;
            loop {
                if axis == 0 {
                    return;
                }
                axis -= 1;
                m[axis] += 1;
                if m[axis] <= m_hi[axis] {
                    break;
                }
                m[axis] = m_lo[axis];
            }
        }
    }

    /// One whole scale term for the truncated norm.
    fn scale_term(&self, k: i32, k_star: i32) -> f64 {
        if k < k_star {
            self.coarse_scale_term(k)
        } else if k <= self.f.j_exp() {
            if self.e.r.is_finite() {
                self.middle_scale_sum(k)
            } else {
                self.middle_scale_sup(k)
            }
        } else {
            if self.e.r.is_finite() {
                self.fine_scale_sum(k)
            } else {
                self.fine_sup_single_scale(k)
            }
        }
    }

    /// Stabilized piece norms: the cube norms at `k_star`.
    fn piece_norms(&self) -> Vec<f64> {
        let mut out = Vec::new();
        self.for_cubes_at(self.k_star(), |region| {
            let norm = self.cube_norm(region);
            if norm > 0.0 {
                out.push(norm);
            }
        });
        out
    }

    fn coarse_scale_term(&self, k: i32) -> f64 {
        debug_assert!(k < self.k_star());
        if self.e.r.is_finite() {
            let base: f64 = self.piece_norms().iter().map(|c| c.powf(self.e.r)).sum();
            base * ((k * self.n as i32) as f64 * self.e.r * (1.0 / self.e.p - 1.0 / self.e.t))
                .exp2()
        } else {
            let base = self.piece_norms().iter().fold(0.0f64, |m, &c| m.max(c));
            base * ((k * self.n as i32) as f64 * (1.0 / self.e.p - 1.0 / self.e.t)).exp2()
        }
    }

    /// `Σ_{k < k0}` of the coarse terms, closed form (`r < ∞`).
    fn coarse_series_below(&self, k0: i32) -> f64 {
        let beta = self.beta();
        debug_assert!(beta > 0.0, "coarse series needs p < t when r < ∞");
        let base: f64 = self.piece_norms().iter().map(|c| c.powf(self.e.r)).sum();
        base * (((k0 - 1) as f64) * beta).exp2() / (1.0 - (-beta).exp2())
    }

    /// `sup_{k < k0}` of the coarse terms (`r = ∞`); attained at `k0 - 1`.
    fn coarse_sup_below(&self, k0: i32) -> f64 {
        let base = self.piece_norms().iter().fold(0.0f64, |m, &c| m.max(c));
        base * (((k0 - 1) as f64) * self.beta_inf()).exp2()
    }

    fn collect_features(&mut self) {
        let f = self.f;
        let n = self.n;
        // Interior of every nonzero cell.
        for flat in f.support_cells() {
            let c = f.cell_of_flat(flat);
            let _ = c;
            self.features.push(Feature::Interior(f.values()[flat].abs()));
        }
        // Straddled faces and corners only exist on shifted axes.
        let w = f.cells_per_axis() as isize;
        let val = |i: isize, j: isize| -> f64 {
            if i < 0 || i >= w || j < 0 || j >= w {
                return 0.0;
            }
            match n {
                1 => f.values()[i as usize],
                _ => f.values()[(i as usize) * (w as usize) + j as usize],
            }
        };
        let lo0 = self.sup_lo[0] as isize;
        let hi0 = self.sup_hi[0] as isize;
        let (lo1, hi1) = if n == 2 {
            (self.sup_lo[1] as isize, self.sup_hi[1] as isize)
        } else {
            (0, 1)
        };
        for axis in 0..n {
            if self.a[axis] == 0 {
                continue;
            }
            let phi = rat(self.a[axis] as i128, 3); // right-side fraction
            match (n, axis) {
                (1, _) => {
                    for b in (lo0 - 1)..hi0 {
                        let (vl, vr) = (val(b, 0), val(b + 1, 0));
                        if vl == 0.0 && vr == 0.0 {
                            continue;
                        }
                        let profile = StepProfile::from_pairs(vec![
                            (vl.abs(), from_int(1) - phi),
                            (vr.abs(), phi),
                        ]);
                        self.features.push(Feature::Straddle { profile, count_axis: None });
                    }
                }
                (2, 0) => {
                    for b in (lo0 - 1)..hi0 {
                        for j in lo1..hi1 {
                            let (vl, vr) = (val(b, j), val(b + 1, j));
                            if vl == 0.0 && vr == 0.0 {
                                continue;
                            }
                            let profile = StepProfile::from_pairs(vec![
                                (vl.abs(), from_int(1) - phi),
                                (vr.abs(), phi),
                            ]);
                            self.features
                                .push(Feature::Straddle { profile, count_axis: Some(1) });
                        }
                    }
                }
                (2, 1) => {
                    for i in lo0..hi0 {
                        for b in (lo1 - 1)..hi1 {
                            let (vd, vu) = (val(i, b), val(i, b + 1));
                            if vd == 0.0 && vu == 0.0 {
                                continue;
                            }
                            let profile = StepProfile::from_pairs(vec![
                                (vd.abs(), from_int(1) - phi),
                                (vu.abs(), phi),
                            ]);
                            self.features
                                .push(Feature::Straddle { profile, count_axis: Some(0) });
                        }
                    }
                }
                _ => unreachable!(),
            }
        }
        // Corners need both axes shifted.
        if n == 2 && self.a[0] != 0 && self.a[1] != 0 {
            let phi0 = rat(self.a[0] as i128, 3);
            let phi1 = rat(self.a[1] as i128, 3);
            for b0 in (lo0 - 1)..hi0 {
                for b1 in (lo1 - 1)..hi1 {
                    let quad = [
                        (val(b0, b1), (from_int(1) - phi0) * (from_int(1) - phi1)),
                        (val(b0 + 1, b1), phi0 * (from_int(1) - phi1)),
                        (val(b0, b1 + 1), (from_int(1) - phi0) * phi1),
                        (val(b0 + 1, b1 + 1), phi0 * phi1),
                    ];
                    if quad.iter().all(|(v, _)| *v == 0.0) {
                        continue;
                    }
                    let profile = StepProfile::from_pairs(
                        quad.iter().map(|(v, m)| (v.abs(), *m)).collect(),
                    );
                    self.features.push(Feature::Straddle { profile, count_axis: None });
                }
            }
        }
    }

    /// `Σ_{k > J} 2^{(k-J)·e} 2^{-k n r / t}` in closed form, with the series
    /// start shifted to `k0 + 1`.
    fn fine_geo(&self, monomial: i32, k0: i32) -> f64 {
        let nrt = self.n as f64 * self.e.r / self.e.t;
        let rho = (monomial as f64 - nrt).exp2();
        debug_assert!(rho < 1.0, "fine series needs r > t");
        let j = self.f.j_exp() as f64;
        (-j * monomial as f64 + (k0 as f64 + 1.0) * (monomial as f64 - nrt)).exp2() / (1.0 - rho)
    }

    /// Per-feature cube count factors `Π_i (2^{k-J} - s_i)`, expanded into
    /// monomials of `x = 2^{k-J}`; returns `(degree, coefficient)` pairs.
    fn count_monomials(&self, feature: &Feature) -> Vec<(i32, f64)> {
        let s: Vec<f64> =
            (0..self.n).map(|axis| if self.a[axis] != 0 { 1.0 } else { 0.0 }).collect();
        match feature {
            Feature::Interior(_) => match self.n {
                1 => vec![(1, 1.0), (0, -s[0])],
                _ => vec![(2, 1.0), (1, -(s[0] + s[1])), (0, s[0] * s[1])],
            },
            Feature::Straddle { count_axis, .. } => match count_axis {
                None => vec![(0, 1.0)],
                Some(axis) => vec![(1, 1.0), (0, -s[*axis])],
            },
        }
    }

    fn feature_base(&self, feature: &Feature) -> f64 {
        match feature {
            Feature::Interior(v) => self.c_pq * v,
            Feature::Straddle { profile, .. } => lorentz_norm(profile, self.e.lorentz()),
        }
    }

    /// Fine-zone series `Σ_{k > k0}` of all feature terms (`r < ∞`).
    fn fine_series_above(&self, k0: i32) -> f64 {
        let mut acc = KahanSum::new();
        for feat in &self.features {
            let base = self.feature_base(feat).powf(self.e.r);
            if base == 0.0 {
                continue;
            }
            for (deg, coef) in self.count_monomials(feat) {
                if coef != 0.0 {
                    acc.add(base * coef * self.fine_geo(deg, k0));
                }
            }
        }
        acc.total()
    }

    /// Single fine scale `k > J` (`r < ∞`).
    fn fine_scale_sum(&self, k: i32) -> f64 {
        let j = self.f.j_exp();
        let x = ((k - j) as f64).exp2();
        let w = (-(k as f64) * self.n as f64 * self.e.r / self.e.t).exp2();
        let mut acc = KahanSum::new();
        for feat in &self.features {
            let base = self.feature_base(feat).powf(self.e.r);
            if base == 0.0 {
                continue;
            }
            let count: f64 = self
                .count_monomials(feat)
                .iter()
                .map(|(deg, coef)| coef * x.powi(*deg))
                .sum();
            acc.add(base * count * w);
        }
        acc.total()
    }

    /// Fine-zone sup from scale `k0` on (`r = ∞`); per-feature terms decay
    /// like `2^{-k n / t}`, so the sup over the zone sits at `k0`.
    fn fine_sup_at(&self, k0: i32) -> f64 {
        self.fine_sup_single_scale(k0)
    }

    fn fine_sup_single_scale(&self, k: i32) -> f64 {
        let w = (-(k as f64) * self.n as f64 / self.e.t).exp2();
        let mut best = 0.0f64;
        for feat in &self.features {
            best = best.max(self.feature_base(feat));
        }
        best * w
    }
}

/// Exact translation by a mesh-aligned offset.
pub fn translate(f: &MeshFunction, y: &[Rat]) -> Result<MeshFunction> {
    if y.len() != f.n() {
        return Err(Error::InvalidMesh("offset dimension mismatch".into()));
    }
    let h = f.cell_side();
    let mut steps = [0i64; MAX_DIM];
    for axis in 0..f.n() {
        let t = y[axis] / h;
        if !t.is_integer() {
            return Err(Error::InvalidMesh(format!(
                "offset {:?} is not a multiple of the cell side",
                y[axis]
            )));
        }
        steps[axis] = t.to_integer() as i64;
    }
    let w = f.cells_per_axis() as i64;
    let mut out = MeshFunction::zero(f.n(), f.l_exp(), f.j_exp())?;
    for flat in f.support_cells() {
        let c = f.cell_of_flat(flat);
        let mut nc = [0usize; MAX_DIM];
        for axis in 0..f.n() {
            let t = c[axis] as i64 + steps[axis];
            if t < 0 || t >= w {
                let needed = translation_required_l(f, &steps);
                return Err(Error::SupportEscapes { required_l: needed });
            }
            nc[axis] = t as usize;
        }
        let nf = out.flat_index(&nc);
        out.values_mut()[nf] = f.values()[flat];
    }
    Ok(out)
}

fn translation_required_l(f: &MeshFunction, steps: &[i64; MAX_DIM]) -> i32 {
    let (lo, hi) = f.support_box().expect("support checked by caller");
    let h = rat::to_f64(f.cell_side());
    let half = (1i64 << (f.l_exp() + f.j_exp())) as f64;
    let mut need = f.l_exp();
    for axis in 0..f.n() {
        let a = (lo[axis] as i64 + steps[axis]) as f64 - half;
        let b = (hi[axis] as i64 + steps[axis]) as f64 - half;
        let extent = a.abs().max(b.abs()) * h;
        let mut l = f.l_exp();
        while (l as f64).exp2() < extent && l < 40 {
            l += 1;
        }
        need = need.max(l);
    }
    need
}

/// Dyadic dilation `x ↦ f(2^m x)`: the same value array reinterpreted on the
/// mesh with `L' = L - m`, `J' = J + m`.
pub fn dilate_dyadic(f: &MeshFunction, m: i32) -> Result<MeshFunction> {
    MeshFunction::from_values(f.n(), f.l_exp() - m, f.j_exp() + m, f.values().to_vec())
}

/// Convolution of two step functions projected back to the mesh by exact
/// cell averaging (n = 1). Each cell pair contributes a tent supported on
/// exactly two result cells, half its mass to each.
pub fn convolve(f: &MeshFunction, g: &MeshFunction) -> Result<MeshFunction> {
    if f.n() != 1 || g.n() != 1 {
        return Err(Error::DimensionUnsupported("convolve"));
    }
    if f.l_exp() != g.l_exp() || f.j_exp() != g.j_exp() {
        return Err(Error::MismatchedMesh);
    }
    let w = f.cells_per_axis() as i64;
    let h = rat::to_f64(f.cell_side());
    let s0 = -(1i64 << (f.l_exp() + f.j_exp()));
    let mut out = MeshFunction::zero(1, f.l_exp(), f.j_exp())?;
    let fs = f.support_cells();
    let gs = g.support_cells();
    for &i in &fs {
        let fi = f.values()[i];
        for &jj in &gs {
            let gj = g.values()[jj];
            let k = i as i64 + jj as i64 + s0;
            if k < 0 || k + 1 >= w {
                return Err(Error::SupportEscapes { required_l: f.l_exp() + 1 });
            }
            let contrib = fi * gj * h / 2.0;
            out.values_mut()[k as usize] += contrib;
            out.values_mut()[(k + 1) as usize] += contrib;
        }
    }
    Ok(out)
}

/// `‖f·χ_{B^c(0,R)}‖` with the sup-norm ball (exact on the mesh); `R` must
/// be a multiple of the cell side.
pub fn tail_norm(f: &MeshFunction, e: &BmlExponents, radius: Rat) -> Result<f64> {
    if radius < Rat::zero() || !(radius / f.cell_side()).is_integer() {
        return Err(Error::InvalidMesh("radius must be a nonnegative cell multiple".into()));
    }
    let mut g = f.clone();
    if radius > Rat::zero() {
        let ball = Region::cube(&vec![Rat::zero(); f.n()], radius)?;
        let inside = f.restrict(&ball);
        g = f.sub(&inside)?;
    }
    bml_norm(&g, e)
        .total()
        .ok_or_else(|| Error::UnsupportedExponents("trivial exponents".into()))
}

/// `max_{|y| ≤ b, y mesh-aligned} ‖f − τ_y f‖`.
pub fn translation_modulus(f: &MeshFunction, e: &BmlExponents, b: Rat) -> Result<f64> {
    if b < Rat::zero() || !(b / f.cell_side()).is_integer() {
        return Err(Error::InvalidMesh("offset bound must be a nonnegative cell multiple".into()));
    }
    let steps = (b / f.cell_side()).to_integer() as i64;
    let mut best = 0.0f64;
    let h = f.cell_side();
    let axes = f.n();
    let mut offs: Vec<Vec<i64>> = Vec::new();
    match axes {
        1 => {
            for i in -steps..=steps {
                offs.push(vec![i]);
            }
        }
        _ => {
            for i in -steps..=steps {
                for j in -steps..=steps {
                    if i * i + j * j <= steps * steps {
                        offs.push(vec![i, j]);
                    }
                }
            }
        }
    }
    for off in offs {
        if off.iter().all(|&o| o == 0) {
            continue;
        }
        let y: Vec<Rat> = off.iter().map(|&o| h * from_int(o as i128)).collect();
        let shifted = translate(f, &y)?;
        let diff = f.sub(&shifted)?;
        let norm = bml_norm(&diff, e)
            .total()
            .ok_or_else(|| Error::UnsupportedExponents("trivial exponents".into()))?;
        best = best.max(norm);
    }
    Ok(best)
}

/// Search a mesh-aligned separation offset `y` (doubling along `e_1`) with
/// `‖τ_y f + g‖ ≤ (1+ε)(‖f‖^r + ‖g‖^r)^{1/r}` (max-form for `r = ∞`).
pub fn separation_offset(
    f: &MeshFunction,
    g: &MeshFunction,
    e: &BmlExponents,
    eps: f64,
) -> Result<Vec<Rat>> {
    if eps <= 0.0 {
        return Err(Error::UnsupportedExponents("ε must be positive".into()));
    }
    let nf = bml_norm(f, e)
        .total()
        .ok_or_else(|| Error::UnsupportedExponents("trivial exponents".into()))?;
    let ng = bml_norm(g, e).total().unwrap();
    let target = if e.r.is_finite() {
        (1.0 + eps) * (nf.powf(e.r) + ng.powf(e.r)).powf(1.0 / e.r)
    } else {
        (1.0 + eps) * nf.max(ng)
    };
    if g.is_zero() || f.is_zero() {
        return Ok(vec![Rat::zero(); f.n()]);
    }
    // Smallest dyadic cube containing both supports fixes the step unit.
    let side = enclosing_dyadic_side(f, g);
    let mut step = side;
    loop {
        let mut y = vec![Rat::zero(); f.n()];
        y[0] = step;
        let shifted = match translate(f, &y) {
            Ok(s) => s,
            Err(Error::SupportEscapes { required_l }) => {
                return Err(Error::SupportEscapes { required_l })
            }
            Err(e) => return Err(e),
        };
        let sum = shifted.add(g)?;
        let norm = bml_norm(&sum, e).total().unwrap();
        if norm <= target {
            return Ok(y);
        }
        step *= from_int(2);
    }
}

fn enclosing_dyadic_side(f: &MeshFunction, g: &MeshFunction) -> Rat {
    let mut side = f.cell_side();
    let (flo, fhi) = f.support_box().unwrap();
    let (glo, ghi) = g.support_box().unwrap();
    for axis in 0..f.n() {
        let lo = f.cell_lo(axis, flo[axis].min(glo[axis]));
        let hi = f.cell_lo(axis, fhi[axis].max(ghi[axis]));
        let mut j = f.j_exp();
        loop {
            let s = pow2(-j);
            let a = floor_int(lo / s);
            let b = floor_int(hi / s);
            if a == b || j <= -(f.l_exp()) {
                if s > side {
                    side = s;
                }
                break;
            }
            j -= 1;
        }
    }
    side
}

/// `Σ_Q overlap(region, cell)`-style restricted mass used by diagnostics.
pub fn region_mass(f: &MeshFunction, region: &Region) -> f64 {
    let (lo, hi) = f.index_box(region);
    if (0..f.n()).any(|a| lo[a] >= hi[a]) {
        return 0.0;
    }
    let mut acc = KahanSum::new();
    let mut cell = lo;
    loop {
        let v = f.get(&cell);
        if v != 0.0 {
            let ov = overlap_measure(region, &f.cell_region(&cell));
            if !ov.is_zero() {
                acc.add(v * rat::to_f64(ov));
            }
        }
        if !increment_box(&mut cell, f.n(), &lo, &hi) {
            break;
        }
    }
    acc.total()
}

/// Mesh function of a dyadic indicator on the given mesh.
pub fn dyadic_indicator(cube: &DyadicCube, l_exp: i32, j_exp: i32) -> Result<MeshFunction> {
    MeshFunction::synthesize(
        cube.n,
        l_exp,
        j_exp,
        &crate::mesh::Generator::DyadicIndicator { j: cube.j, m: cube.m[..cube.n].to_vec() },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Generator;

    fn e2234() -> BmlExponents {
        BmlExponents::new(2.0, 2.0, 3.0, 4.0).unwrap()
    }

    /// Independent closed form for `‖χ_{Q_{j,0}}‖` straight from the two
    /// geometric series (coarse `k ≤ j`, fine `k > j`).
    fn indicator_oracle(n: i32, j: i32, e: &BmlExponents) -> f64 {
        let nn = n as f64;
        let c_pq = if e.q.is_finite() { (e.p / e.q).powf(1.0 / e.q) } else { 1.0 };
        if e.r.is_finite() {
            let beta = nn * e.r * (1.0 / e.p - 1.0 / e.t);
            let coarse = (j as f64 * -nn * e.r / e.t).exp2() / (1.0 - (-beta).exp2());
            let rho = (nn * (1.0 - e.r / e.t)).exp2();
            let fine = (j as f64 * -nn * e.r / e.t).exp2() * rho / (1.0 - rho);
            c_pq * (coarse + fine).powf(1.0 / e.r)
        } else {
            // sup over k ≤ j of 2^{-kn(1/t-1/p)} 2^{-jn/p} and over k > j of
            // 2^{-kn/t}; both attained at k = j.
            c_pq * (j as f64 * -nn / e.t).exp2()
        }
    }

    #[test]
    fn indicator_example_value() {
        let f = dyadic_indicator(&DyadicCube::new(0, &[0]), 2, 3).unwrap();
        let b = bml_norm(&f, &e2234()).expect_finite();
        let coarse = 1.0 / (1.0 - 0.5f64.powf(2.0 / 3.0));
        let fine = 0.5f64.powf(1.0 / 3.0) / (1.0 - 0.5f64.powf(1.0 / 3.0));
        let expect = (coarse + fine).powf(0.25);
        assert!((b.total - expect).abs() <= 1e-12 * expect, "{} vs {expect}", b.total);
        assert!((b.total - 1.5994).abs() < 1e-3);
        // Breakdown identity.
        assert!(
            (b.total.powf(4.0) - (b.coarse_tail + b.middle + b.fine_tail)).abs()
                <= 1e-12 * b.total.powf(4.0)
        );
    }

    #[test]
    fn indicator_matches_oracle_across_grid() {
        for n in [1usize, 2] {
            for j in [-1i32, 0, 1] {
                for (p, q, t, r) in [
                    (2.0, 2.0, 3.0, 4.0),
                    (1.0, 2.0, 2.0, 6.0),
                    (1.5, f64::INFINITY, 2.0, 3.0),
                    (2.0, 2.0, 3.0, f64::INFINITY),
                    (2.0, 2.0, 2.0, f64::INFINITY),
                ] {
                    let e = BmlExponents::new(p, q, t, r).unwrap();
                    if !e.nontrivial() {
                        continue;
                    }
                    let m = vec![0i64; n];
                    let f = dyadic_indicator(&DyadicCube::new(j, &m), 2, 2).unwrap();
                    let got = bml_norm(&f, &e).expect_finite().total;
                    let want = indicator_oracle(n as i32, j, &e);
                    assert!(
                        (got - want).abs() <= 1e-10 * want,
                        "n={n} j={j} ({p},{q},{t},{r}): {got} vs {want}"
                    );
                }
            }
        }
    }

    #[test]
    fn scaling_ratio_is_exact() {
        let e = e2234();
        for j in 0..3 {
            let f0 = dyadic_indicator(&DyadicCube::new(j, &[0]), 2, 5).unwrap();
            let f1 = dyadic_indicator(&DyadicCube::new(j + 1, &[0]), 2, 5).unwrap();
            let r = bml_norm(&f1, &e).expect_finite().total
                / bml_norm(&f0, &e).expect_finite().total;
            let want = 0.5f64.powf(1.0 / e.t);
            assert!((r - want).abs() <= 1e-12 * want, "j={j}: {r} vs {want}");
        }
    }

    #[test]
    fn nontriviality_gate() {
        assert!(BmlExponents::new(2.0, 2.0, 3.0, 4.0).unwrap().nontrivial());
        assert!(!BmlExponents::new(2.0, 2.0, 3.0, 3.0).unwrap().nontrivial());
        assert!(BmlExponents::new(2.0, 2.0, 2.0, f64::INFINITY).unwrap().nontrivial());
        assert!(!BmlExponents::new(2.0, 2.0, 2.0, 5.0).unwrap().nontrivial());
        assert!(BmlExponents::new(2.0, 2.0, 3.0, 2.0).is_ok()); // r < t: trivial, not an error
        assert!(BmlExponents::new(3.0, 2.0, 2.0, 4.0).is_err()); // p > t: type error

        let f = dyadic_indicator(&DyadicCube::new(0, &[0]), 2, 3).unwrap();
        let trivial = BmlExponents::new(2.0, 2.0, 3.0, 3.0).unwrap();
        assert_eq!(bml_norm(&f, &trivial), NormOutcome::Divergent);
    }

    #[test]
    fn grid_offset_zero_matches_plain_norm() {
        let f = MeshFunction::synthesize(
            1,
            2,
            3,
            &Generator::RandomStep { seed: 4, lo: -1.0, hi: 1.0 },
        )
        .unwrap();
        let e = e2234();
        let a = bml_norm(&f, &e).expect_finite().total;
        let b = bml_norm_on_grid(&f, &e, &[0]).expect_finite().total;
        assert_eq!(a, b);
    }

    /// Brute-force single-scale term: enumerate every grid cube at scale `k`
    /// that can meet the support, rational overlaps throughout.
    fn scale_term_brute(f: &MeshFunction, e: &BmlExponents, a: &[u8], k: i32) -> f64 {
        let (slo, shi) = f.support_box().unwrap();
        let mut lo = [Rat::zero(); MAX_DIM];
        let mut hi = [Rat::zero(); MAX_DIM];
        for axis in 0..f.n() {
            lo[axis] = f.cell_lo(axis, slo[axis]);
            hi[axis] = f.cell_lo(axis, shi[axis]);
        }
        let side = pow2(-k);
        let mut ranges = Vec::new();
        for axis in 0..f.n() {
            let shift = rat(a[axis] as i128, 3);
            let m_lo = floor_int(lo[axis] / side - shift - from_int(2)) as i64;
            let m_hi = ceil_int(hi[axis] / side - shift + from_int(2)) as i64;
            ranges.push((m_lo, m_hi));
        }
        let idx: Vec<Vec<i64>> = match f.n() {
            1 => (ranges[0].0..=ranges[0].1).map(|m| vec![m]).collect(),
            _ => {
                let mut v = Vec::new();
                for m0 in ranges[0].0..=ranges[0].1 {
                    for m1 in ranges[1].0..=ranges[1].1 {
                        v.push(vec![m0, m1]);
                    }
                }
                v
            }
        };
        let mut acc = 0.0f64;
        for m in idx {
            let mut rlo = [Rat::zero(); MAX_DIM];
            let mut rhi = [Rat::zero(); MAX_DIM];
            for axis in 0..f.n() {
                rlo[axis] = side * (from_int(m[axis] as i128) + rat(a[axis] as i128, 3));
                rhi[axis] = rlo[axis] + side;
            }
            let region = Region { n: f.n(), lo: rlo, hi: rhi };
            let norm = lorentz_norm(&rearrangement(f, Some(&region)), e.lorentz());
            if norm > 0.0 {
                let w = ((k * f.n() as i32) as f64 * e.r * (1.0 / e.p - 1.0 / e.t)).exp2();
                acc += w * norm.powf(e.r);
            }
        }
        acc
    }

    /// Every zone formula (coarse closed form, middle enumeration, fine
    /// feature series) agrees with brute-force cube enumeration per scale.
    #[test]
    fn shifted_zone_terms_match_brute_force() {
        let f = MeshFunction::synthesize(
            1,
            1,
            2,
            &Generator::RandomStep { seed: 9, lo: -1.0, hi: 2.0 },
        )
        .unwrap();
        let e = e2234();
        for a in [[0u8], [1u8], [2u8]] {
            let eng = Engine::new(&f, &e, &a).unwrap();
            let k_star = eng.k_star();
            for k in (k_star - 3)..=(f.j_exp() + 6) {
                let got = eng.scale_term(k, k_star);
                let want = scale_term_brute(&f, &e, &a, k);
                assert!(
                    (got - want).abs() <= 1e-11 * want.max(1e-6),
                    "a={a:?} k={k}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn shifted_zone_terms_match_brute_force_2d() {
        let f = MeshFunction::synthesize(
            2,
            0,
            2,
            &Generator::RandomStep { seed: 21, lo: 0.0, hi: 2.0 },
        )
        .unwrap();
        let e = BmlExponents::new(1.0, 1.0, 2.0, 5.0).unwrap();
        for a in [[1u8, 0u8], [0u8, 2u8], [1u8, 2u8], [2u8, 2u8]] {
            let eng = Engine::new(&f, &e, &a).unwrap();
            let k_star = eng.k_star();
            for k in (k_star - 2)..=(f.j_exp() + 4) {
                let got = eng.scale_term(k, k_star);
                let want = scale_term_brute(&f, &e, &a, k);
                assert!(
                    (got - want).abs() <= 1e-10 * want.max(1e-6),
                    "a={a:?} k={k}: {got} vs {want}"
                );
            }
        }
    }

    /// The closed-form fine/coarse series agree with adding many per-scale
    /// brute terms plus the series remainder shifted further out.
    #[test]
    fn series_closed_forms_match_partial_sums() {
        let f = MeshFunction::synthesize(
            1,
            1,
            2,
            &Generator::RandomStep { seed: 12, lo: -1.0, hi: 1.0 },
        )
        .unwrap();
        let e = e2234();
        for a in [[0u8], [1u8]] {
            let eng = Engine::new(&f, &e, &a).unwrap();
            let j = f.j_exp();
            let mut partial = 0.0;
            for k in (j + 1)..=(j + 12) {
                partial += scale_term_brute(&f, &e, &a, k);
            }
            let series = eng.fine_series_above(j);
            let rest = eng.fine_series_above(j + 12);
            assert!(
                (series - partial - rest).abs() <= 1e-11 * series,
                "a={a:?}: {series} vs {partial} + {rest}"
            );

            let k_star = eng.k_star();
            let mut partial = 0.0;
            for k in (k_star - 12)..k_star {
                partial += scale_term_brute(&f, &e, &a, k);
            }
            let series = eng.coarse_series_below(k_star);
            let rest = eng.coarse_series_below(k_star - 12);
            assert!(
                (series - partial - rest).abs() <= 1e-11 * series,
                "a={a:?}: coarse {series} vs {partial} + {rest}"
            );
        }
    }

    #[test]
    fn truncated_window_examples() {
        let e = e2234();
        let f = dyadic_indicator(&DyadicCube::new(0, &[0]), 2, 3).unwrap();
        let exact = bml_norm(&f, &e).expect_finite();

        let (v, tail) = bml_norm_truncated(&f, &e, -20, f.j_exp() + 20).unwrap();
        assert!((exact.total.powf(e.r) - v.powf(e.r)).abs() <= tail + 1e-12);
        // Fine tail decays like 2^{-k n (r/t - 1)}; 20 scales of ratio
        // 2^{-1/3} leave about a percent.
        assert!(tail <= 0.05);

        // Single-scale window: exactly the one-cube term C_{p,q}^r.
        let (v, tail) = bml_norm_truncated(&f, &e, 0, 0).unwrap();
        let c_pq = (e.p / e.q).powf(1.0 / e.q);
        assert!((v.powf(e.r) - c_pq.powf(e.r)).abs() <= 1e-12);
        assert!((exact.total.powf(e.r) - v.powf(e.r)).abs() <= tail * (1.0 + 1e-9));

        // Widening windows are monotone.
        let mut prev = 0.0;
        for w in 0..6 {
            let (v, _) = bml_norm_truncated(&f, &e, -w, w).unwrap();
            assert!(v >= prev - 1e-14);
            prev = v;
        }

        // r = ∞: windowed sup plus outside sup reconstructs the total.
        let e_inf = BmlExponents::new(2.0, 2.0, 3.0, f64::INFINITY).unwrap();
        let total = bml_norm(&f, &e_inf).expect_finite().total;
        let (v, tail) = bml_norm_truncated(&f, &e_inf, -3, f.j_exp() + 2).unwrap();
        assert!(v <= total * (1.0 + 1e-12));
        assert!((v.max(tail) - total).abs() <= 1e-12 * total, "{v} {tail} vs {total}");
    }

    #[test]
    fn lattice_monotone_and_r_embedding() {
        let f = MeshFunction::synthesize(
            1,
            2,
            3,
            &Generator::RandomStep { seed: 17, lo: -2.0, hi: 2.0 },
        )
        .unwrap();
        let g = f.map(|v| 1.25 * v.abs());
        let e = e2234();
        let nf = bml_norm(&f, &e).expect_finite().total;
        let ng = bml_norm(&g, &e).expect_finite().total;
        assert!(nf <= ng * (1.0 + 1e-12));

        // r1 ≤ r2 ⇒ ‖·‖_{t,r2} ≤ ‖·‖_{t,r1}.
        let e1 = BmlExponents::new(2.0, 2.0, 3.0, 3.5).unwrap();
        let e2 = BmlExponents::new(2.0, 2.0, 3.0, 6.0).unwrap();
        let n1 = bml_norm(&f, &e1).expect_finite().total;
        let n2 = bml_norm(&f, &e2).expect_finite().total;
        assert!(n2 <= n1 * (1.0 + 1e-12));
    }

    #[test]
    fn monotone_convergence_on_truncations() {
        let f = MeshFunction::synthesize(
            1,
            2,
            3,
            &Generator::RandomStep { seed: 23, lo: 0.0, hi: 2.0 },
        )
        .unwrap();
        let e = e2234();
        let full = bml_norm(&f, &e).expect_finite().total;
        let mut prev = 0.0;
        let w = f.cells_per_axis();
        for frac in [w / 4, w / 2, 3 * w / 4, w] {
            let mut g = MeshFunction::zero(1, 2, 3).unwrap();
            for i in 0..frac {
                g.values_mut()[i] = f.values()[i];
            }
            let n = bml_norm(&g, &e).expect_finite().total;
            assert!(n >= prev - 1e-13);
            prev = n;
        }
        assert!((prev - full).abs() <= 1e-12 * full);
    }

    #[test]
    fn translate_and_dilate() {
        let e = e2234();
        let f = dyadic_indicator(&DyadicCube::new(0, &[0]), 2, 3).unwrap();
        let tf = translate(&f, &[from_int(1)]).unwrap();
        assert_eq!(
            bml_norm(&f, &e).expect_finite().total,
            bml_norm(&tf, &e).expect_finite().total
        );
        let same = translate(&f, &[from_int(0)]).unwrap();
        assert_eq!(f, same);

        let escape = translate(&f, &[from_int(8)]);
        assert!(matches!(escape, Err(Error::SupportEscapes { .. })));

        // Dilation: χ_[0,1) dilated by 2 is χ_[0,1/2); exact ratio 2^{-n/t}.
        let d = dilate_dyadic(&f, 1).unwrap();
        assert_eq!(d.l_exp(), 1);
        assert_eq!(d.j_exp(), 4);
        assert!((d.integral() - 0.5).abs() <= 1e-15);
        let ratio = bml_norm(&d, &e).expect_finite().total / bml_norm(&f, &e).expect_finite().total;
        let want = 0.5f64.powf(1.0 / e.t);
        assert!((ratio - want).abs() <= 1e-12 * want);
    }

    #[test]
    fn convolution_mass_and_delta() {
        let f = dyadic_indicator(&DyadicCube::new(0, &[0]), 2, 3).unwrap();
        let tent = convolve(&f, &f).unwrap();
        assert!((tent.integral() - 1.0).abs() <= 1e-12);

        // δ-like kernel: one cell with mass 1.
        let h = rat::to_f64(f.cell_side());
        let mut delta = MeshFunction::zero(1, 2, 3).unwrap();
        let mid = delta.cells_per_axis() / 2;
        delta.values_mut()[mid] = 1.0 / h;
        let smeared = convolve(&delta, &f).unwrap();
        assert!((smeared.integral() - 1.0).abs() <= 1e-12);
        assert!(smeared.sup_norm() <= 1.0 + 1e-12);

        let zero = MeshFunction::zero(1, 2, 3).unwrap();
        assert!(convolve(&zero, &f).unwrap().is_zero());
    }

    #[test]
    fn tail_and_translation_modulus_trivial_cases() {
        let e = e2234();
        let f = dyadic_indicator(&DyadicCube::new(0, &[0]), 2, 3).unwrap();
        assert_eq!(tail_norm(&f, &e, from_int(2)).unwrap(), 0.0);
        assert_eq!(translation_modulus(&f, &e, Rat::zero()).unwrap(), 0.0);

        let half = tail_norm(&f, &e, rat(1, 2)).unwrap();
        let expected = bml_norm(
            &MeshFunction::synthesize(
                1,
                2,
                3,
                &Generator::Indicator(Region::interval(rat(1, 2), from_int(1)).unwrap()),
            )
            .unwrap(),
            &e,
        )
        .expect_finite()
        .total;
        assert!((half - expected).abs() <= 1e-13 * expected);
    }

    #[test]
    fn separation_offset_examples() {
        let e = e2234();
        let f = dyadic_indicator(&DyadicCube::new(0, &[0]), 4, 2).unwrap();
        let y = separation_offset(&f, &f, &e, 0.1).unwrap();
        assert!(y[0] > Rat::zero());
        let zero = MeshFunction::zero(1, 4, 2).unwrap();
        let y0 = separation_offset(&f, &zero, &e, 0.1).unwrap();
        assert_eq!(y0[0], Rat::zero());

        // r = ∞ takes the max-form target.
        let e_inf = BmlExponents::new(2.0, 2.0, 3.0, f64::INFINITY).unwrap();
        let y = separation_offset(&f, &f, &e_inf, 0.05).unwrap();
        let shifted = translate(&f, &y).unwrap();
        let sum = shifted.add(&f).unwrap();
        let lhs = bml_norm(&sum, &e_inf).expect_finite().total;
        let single = bml_norm(&f, &e_inf).expect_finite().total;
        assert!(lhs <= 1.05 * single);
    }
}
