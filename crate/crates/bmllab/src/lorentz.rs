//! Decreasing rearrangement and closed-form Lorentz quasi-norms for step
//! functions.
//!
//! Norms are never quadratures: a step profile has finitely many breakpoints
//! `(v_k, t_k)` with exact rational measures, so both the rearrangement
//! formula and the distribution-function formula reduce to finite closed
//! sums. The two formulas act as each other's oracle.

use crate::mesh::{overlap_measure, MeshFunction, Region};
use crate::rat::{self, KahanSum, Rat, RatRepr};
use crate::{Error, Result};
use num_traits::Zero;

/// Exponent pair for `L^{p,q}`; `f64::INFINITY` encodes `∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorentzExponents {
    pub p: f64,
    pub q: f64,
}

impl LorentzExponents {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        if !(p > 0.0) || !(q > 0.0) {
            return Err(Error::UnsupportedExponents(format!("(p,q) = ({p},{q})")));
        }
        if p.is_infinite() && q.is_finite() {
            return Err(Error::UnsupportedExponents(
                "p = ∞ supported only with q = ∞".into(),
            ));
        }
        Ok(LorentzExponents { p, q })
    }
}

/// Conjugate exponent: `1/x + 1/x' = 1` on `[1, ∞]`.
pub fn conjugate(x: f64) -> f64 {
    if x == 1.0 {
        f64::INFINITY
    } else if x.is_infinite() {
        1.0
    } else {
        x / (x - 1.0)
    }
}

/// Decreasing rearrangement of a step function: strictly decreasing values
/// `v_1 > v_2 > ... > v_K > 0` with accumulated measures `t_1 < ... < t_K`,
/// so `f*(t) = v_k` on `[t_{k-1}, t_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepProfile {
    steps: Vec<(f64, Rat)>,
}

impl StepProfile {
    pub fn empty() -> Self {
        StepProfile { steps: Vec::new() }
    }

    /// Build from unordered `(|value|, mass)` pairs.
    pub fn from_pairs(mut pairs: Vec<(f64, Rat)>) -> Self {
        pairs.retain(|(v, m)| *v != 0.0 && !m.is_zero());
        pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        let mut steps: Vec<(f64, Rat)> = Vec::new();
        let mut acc = Rat::zero();
        for (v, m) in pairs {
            let v = v.abs();
            acc += m;
            match steps.last_mut() {
                Some(last) if last.0 == v => last.1 = acc,
                _ => steps.push((v, acc)),
            }
        }
        StepProfile { steps }
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn breakpoints(&self) -> &[(f64, Rat)] {
        &self.steps
    }

    /// Measure of the support `{f ≠ 0}`.
    pub fn total_measure(&self) -> Rat {
        self.steps.last().map(|s| s.1).unwrap_or_else(Rat::zero)
    }

    /// Scale all measures by a positive rational (mass dilation).
    pub fn scale_measures(&self, c: Rat) -> StepProfile {
        StepProfile { steps: self.steps.iter().map(|&(v, t)| (v, t * c)).collect() }
    }

    pub fn to_json(&self) -> String {
        let rows: Vec<(f64, i64, i64)> = self
            .steps
            .iter()
            .map(|&(v, t)| {
                let r = RatRepr::of(t);
                (v, r.num, r.den)
            })
            .collect();
        serde_json::to_string(&rows).unwrap()
    }
}

/// `d_f(α)`: exact measure of `{x ∈ R : |f(x)| > α}` (whole space if `R` is
/// `None`; the function vanishes off the domain box either way).
pub fn distribution(f: &MeshFunction, alpha: f64, region: Option<&Region>) -> Rat {
    assert!(alpha >= 0.0, "distribution needs α ≥ 0");
    let mut acc = Rat::zero();
    match region {
        None => {
            let vol = f.cell_volume();
            for &v in f.values() {
                if v.abs() > alpha {
                    acc += vol;
                }
            }
        }
        Some(r) => {
            let (lo, hi) = f.index_box(r);
            if (0..f.n()).any(|a| lo[a] >= hi[a]) {
                return acc;
            }
            let mut cell = lo;
            loop {
                let v = f.get(&cell);
                if v.abs() > alpha {
                    acc += overlap_measure(r, &f.cell_region(&cell));
                }
                if !crate::mesh::increment_box(&mut cell, f.n(), &lo, &hi) {
                    break;
                }
            }
        }
    }
    acc
}

/// Decreasing rearrangement of `|f·χ_R|` as a step profile.
pub fn rearrangement(f: &MeshFunction, region: Option<&Region>) -> StepProfile {
    let mut pairs: Vec<(f64, Rat)> = Vec::new();
    match region {
        None => {
            let vol = f.cell_volume();
            for &v in f.values() {
                if v != 0.0 {
                    pairs.push((v.abs(), vol));
                }
            }
        }
        Some(r) => {
            // Per-axis overlaps: rational products only where an end cell
            // is cut; interior cells reuse the exact full-cell measure.
            let ox = f.axis_overlaps(r, 0);
            if ox.is_empty() {
                return StepProfile::empty();
            }
            let h = f.cell_side();
            let full = f.cell_volume();
            match f.n() {
                1 => {
                    for (i, len) in ox {
                        let v = f.values()[i];
                        if v != 0.0 {
                            pairs.push((v.abs(), len));
                        }
                    }
                }
                _ => {
                    let oy = f.axis_overlaps(r, 1);
                    if oy.is_empty() {
                        return StepProfile::empty();
                    }
                    let w = f.cells_per_axis();
                    for &(i, lx) in &ox {
                        let row = i * w;
                        let x_full = lx == h;
                        for &(j, ly) in &oy {
                            let v = f.values()[row + j];
                            if v != 0.0 {
                                let mass = if x_full && ly == h { full } else { lx * ly };
                                pairs.push((v.abs(), mass));
                            }
                        }
                    }
                }
            }
        }
    }
    StepProfile::from_pairs(pairs)
}

/// Closed-form `‖·‖_{L^{p,q}}` of a step profile.
///
/// `q < ∞`: `[Σ_k v_k^q (p/q)(t_k^{q/p} − t_{k-1}^{q/p})]^{1/q}`;
/// `q = ∞`: `max_k v_k t_k^{1/p}`; `p = q = ∞`: `v_1`.
pub fn lorentz_norm(prof: &StepProfile, e: LorentzExponents) -> f64 {
    if prof.is_empty() {
        return 0.0;
    }
    if e.p.is_infinite() {
        return prof.steps[0].0;
    }
    if e.q.is_infinite() {
        let mut best = 0.0f64;
        for &(v, t) in &prof.steps {
            best = best.max(v * rat::to_f64(t).powf(1.0 / e.p));
        }
        return best;
    }
    let mut sum = KahanSum::new();
    let mut prev = 0.0f64;
    for &(v, t) in &prof.steps {
        let tq = rat::to_f64(t).powf(e.q / e.p);
        sum.add(v.powf(e.q) * (e.p / e.q) * (tq - prev));
        prev = tq;
    }
    sum.total().max(0.0).powf(1.0 / e.q)
}

/// Convenience: Lorentz norm of a mesh function (optionally restricted).
pub fn mesh_lorentz_norm(f: &MeshFunction, e: LorentzExponents, region: Option<&Region>) -> f64 {
    lorentz_norm(&rearrangement(f, region), e)
}

/// The distribution-function route to the same norm:
/// `q < ∞`: `p^{1/q} [Σ_k d_f(v_{k+1})^{q/p} (v_k^q − v_{k+1}^q)/q]^{1/q}`;
/// `q = ∞`: `sup_s s·d_f(s)^{1/p}`. Agrees exactly with [`lorentz_norm`]
/// after [`rearrangement`]; the pair is the module's formula oracle.
pub fn lorentz_norm_via_distribution(f: &MeshFunction, e: LorentzExponents) -> f64 {
    let mut levels: Vec<f64> =
        f.values().iter().filter(|v| **v != 0.0).map(|v| v.abs()).collect();
    levels.sort_by(|a, b| b.partial_cmp(a).unwrap());
    levels.dedup();
    if levels.is_empty() {
        return 0.0;
    }
    if e.p.is_infinite() {
        return levels[0];
    }
    if e.q.is_infinite() {
        // d_f is constant on [v_{k+1}, v_k); the sup on that interval is at
        // the right endpoint.
        let mut best = 0.0f64;
        for (k, &v) in levels.iter().enumerate() {
            let below = levels.get(k + 1).copied().unwrap_or(0.0);
            let d = distribution(f, below, None);
            best = best.max(v * rat::to_f64(d).powf(1.0 / e.p));
        }
        return best;
    }
    let mut sum = KahanSum::new();
    for (k, &v) in levels.iter().enumerate() {
        let below = levels.get(k + 1).copied().unwrap_or(0.0);
        let d = rat::to_f64(distribution(f, below, None));
        sum.add(d.powf(e.q / e.p) * (v.powf(e.q) - below.powf(e.q)) / e.q);
    }
    e.p.powf(1.0 / e.q) * sum.total().max(0.0).powf(1.0 / e.q)
}

/// Both sides of the power identity `‖|f|^s‖_{p,q} = ‖f‖_{ps,qs}^s`.
pub fn power_identity_check(f: &MeshFunction, s: f64, p: f64, q: f64) -> Result<(f64, f64)> {
    if !(s > 0.0) || !s.is_finite() || !p.is_finite() || !q.is_finite() {
        return Err(Error::UnsupportedExponents("power identity needs finite s,p,q > 0".into()));
    }
    let lhs = mesh_lorentz_norm(&f.map(|v| v.abs().powf(s)), LorentzExponents::new(p, q)?, None);
    let rhs = mesh_lorentz_norm(f, LorentzExponents::new(p * s, q * s)?, None).powf(s);
    Ok((lhs, rhs))
}

/// Hölder pairing: `(∫|fg|, ‖f‖_{p,q}‖g‖_{p',q'})`; contract `lhs ≤ rhs`.
pub fn holder_pair(f: &MeshFunction, g: &MeshFunction, p: f64, q: f64) -> Result<(f64, f64)> {
    if !(1.0..=f64::INFINITY).contains(&p) || !(1.0..=f64::INFINITY).contains(&q) {
        return Err(Error::UnsupportedExponents("Hölder needs 1 ≤ p,q ≤ ∞".into()));
    }
    let e = LorentzExponents::new(p, q)?;
    let e_dual = LorentzExponents::new(conjugate(p), conjugate(q))?;
    let prod = f.mul(g)?;
    let lhs = prod.l1_norm();
    let rhs = mesh_lorentz_norm(f, e, None) * mesh_lorentz_norm(g, e_dual, None);
    Ok((lhs, rhs))
}
