//! Hilbert transform of step functions: closed-form logarithms everywhere,
//! no singular quadrature.
//!
//! For a cell `[a, b)` of value `v` and `x` outside, the contribution to
//! `π·Tf(x)` is `v (ln|x-a| - ln|x-b|)`; for `x` inside, the symmetric
//! principal value gives `v ln((x-a)/(b-x))`, which vanishes at the cell
//! center. Pairings `∫(Tf)g` integrate the logs once more, so they reduce to
//! second differences of `H(u) = u ln|u| - u` on the uniform lattice; the
//! resulting offset table is odd by construction, which makes the
//! `T* = -T` identity hold to rounding.

use super::{OperatorSample, SampleKind};
use crate::mesh::MeshFunction;
use crate::rat::{self, Rat};
use crate::{Error, Result};
use std::f64::consts::PI;

fn require_1d(f: &MeshFunction) -> Result<()> {
    if f.n() != 1 {
        return Err(Error::DimensionUnsupported("hilbert transform"));
    }
    Ok(())
}

/// `u ln|u| - u`, continuously extended by `H(0) = 0`.
fn h_prim(u: f64) -> f64 {
    if u == 0.0 {
        0.0
    } else {
        u * (u.abs().ln() - 1.0)
    }
}

/// `T f(x)` at an arbitrary rational point off the value-jump set.
pub fn hilbert_at(f: &MeshFunction, x: Rat) -> Result<f64> {
    require_1d(f)?;
    let h = f.cell_side();
    let w = f.cells_per_axis() as i64;
    let t = (x + rat::pow2(f.l_exp())) / h;
    let xf = rat::to_f64(x);
    let hf = rat::to_f64(h);
    let x0 = -rat::to_f64(rat::pow2(f.l_exp()));
    let value_at = |i: i64| -> f64 {
        if i < 0 || i >= w {
            0.0
        } else {
            f.values()[i as usize]
        }
    };
    // On a cell boundary the two one-sided logs only cancel when the
    // adjacent values agree; otherwise the principal value diverges.
    let boundary = t.is_integer();
    let mut skip = None;
    let mut merged = 0.0f64;
    if boundary {
        let i = rat::floor_int(t) as i64;
        let (vl, vr) = (value_at(i - 1), value_at(i));
        if vl != vr {
            return Err(Error::JumpPoint(format!("x = {xf}")));
        }
        // Symmetric pair [x-h, x+h): its principal value is zero.
        skip = Some((i - 1, i));
        merged = 0.0;
        let _ = vl;
    }
    let mut acc = rat::KahanSum::new();
    for flat in f.support_cells() {
        let i = flat as i64;
        if let Some((a, b)) = skip {
            if i == a || i == b {
                continue;
            }
        }
        let a = x0 + i as f64 * hf;
        let b = a + hf;
        let v = f.values()[flat];
        if xf > a && xf < b {
            acc.add(v * ((xf - a) / (b - xf)).ln());
        } else {
            acc.add(v * ((xf - a).abs().ln() - (xf - b).abs().ln()));
        }
    }
    Ok((acc.total() + merged) / PI)
}

/// `T f` sampled exactly at cell centers (the self-cell principal value is
/// identically zero there).
pub fn hilbert_transform(f: &MeshFunction) -> Result<OperatorSample> {
    require_1d(f)?;
    let w = f.cells_per_axis();
    // G(s) = ln|(s + 1/2)/(s - 1/2)|, G(0) = 0 by the symmetric p.v.
    let mut g = vec![0.0f64; 2 * w];
    for s in 1..(w as i64) {
        let val = ((s as f64 + 0.5) / (s as f64 - 0.5)).ln();
        g[(w as i64 + s) as usize] = val;
        g[(w as i64 - s) as usize] = -val;
    }
    let support = f.support_cells();
    let mut out = vec![0.0f64; w];
    for (j, slot) in out.iter_mut().enumerate() {
        let mut acc = rat::KahanSum::new();
        for &i in &support {
            let s = j as i64 - i as i64 + w as i64;
            acc.add(f.values()[i] * g[s as usize]);
        }
        *slot = acc.total() / PI;
    }
    Ok(OperatorSample {
        values: MeshFunction::from_values(1, f.l_exp(), f.j_exp(), out)?,
        kind: SampleKind::CellCenterValue,
    })
}

/// Offset table `D(s) = ∫_{cell_s} π T(χ_{cell_0})`: the second difference
/// `H((s+1)h) - 2H(sh) + H((s-1)h)`. Odd in `s`, zero at `s = 0`.
fn pairing_table(w: usize, h: f64) -> Vec<f64> {
    let mut d = vec![0.0f64; 2 * w];
    for s in 1..(w as i64) {
        let sf = s as f64;
        let val = h_prim((sf + 1.0) * h) - 2.0 * h_prim(sf * h) + h_prim((sf - 1.0) * h);
        d[(w as i64 + s) as usize] = val;
        d[(w as i64 - s) as usize] = -val;
    }
    d
}

/// Exact double quadrature `∫ (Tf)(x) g(x) dx`.
pub fn hilbert_pairing(f: &MeshFunction, g: &MeshFunction) -> Result<f64> {
    require_1d(f)?;
    if f.n() != g.n() || f.l_exp() != g.l_exp() || f.j_exp() != g.j_exp() {
        return Err(Error::MismatchedMesh);
    }
    let w = f.cells_per_axis();
    let h = rat::to_f64(f.cell_side());
    let d = pairing_table(w, h);
    let mut acc = rat::KahanSum::new();
    for &i in &f.support_cells() {
        let fi = f.values()[i];
        for &j in &g.support_cells() {
            let s = j as i64 - i as i64 + w as i64;
            acc.add(fi * g.values()[j] * d[s as usize]);
        }
    }
    Ok(acc.total() / PI)
}

/// `T f` as exact cell averages (the pairing row against each cell).
pub fn hilbert_cell_averages(f: &MeshFunction) -> Result<OperatorSample> {
    require_1d(f)?;
    let w = f.cells_per_axis();
    let h = rat::to_f64(f.cell_side());
    let d = pairing_table(w, h);
    let support = f.support_cells();
    let mut out = vec![0.0f64; w];
    for (j, slot) in out.iter_mut().enumerate() {
        let mut acc = rat::KahanSum::new();
        for &i in &support {
            let s = j as i64 - i as i64 + w as i64;
            acc.add(f.values()[i] * d[s as usize]);
        }
        *slot = acc.total() / (PI * h);
    }
    Ok(OperatorSample {
        values: MeshFunction::from_values(1, f.l_exp(), f.j_exp(), out)?,
        kind: SampleKind::ExactCellAverage,
    })
}

/// Truncated transform `T_ζ f` at cell centers: integrate only over
/// `|x - y| > ζ`, exact partial-cell logarithms.
pub fn truncated_transform(f: &MeshFunction, zeta: f64) -> Result<OperatorSample> {
    require_1d(f)?;
    if !(zeta > 0.0) {
        return Err(Error::UnsupportedExponents(format!("ζ = {zeta}")));
    }
    let w = f.cells_per_axis();
    let hf = rat::to_f64(f.cell_side());
    let x0 = -rat::to_f64(rat::pow2(f.l_exp()));
    let support = f.support_cells();
    let mut out = vec![0.0f64; w];
    for (j, slot) in out.iter_mut().enumerate() {
        let x = x0 + (j as f64 + 0.5) * hf;
        let mut acc = rat::KahanSum::new();
        for &i in &support {
            let a = x0 + i as f64 * hf;
            let b = a + hf;
            let v = f.values()[i];
            // Left piece [a, min(b, x-ζ)).
            let m1 = b.min(x - zeta);
            if m1 > a {
                acc.add(v * ((x - a).ln() - (x - m1).ln()));
            }
            // Right piece [max(a, x+ζ), b).
            let m2 = a.max(x + zeta);
            if b > m2 {
                acc.add(v * ((m2 - x).ln() - (b - x).ln()));
            }
        }
        *slot = acc.total() / PI;
    }
    Ok(OperatorSample {
        values: MeshFunction::from_values(1, f.l_exp(), f.j_exp(), out)?,
        kind: SampleKind::CellCenterValue,
    })
}

/// `𝒯f = max over dyadic truncation radii ζ ∈ {2^{-J}, ..., 2^{L+1}}` of
/// `|T_ζ f|` at cell centers.
pub fn maximal_transform(f: &MeshFunction) -> Result<MeshFunction> {
    require_1d(f)?;
    let mut out = MeshFunction::zero(1, f.l_exp(), f.j_exp())?;
    for k in (-(f.l_exp() + 1))..=f.j_exp() {
        let zeta = rat::to_f64(rat::pow2(-k));
        let t = truncated_transform(f, zeta)?;
        out = out.zip(&t.values, |m, v| m.max(v.abs()))?;
    }
    Ok(out)
}

/// Commutator `[b, T] f = b·Tf − T(bf)` at cell centers, both terms exact
/// pointwise.
pub fn commutator(b: &MeshFunction, f: &MeshFunction) -> Result<OperatorSample> {
    require_1d(f)?;
    let tf = hilbert_transform(f)?;
    let bf = b.mul(f)?;
    let tbf = hilbert_transform(&bf)?;
    let values = b.mul(&tf.values)?.sub(&tbf.values)?;
    Ok(OperatorSample { values, kind: SampleKind::CellCenterValue })
}

/// Both sides of the commutator duality identity, each by exact quadrature:
/// `∫ [b,T](g)·h = ∫ b (h T(g) − g T*(h))` with `T* = −T`.
pub fn commutator_duality(
    b: &MeshFunction,
    g: &MeshFunction,
    h: &MeshFunction,
) -> Result<(f64, f64)> {
    let bh = b.mul(h)?;
    let bg = b.mul(g)?;
    // LHS = ∫ (b·Tg)h − ∫ T(bg)·h = ∫(Tg)(bh) − ∫(T(bg))h.
    let lhs = hilbert_pairing(g, &bh)? - hilbert_pairing(&bg, h)?;
    // RHS = ∫ b h T(g) + ∫ (bg) T(h) (using T* = −T).
    let rhs = hilbert_pairing(g, &bh)? + hilbert_pairing(h, &bg)?;
    Ok((lhs, rhs))
}

/// Convenience used by the factorization: `∫ b (g T*(h) − h T(g))`, exact.
pub fn bilinear_form(b: &MeshFunction, g: &MeshFunction, h: &MeshFunction) -> Result<f64> {
    let bg = b.mul(g)?;
    let bh = b.mul(h)?;
    // ∫ (bg) T*(h) = −∫ (bg) T(h) = −pairing(h, bg); ∫ (bh) T(g) = pairing(g, bh).
    Ok(-hilbert_pairing(h, &bg)? - hilbert_pairing(g, &bh)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{Generator, Region};
    use crate::rat::{from_f64_exact, rat};

    fn chi01() -> MeshFunction {
        MeshFunction::synthesize(1, 2, 4, &Generator::DyadicIndicator { j: 0, m: vec![0] })
            .unwrap()
    }

    #[test]
    fn indicator_log_values() {
        let f = chi01();
        // Tχ_[0,1)(2) = (1/π) ln 2.
        let got = hilbert_at(&f, from_int(2)).unwrap();
        let want = 2.0f64.ln() / PI;
        assert!((got - want).abs() <= 1e-14, "{got} vs {want}");
        // Symmetry at the midpoint.
        let mid = hilbert_at(&f, rat(1, 2)).unwrap();
        assert!(mid.abs() <= 1e-14);
    }

    #[test]
    fn jump_point_detection() {
        let f = chi01();
        assert!(matches!(hilbert_at(&f, from_int(0)), Err(Error::JumpPoint(_))));
        assert!(matches!(hilbert_at(&f, from_int(1)), Err(Error::JumpPoint(_))));
        // Interior cell boundary with equal neighbors: fine.
        assert!(hilbert_at(&f, rat(1, 4)).is_ok());
        // Far outside: fine.
        assert!(hilbert_at(&f, from_int(3)).is_ok());
    }

    #[test]
    fn transform_matches_pointwise_eval() {
        let f = MeshFunction::synthesize(
            1,
            2,
            4,
            &Generator::RandomStep { seed: 2, lo: -1.0, hi: 1.0 },
        )
        .unwrap();
        let t = hilbert_transform(&f).unwrap();
        assert!(!t.exact());
        for i in [0usize, 7, 33, 60] {
            let x = f.cell_center(0, i);
            let want = hilbert_at(&f, x).unwrap();
            assert!((t.values.values()[i] - want).abs() <= 1e-12);
        }
    }

    #[test]
    fn pairing_antisymmetry_and_averages() {
        let f = MeshFunction::synthesize(
            1,
            1,
            3,
            &Generator::RandomStep { seed: 5, lo: -1.0, hi: 1.0 },
        )
        .unwrap();
        let g = MeshFunction::synthesize(
            1,
            1,
            3,
            &Generator::RandomStep { seed: 6, lo: -1.0, hi: 1.0 },
        )
        .unwrap();
        let fg = hilbert_pairing(&f, &g).unwrap();
        let gf = hilbert_pairing(&g, &f).unwrap();
        assert!((fg + gf).abs() <= 1e-12 * fg.abs().max(1.0), "{fg} vs {gf}");

        // Pairing row = exact cell averages.
        let avg = hilbert_cell_averages(&f).unwrap();
        assert!(avg.exact());
        let h = rat::to_f64(f.cell_side());
        let direct: f64 = avg
            .values
            .values()
            .iter()
            .zip(g.values())
            .map(|(a, b)| a * b * h)
            .sum();
        assert!((direct - fg).abs() <= 1e-12 * fg.abs().max(1.0));
    }

    #[test]
    fn truncated_limits() {
        let f = chi01();
        // ζ below the cell side recovers the full transform at centers.
        let t_small = truncated_transform(&f, 1e-9).unwrap();
        let t_full = hilbert_transform(&f).unwrap();
        for (a, b) in t_small.values.values().iter().zip(t_full.values.values()) {
            assert!((a - b).abs() <= 1e-9);
        }
        // ζ beyond the domain diameter kills everything.
        let t_big = truncated_transform(&f, 64.0).unwrap();
        assert!(t_big.values.is_zero());
    }

    #[test]
    fn maximal_transform_dominates_truncations() {
        let f = MeshFunction::synthesize(
            1,
            1,
            3,
            &Generator::RandomStep { seed: 7, lo: -1.0, hi: 1.0 },
        )
        .unwrap();
        let mt = maximal_transform(&f).unwrap();
        let t = truncated_transform(&f, 0.25).unwrap();
        for (m, v) in mt.values().iter().zip(t.values.values()) {
            assert!(*m >= v.abs() - 1e-12);
        }
    }

    #[test]
    fn commutator_with_constant_symbol_vanishes() {
        let f = MeshFunction::synthesize(
            1,
            1,
            3,
            &Generator::RandomStep { seed: 9, lo: -1.0, hi: 1.0 },
        )
        .unwrap();
        let b = MeshFunction::zero(1, 1, 3).unwrap().map(|_| 3.25);
        let c = commutator(&b, &f).unwrap();
        assert!(c.values.sup_norm() <= 1e-12);
    }

    #[test]
    fn duality_identity_exact() {
        // b(x) = x on the mesh, g and h with disjoint supports.
        let g = MeshFunction::synthesize(
            1,
            2,
            4,
            &Generator::Indicator(Region::interval(from_int(0), from_int(1)).unwrap()),
        )
        .unwrap();
        let h = MeshFunction::synthesize(
            1,
            2,
            4,
            &Generator::Indicator(Region::interval(from_int(2), from_int(3)).unwrap()),
        )
        .unwrap();
        let mut b = MeshFunction::zero(1, 2, 4).unwrap();
        for i in 0..b.cells_per_axis() {
            let x = rat::to_f64(b.cell_center(0, i));
            b.values_mut()[i] = x;
        }
        let (lhs, rhs) = commutator_duality(&b, &g, &h).unwrap();
        assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
        // For b(x) = x the kernel telescopes to |g||h|/π; the cell-sampled
        // symbol reproduces it up to O(h²) discretization.
        assert!((lhs - 1.0 / PI).abs() <= 1e-3, "lhs = {lhs}");
    }

    use crate::rat::from_int;
    use crate::Error;
}
