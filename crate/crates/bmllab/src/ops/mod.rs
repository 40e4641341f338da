//! The operator zoo: maximal family, sharp maximal, fractional integral,
//! Hilbert transform with exact quadrature, commutators, and BMO/CMO
//! diagnostics.

mod fractional;
mod hilbert;
mod maximal;
mod oscillation;

pub use fractional::{fractional_integral, fractional_integral_2d};
pub use hilbert::{
    bilinear_form, commutator, commutator_duality, hilbert_at, hilbert_cell_averages,
    hilbert_pairing, hilbert_transform, maximal_transform, truncated_transform,
};
pub use maximal::{
    fractional_maximal, maximal_dyadic, maximal_over_grids, maximal_sandwich, powered_maximal,
    sharp_maximal, MassTable,
};
pub use oscillation::{bmo_norm, cmo_profile, median_value, BmoEstimate, CmoProfile};

use crate::mesh::MeshFunction;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// How a sampled operator output relates to the true function on each cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleKind {
    /// Cell value = exact average of the operator output over the cell.
    ExactCellAverage,
    /// Cell value = exact pointwise value at the cell center.
    CellCenterValue,
}

/// Mesh-sampled operator output with an honest flag for how it was sampled.
#[derive(Debug, Clone)]
pub struct OperatorSample {
    pub values: MeshFunction,
    pub kind: SampleKind,
}

impl OperatorSample {
    /// `true` iff the sample is exact cell quadrature.
    pub fn exact(&self) -> bool {
        self.kind == SampleKind::ExactCellAverage
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({
            "exact": self.exact(),
            "function": serde_json::from_str::<serde_json::Value>(&self.values.to_json()).unwrap(),
        })
        .to_string()
    }
}

/// Kernel family; only the Hilbert kernel `1/(π(x−y))` is built in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelKind {
    Hilbert,
}

/// Standard-kernel certificate data: size bound `|K| ≤ A_size/|x−y|^n` and
/// Hölder-`δ` regularity with constant `A_reg`.
#[derive(Debug, Clone, Copy)]
pub struct KernelDescriptor {
    pub kind: KernelKind,
    pub delta: f64,
    pub a_size: f64,
    pub a_reg: f64,
}

impl KernelDescriptor {
    pub fn hilbert() -> Self {
        // Regularity: |1/(x-y) - 1/(x'-y)| = |x-x'| / (|x-y||x'-y|) and on the
        // admissible set (a+b)^2/(ab) ≤ 4.5, so A_reg = 4.5/π is provable.
        KernelDescriptor {
            kind: KernelKind::Hilbert,
            delta: 1.0,
            a_size: 1.0 / std::f64::consts::PI,
            a_reg: 4.5 / std::f64::consts::PI,
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self.kind {
            KernelKind::Hilbert => 1.0 / (std::f64::consts::PI * (x - y)),
        }
    }

    /// Spot-test the size and regularity bounds on random admissible
    /// triples; returns the worst observed ratios (size, regularity).
    pub fn certify(&self, triples: usize, seed: u64) -> (f64, f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst_size = 0.0f64;
        let mut worst_reg = 0.0f64;
        for _ in 0..triples {
            let x: f64 = rng.gen_range(-8.0..8.0);
            let mut y: f64 = rng.gen_range(-8.0..8.0);
            if (x - y).abs() < 1e-6 {
                y += 0.5;
            }
            let ratio = self.eval(x, y).abs() * (x - y).abs() / self.a_size;
            worst_size = worst_size.max(ratio);

            // x' with |x-x'| ≤ max(|x-y|, |x'-y|)/2.
            let dx = rng.gen_range(-0.5..0.5) * (x - y).abs() * 0.5;
            let x2 = x + dx;
            if (x2 - y).abs() < 1e-9 {
                continue;
            }
            let lhs = (self.eval(x, y) - self.eval(x2, y)).abs();
            let rhs = self.a_reg * (x - x2).abs().powf(self.delta)
                / ((x - y).abs() + (x2 - y).abs()).powf(1.0 + self.delta);
            if rhs > 0.0 {
                worst_reg = worst_reg.max(lhs / rhs);
            }
        }
        (worst_size, worst_reg)
    }
}

/// Helper shared by the tests and verification suites.
pub fn center_sample(f: &MeshFunction, values: Vec<f64>) -> OperatorSample {
    OperatorSample {
        values: MeshFunction::from_values(f.n(), f.l_exp(), f.j_exp(), values).unwrap(),
        kind: SampleKind::CellCenterValue,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hilbert_kernel_certificate() {
        let k = KernelDescriptor::hilbert();
        let (size, reg) = k.certify(10_000, 1);
        assert!(size <= 1.0 + 1e-12, "size ratio {size}");
        assert!(reg <= 1.0 + 1e-12, "regularity ratio {reg}");
    }
}
