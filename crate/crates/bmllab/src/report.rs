//! Seeded corpora and the verification suites behind `bmllab verify`.
//!
//! Each check returns a [`CheckRecord`] with a topic anchor, an input
//! digest, the measured value, the bound it was held against, and whether
//! the bound is certified (must hold) or an empirical constant (reported).
//! The acceptance test suite drives the same functions at the pinned scales.

use crate::bml::{self, bml_norm, bml_norm_on_grid, bml_norm_truncated, BmlExponents, NormOutcome};
use crate::blocks::{
    self, block_norm_lower, block_norm_upper, canonical_block, BlockSpace,
};
use crate::hardy::{self, canonical_atom, factorization_step, factorize};
use crate::lorentz::{
    holder_pair, lorentz_norm_via_distribution, mesh_lorentz_norm, power_identity_check,
    LorentzExponents,
};
use crate::mesh::{DyadicCube, Generator, MeshFunction, Region};
use crate::ops;
use crate::rat::{self, from_int, rat};
use crate::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Scales and tolerances for a verification run. The defaults are the
/// acceptance-gate scales.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub corpus_size: usize,
    pub n: usize,
    pub l_exp: i32,
    pub j_exp: i32,
    /// Nontrivial exponent grid; checked at load.
    pub exponents: Vec<[f64; 4]>,
    /// Patterns expected to diverge (the nontriviality gate).
    pub trivial_exponents: Vec<[f64; 4]>,
    pub tol_exact: f64,
    pub tol_pairing: f64,
    pub m_list: Vec<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 1,
            corpus_size: 200,
            n: 1,
            l_exp: 2,
            j_exp: 4,
            exponents: vec![
                [2.0, 2.0, 3.0, 4.0],
                [1.5, 2.0, 2.0, 6.0],
                [2.0, f64::INFINITY, 3.0, 4.5],
                [2.0, 2.0, 3.0, f64::INFINITY],
            ],
            trivial_exponents: vec![[2.0, 2.0, 3.0, 3.0], [2.0, 2.0, 2.0, 5.0]],
            tol_exact: 1e-12,
            tol_pairing: 1e-10,
            m_list: vec![16.0, 64.0, 256.0],
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        for e in &self.exponents {
            let e = BmlExponents::new(e[0], e[1], e[2], e[3])?;
            if !e.nontrivial() {
                return Err(crate::Error::UnsupportedExponents(format!(
                    "config exponent {e:?} is trivial but not marked divergence-expected"
                )));
            }
        }
        for e in &self.trivial_exponents {
            let e = BmlExponents::new(e[0], e[1], e[2], e[3])?;
            if e.nontrivial() {
                return Err(crate::Error::UnsupportedExponents(format!(
                    "config exponent {e:?} marked divergent but is nontrivial"
                )));
            }
        }
        Ok(())
    }

    pub fn primary_exponents(&self) -> BmlExponents {
        let e = self.exponents[0];
        BmlExponents::new(e[0], e[1], e[2], e[3]).unwrap()
    }

    fn digest(&self) -> String {
        format!(
            "seed={},corpus={},n={},L={},J={}",
            self.seed, self.corpus_size, self.n, self.l_exp, self.j_exp
        )
    }
}

/// JSON has no infinity literal; round-trip it through null.
mod maybe_inf {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_some(v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    /// Topic anchor of the identity/inequality, or "plumbing".
    pub anchor: String,
    pub inputs: String,
    #[serde(with = "maybe_inf")]
    pub measured: f64,
    #[serde(with = "maybe_inf")]
    pub bound: f64,
    pub pass: bool,
    /// Certified bounds must pass; empirical constants are reported.
    pub certified: bool,
}

impl CheckRecord {
    fn certified(name: &str, anchor: &str, inputs: String, measured: f64, bound: f64) -> Self {
        CheckRecord {
            name: name.into(),
            anchor: anchor.into(),
            inputs,
            measured,
            bound,
            pass: measured <= bound,
            certified: true,
        }
    }

    fn empirical(name: &str, anchor: &str, inputs: String, measured: f64) -> Self {
        CheckRecord {
            name: name.into(),
            anchor: anchor.into(),
            inputs,
            measured,
            bound: f64::INFINITY,
            pass: measured.is_finite(),
            certified: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub suite: String,
    pub config: String,
    pub records: Vec<CheckRecord>,
}

impl Report {
    pub fn all_certified_pass(&self) -> bool {
        self.records.iter().all(|r| !r.certified || r.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).unwrap()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("name,anchor,inputs,measured,bound,pass,certified\n");
        for r in &self.records {
            out.push_str(&format!(
                "{},{},\"{}\",{:.15e},{:.15e},{},{}\n",
                r.name, r.anchor, r.inputs, r.measured, r.bound, r.pass, r.certified
            ));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Lorentz,
    Bml,
    Operators,
    Blocks,
    Hardy,
    All,
}

impl std::str::FromStr for Suite {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lorentz" => Ok(Suite::Lorentz),
            "bml" => Ok(Suite::Bml),
            "operators" => Ok(Suite::Operators),
            "blocks" => Ok(Suite::Blocks),
            "hardy" => Ok(Suite::Hardy),
            "all" => Ok(Suite::All),
            other => Err(crate::Error::Input(format!("unknown suite '{other}'"))),
        }
    }
}

/// Seeded corpus of random step functions.
pub fn corpus(cfg: &ExperimentConfig, count: usize) -> Vec<MeshFunction> {
    (0..count)
        .map(|k| {
            MeshFunction::synthesize(
                cfg.n,
                cfg.l_exp,
                cfg.j_exp,
                &Generator::RandomStep {
                    seed: cfg.seed.wrapping_add(k as u64),
                    lo: -2.0,
                    hi: 2.0,
                },
            )
            .unwrap()
        })
        .collect()
}

/// Seeded 1-d corpus for the singular-integral checks (those operators are
/// one-dimensional regardless of the configured mesh dimension).
pub fn corpus_1d(cfg: &ExperimentConfig, count: usize) -> Vec<MeshFunction> {
    (0..count)
        .map(|k| {
            MeshFunction::synthesize(
                1,
                cfg.l_exp,
                cfg.j_exp,
                &Generator::RandomStep {
                    seed: cfg.seed.wrapping_add(k as u64),
                    lo: -2.0,
                    hi: 2.0,
                },
            )
            .unwrap()
        })
        .collect()
}

/// Independent closed form for the norm of a dyadic indicator from the two
/// geometric series (one toward coarse scales, one toward fine scales).
pub fn indicator_closed_form(n: i32, j: i32, e: &BmlExponents) -> Option<f64> {
    if !e.nontrivial() {
        return None;
    }
    let nn = n as f64;
    let c_pq = if e.q.is_finite() { (e.p / e.q).powf(1.0 / e.q) } else { 1.0 };
    if e.r.is_finite() {
        let beta = nn * e.r * (1.0 / e.p - 1.0 / e.t);
        let head = (j as f64 * -nn * e.r / e.t).exp2();
        let coarse = head / (1.0 - (-beta).exp2());
        let rho = (nn * (1.0 - e.r / e.t)).exp2();
        let fine = head * rho / (1.0 - rho);
        Some(c_pq * (coarse + fine).powf(1.0 / e.r))
    } else {
        Some(c_pq * (j as f64 * -nn / e.t).exp2())
    }
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// Least-squares slope and R-squared of `y` against `x`.
pub fn regression(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, r2)
}

// ───────────────────────── lorentz suite ─────────────────────────

pub fn check_formula_agreement(cfg: &ExperimentConfig, count: usize) -> CheckRecord {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xA1);
    let mut worst = 0.0f64;
    for k in 0..count {
        let f = MeshFunction::synthesize(
            1,
            cfg.l_exp,
            cfg.j_exp,
            &Generator::RandomStep { seed: cfg.seed.wrapping_add(k as u64), lo: -2.0, hi: 2.0 },
        )
        .unwrap();
        let p = rng.gen_range(0.5..4.0);
        let q = if k % 5 == 0 { f64::INFINITY } else { rng.gen_range(0.5..4.0) };
        let e = LorentzExponents::new(p, q).unwrap();
        let a = mesh_lorentz_norm(&f, e, None);
        let b = lorentz_norm_via_distribution(&f, e);
        worst = worst.max((a - b).abs() / a.max(1.0));
    }
    CheckRecord::certified(
        "lorentz.formula-agreement",
        "lorentz-norm-two-formulas",
        format!("count={count},seed={}", cfg.seed),
        worst,
        cfg.tol_exact,
    )
}

pub fn check_power_identity(cfg: &ExperimentConfig, count: usize) -> CheckRecord {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xA2);
    let mut worst = 0.0f64;
    for k in 0..count {
        let f = MeshFunction::synthesize(
            1,
            cfg.l_exp,
            cfg.j_exp,
            &Generator::RandomStep { seed: cfg.seed.wrapping_add(500 + k as u64), lo: -2.0, hi: 2.0 },
        )
        .unwrap();
        let s = rng.gen_range(0.5..2.5);
        let p = rng.gen_range(0.8..3.0);
        let q = rng.gen_range(0.8..3.0);
        let (lhs, rhs) = power_identity_check(&f, s, p, q).unwrap();
        worst = worst.max((lhs - rhs).abs() / rhs.max(1e-12));
    }
    CheckRecord::certified(
        "lorentz.power-identity",
        "lorentz-power-rescaling",
        format!("count={count},seed={}", cfg.seed),
        worst,
        cfg.tol_exact,
    )
}

pub fn check_holder(cfg: &ExperimentConfig, pairs: usize) -> CheckRecord {
    let exps = [(2.0, 2.0), (2.0, 3.0), (3.0, 1.5), (4.0, 4.0), (1.0, 1.0), (1.5, f64::INFINITY)];
    let mut worst = 0.0f64;
    for k in 0..pairs {
        let f = MeshFunction::synthesize(
            1,
            cfg.l_exp,
            cfg.j_exp,
            &Generator::RandomStep { seed: cfg.seed.wrapping_add(1000 + k as u64), lo: -2.0, hi: 2.0 },
        )
        .unwrap();
        let g = MeshFunction::synthesize(
            1,
            cfg.l_exp,
            cfg.j_exp,
            &Generator::RandomStep { seed: cfg.seed.wrapping_add(9000 + k as u64), lo: -2.0, hi: 2.0 },
        )
        .unwrap();
        let (p, q) = exps[k % exps.len()];
        let (lhs, rhs) = holder_pair(&f, &g, p, q).unwrap();
        if rhs > 0.0 {
            worst = worst.max(lhs / rhs);
        }
    }
    CheckRecord::certified(
        "lorentz.holder-pairing",
        "lorentz-holder-inequality",
        format!("pairs={pairs},seed={}", cfg.seed),
        worst,
        1.0 + cfg.tol_exact,
    )
}

pub fn check_embedding_constants(cfg: &ExperimentConfig) -> Vec<CheckRecord> {
    let fs = corpus(cfg, cfg.corpus_size.min(100));
    let (q1, q2) = (1.5f64, 3.0f64);
    let p = 2.0;
    let mut c_embed = 0.0f64;
    let mut finite_worst = 0.0f64;
    let measure_x = rat::to_f64(fs[0].domain().measure());
    for f in &fs {
        let n1 = mesh_lorentz_norm(f, LorentzExponents::new(p, q1).unwrap(), None);
        let n2 = mesh_lorentz_norm(f, LorentzExponents::new(p, q2).unwrap(), None);
        if n1 > 0.0 {
            c_embed = c_embed.max(n2 / n1);
        }
        let (p1, p2) = (1.25f64, 2.5f64);
        let a = mesh_lorentz_norm(f, LorentzExponents::new(p1, 2.0).unwrap(), None);
        let b = measure_x.powf(1.0 / p1 - 1.0 / p2)
            * mesh_lorentz_norm(f, LorentzExponents::new(p2, 2.0).unwrap(), None);
        if b > 0.0 {
            finite_worst = finite_worst.max(a / b);
        }
    }
    vec![
        CheckRecord::empirical(
            "lorentz.embedding-q-constant",
            "lorentz-secondary-embedding",
            format!("p={p},q1={q1},q2={q2}"),
            c_embed,
        ),
        CheckRecord::certified(
            "lorentz.finite-measure-embedding",
            "lorentz-finite-measure-embedding",
            format!("corpus={}", fs.len()),
            finite_worst,
            1.0 + cfg.tol_exact,
        ),
    ]
}

pub fn lorentz_suite(cfg: &ExperimentConfig) -> Report {
    let mut records = vec![
        check_formula_agreement(cfg, 500.min(cfg.corpus_size * 3)),
        check_power_identity(cfg, 200.min(cfg.corpus_size * 2)),
        check_holder(cfg, 1000.min(cfg.corpus_size * 5)),
    ];
    records.extend(check_embedding_constants(cfg));
    Report { suite: "lorentz".into(), config: cfg.digest(), records }
}

// ───────────────────────── bml suite ─────────────────────────

pub fn check_indicator_closed_form(_cfg: &ExperimentConfig) -> CheckRecord {
    let shapes = [
        (2.0, 2.0, 3.0),
        (1.0, 2.0, 2.0),
        (1.5, f64::INFINITY, 2.0),
        (2.0, 3.0, 2.5),
        (1.0, 1.0, 1.5),
    ];
    let r_of = |t: f64, idx: usize| match idx {
        0 => t + 0.5,
        1 => 2.0 * t,
        2 => 4.0 * t,
        _ => f64::INFINITY,
    };
    let mut worst = 0.0f64;
    let mut cases = 0usize;
    for n in [1usize, 2] {
        for j in [-1i32, 0, 1] {
            for (p, q, t) in shapes {
                for ridx in 0..4 {
                    let e = BmlExponents::new(p, q, t, r_of(t, ridx)).unwrap();
                    if !e.nontrivial() {
                        continue;
                    }
                    let m = vec![0i64; n];
                    let f = bml::dyadic_indicator(&DyadicCube::new(j, &m), 2, 2).unwrap();
                    let got = bml_norm(&f, &e).expect_finite().total;
                    let want = indicator_closed_form(n as i32, j, &e).unwrap();
                    worst = worst.max(rel_err(got, want));
                    cases += 1;
                }
            }
        }
    }
    CheckRecord::certified(
        "bml.indicator-closed-form",
        "bml-indicator-norm",
        format!("cases={cases}"),
        worst,
        1e-10,
    )
}

pub fn check_scaling_law(cfg: &ExperimentConfig) -> CheckRecord {
    let mut worst = 0.0f64;
    for e in cfg.exponents.iter().map(|e| BmlExponents::new(e[0], e[1], e[2], e[3]).unwrap()) {
        for n in [1usize, 2] {
            for j in 0..2 {
                let m = vec![0i64; n];
                let f0 = bml::dyadic_indicator(&DyadicCube::new(j, &m), 2, 3).unwrap();
                let f1 = bml::dyadic_indicator(&DyadicCube::new(j + 1, &m), 2, 3).unwrap();
                let ratio = bml_norm(&f1, &e).expect_finite().total
                    / bml_norm(&f0, &e).expect_finite().total;
                let want = (-(n as f64) / e.t).exp2();
                worst = worst.max(rel_err(ratio, want));
            }
        }
    }
    CheckRecord::certified(
        "bml.scaling-law",
        "bml-dilation-exact-ratio",
        "j=0..2,n=1..2".into(),
        worst,
        cfg.tol_exact,
    )
}

pub fn check_truncation_soundness(cfg: &ExperimentConfig, count: usize) -> CheckRecord {
    let tuples = [[1.0, 1.0, 2.0, 4.0], [2.0, 2.0, 3.0, 4.0], [1.5, 2.0, 2.0, 6.0]];
    let fs = corpus(cfg, count);
    let mut worst = 0.0f64;
    for f in &fs {
        for t in tuples {
            let e = BmlExponents::new(t[0], t[1], t[2], t[3]).unwrap();
            let exact = bml_norm(f, &e).expect_finite().total;
            for window in [(-6, cfg.j_exp + 4), (0, cfg.j_exp), (-20, cfg.j_exp + 20)] {
                let (v, tail) = bml_norm_truncated(f, &e, window.0, window.1).unwrap();
                // Criterion form: |truncated − exact|^r ≤ tail.
                let lit = (exact - v).abs().powf(e.r);
                // Power-sum form, with slack for the cancellation in
                // total^r − value^r when the tail is many digits below it.
                let gap = (exact.powf(e.r) - v.powf(e.r)).abs();
                let slack = tail * 1e-6 + 1e-11 * exact.powf(e.r);
                if tail > 0.0 {
                    worst = worst.max(lit / tail).max(gap / (tail + slack));
                } else if gap > 1e-11 * exact.powf(e.r) {
                    worst = f64::INFINITY;
                }
            }
        }
    }
    CheckRecord::certified(
        "bml.truncation-soundness",
        "bml-truncated-tail-bound",
        format!("count={count},tuples=3"),
        worst,
        1.0,
    )
}

pub fn check_grid_equivalence(cfg: &ExperimentConfig, count: usize) -> Vec<CheckRecord> {
    use rayon::prelude::*;
    let e = cfg.primary_exponents();
    let n1 = (count * 3) / 4;
    let run = |f: &MeshFunction, offsets: &[Vec<u8>]| -> (f64, f64) {
        let plain = bml_norm(f, &e).expect_finite().total;
        let mut worst = 0.0f64;
        let mut reverse = 0.0f64;
        for a in offsets {
            let shifted = bml_norm_on_grid(f, &e, a).expect_finite().total;
            let factor = 6.0f64.powf(f.n() as f64 * (1.0 / e.p - 1.0 / e.t));
            if shifted > 0.0 {
                worst = worst.max(plain / (factor * shifted));
                reverse = reverse.max(shifted / plain);
            }
        }
        (worst, reverse)
    };
    let offs1: Vec<Vec<u8>> = (0..3u8).map(|a| vec![a]).collect();
    let mut offs2 = Vec::new();
    for a0 in 0..3u8 {
        for a1 in 0..3u8 {
            offs2.push(vec![a0, a1]);
        }
    }
    // Parallel over the corpus; reduced in index order for determinism.
    let results: Vec<(f64, f64)> = (0..count)
        .into_par_iter()
        .map(|k| {
            if k < n1 {
                let f = MeshFunction::synthesize(
                    1,
                    cfg.l_exp,
                    cfg.j_exp,
                    &Generator::RandomStep {
                        seed: cfg.seed.wrapping_add(2000 + k as u64),
                        lo: -2.0,
                        hi: 2.0,
                    },
                )
                .unwrap();
                run(&f, &offs1)
            } else {
                let f = MeshFunction::synthesize(
                    2,
                    1,
                    3,
                    &Generator::RandomStep {
                        seed: cfg.seed.wrapping_add(3000 + (k - n1) as u64),
                        lo: -2.0,
                        hi: 2.0,
                    },
                )
                .unwrap();
                run(&f, &offs2)
            }
        })
        .collect();
    let mut worst = 0.0f64;
    let mut reverse_c = 0.0f64;
    for (w, r) in results {
        worst = worst.max(w);
        reverse_c = reverse_c.max(r);
    }
    vec![
        CheckRecord::certified(
            "bml.grid-equivalence",
            "bml-grid-norm-equivalence",
            format!("count={count},offsets=3^n"),
            worst,
            1.0 + cfg.tol_exact,
        ),
        CheckRecord::empirical(
            "bml.grid-equivalence-reverse-constant",
            "bml-grid-norm-equivalence",
            format!("count={count}"),
            reverse_c,
        ),
    ]
}

pub fn check_nontriviality_gate(_cfg: &ExperimentConfig) -> CheckRecord {
    // The 8 patterns {p<t, p=t} x {r<t, r=t, t<r<inf, r=inf}; p>t is a
    // constructor error checked separately.
    let patterns = [
        (2.0, 3.0, 2.0, false),
        (2.0, 3.0, 3.0, false),
        (2.0, 3.0, 4.0, true),
        (2.0, 3.0, f64::INFINITY, true),
        (3.0, 3.0, 2.0, false),
        (3.0, 3.0, 3.0, false),
        (3.0, 3.0, 4.0, false),
        (3.0, 3.0, f64::INFINITY, true),
    ];
    let mut mistakes = 0u32;
    for (p, t, r, want) in patterns {
        let e = BmlExponents::new(p, 2.0, t, r).unwrap();
        if e.nontrivial() != want {
            mistakes += 1;
        }
        let f = bml::dyadic_indicator(&DyadicCube::new(0, &[0]), 2, 3).unwrap();
        match bml_norm(&f, &e) {
            NormOutcome::Divergent => {
                if want {
                    mistakes += 1;
                }
            }
            NormOutcome::Finite(b) => {
                if !want || !b.total.is_finite() {
                    mistakes += 1;
                }
            }
        }
    }
    if BmlExponents::new(3.0, 2.0, 2.0, 4.0).is_ok() {
        mistakes += 1;
    }
    CheckRecord::certified(
        "bml.nontriviality-gate",
        "bml-nontriviality-classification",
        "patterns=8(+p>t)".into(),
        mistakes as f64,
        0.0,
    )
}

pub fn check_dilation_translation_convolution(cfg: &ExperimentConfig) -> Vec<CheckRecord> {
    let e = cfg.primary_exponents();
    let mut worst_dil = 0.0f64;
    for m in [-1i32, 1, 2] {
        let f = bml::dyadic_indicator(&DyadicCube::new(1, &[0]), 3, 4).unwrap();
        let d = bml::dilate_dyadic(&f, m).unwrap();
        let ratio = bml_norm(&d, &e).expect_finite().total / bml_norm(&f, &e).expect_finite().total;
        let want = (-(m as f64) / e.t).exp2();
        worst_dil = worst_dil.max(rel_err(ratio, want));
    }
    let fs = corpus(cfg, cfg.corpus_size.min(50));
    let mut c_trans = 0.0f64;
    for f in &fs {
        let step = vec![f.cell_side(); f.n()];
        if let Ok(t) = bml::translate(f, &step) {
            let a = bml_norm(f, &e).expect_finite().total;
            let b = bml_norm(&t, &e).expect_finite().total;
            if a > 0.0 {
                c_trans = c_trans.max(b / a);
            }
        }
    }
    let mut c_conv = 0.0f64;
    for f in fs.iter().take(20) {
        let g = MeshFunction::synthesize(
            1,
            cfg.l_exp,
            cfg.j_exp,
            &Generator::GaussianBump { center: vec![0.0], width: 0.5, amplitude: 1.0 },
        )
        .unwrap();
        let half = Region::interval(-rat::pow2(cfg.l_exp - 1), rat::pow2(cfg.l_exp - 1)).unwrap();
        let f_small = f.restrict(&half);
        if f_small.is_zero() {
            continue;
        }
        if let Ok(conv) = bml::convolve(&g, &f_small) {
            let lhs = bml_norm(&conv, &e).expect_finite().total;
            let rhs = g.l1_norm() * bml_norm(&f_small, &e).expect_finite().total;
            if rhs > 0.0 {
                c_conv = c_conv.max(lhs / rhs);
            }
        }
    }
    vec![
        CheckRecord::certified(
            "bml.dilation-exactness",
            "bml-dilation-exact-ratio",
            "m=-1,1,2".into(),
            worst_dil,
            cfg.tol_exact,
        ),
        CheckRecord::empirical(
            "bml.translation-constant",
            "bml-translation-invariance",
            format!("corpus={}", fs.len()),
            c_trans,
        ),
        CheckRecord::empirical(
            "bml.convolution-constant",
            "bml-convolution-bound",
            "corpus=20".into(),
            c_conv,
        ),
    ]
}

pub fn check_phi_embedding(cfg: &ExperimentConfig, draws: usize) -> CheckRecord {
    let e = cfg.primary_exponents();
    let n_cubes = 8usize;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xF1);
    let offsets: Vec<Vec<i64>> = (0..n_cubes).map(|i| vec![(i as i64) * 8 - 32]).collect();
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for _ in 0..draws {
        let coeffs: Vec<f64> = (0..n_cubes).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let phi = MeshFunction::synthesize(
            1,
            6,
            0,
            &Generator::SumOfShiftedIndicators { offsets: offsets.clone(), coeffs: coeffs.clone() },
        )
        .unwrap();
        let norm = bml_norm(&phi, &e).expect_finite().total;
        let lr = if e.r.is_finite() {
            coeffs.iter().map(|c| c.abs().powf(e.r)).sum::<f64>().powf(1.0 / e.r)
        } else {
            coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()))
        };
        if lr > 1e-9 {
            let ratio = norm / lr;
            lo = lo.min(ratio);
            hi = hi.max(ratio);
        }
    }
    CheckRecord::certified(
        "bml.ell-r-embedding",
        "bml-ell-r-embedding",
        format!("N={n_cubes},draws={draws},band=[{lo:.4},{hi:.4}]"),
        hi / lo,
        4.0,
    )
}

pub fn check_separation_and_fatou(cfg: &ExperimentConfig) -> Vec<CheckRecord> {
    let e = cfg.primary_exponents();
    let f = bml::dyadic_indicator(&DyadicCube::new(0, &[0]), 5, 2).unwrap();
    let y = bml::separation_offset(&f, &f, &e, 0.1).unwrap();
    let shifted = bml::translate(&f, &y).unwrap();
    let sum = shifted.add(&f).unwrap();
    let lhs = bml_norm(&sum, &e).expect_finite().total;
    let rhs = 1.1 * (bml_norm(&f, &e).expect_finite().total.powf(e.r) * 2.0).powf(1.0 / e.r);
    let g = corpus(cfg, 1).remove(0);
    let full = bml_norm(&g, &e).expect_finite().total;
    let mut prev = 0.0f64;
    let mut monotone_ok = true;
    let len = g.values().len();
    for frac in 1..=4usize {
        let mut part = MeshFunction::zero(g.n(), g.l_exp(), g.j_exp()).unwrap();
        let upto = len * frac / 4;
        for i in 0..upto {
            part.values_mut()[i] = g.values()[i];
        }
        let v = bml_norm(&part, &e).expect_finite().total;
        if v + 1e-13 < prev {
            monotone_ok = false;
        }
        prev = v;
    }
    let fatou_gap = rel_err(prev, full);
    let e1 = BmlExponents::new(e.p, e.q, e.t, e.t + 0.7).unwrap();
    let e2 = BmlExponents::new(e.p, e.q, e.t, 2.0 * e.t + 2.0).unwrap();
    let n1 = bml_norm(&g, &e1).expect_finite().total;
    let n2 = bml_norm(&g, &e2).expect_finite().total;
    vec![
        CheckRecord::certified(
            "bml.separation-offset",
            "bml-separated-sum-inequality",
            format!("y={:?}", y.iter().map(|x| rat::to_f64(*x)).collect::<Vec<_>>()),
            lhs,
            rhs,
        ),
        CheckRecord::certified(
            "bml.fatou-monotone",
            "bml-monotone-convergence",
            "truncation family".into(),
            if monotone_ok { fatou_gap } else { f64::INFINITY },
            cfg.tol_exact,
        ),
        CheckRecord::certified(
            "bml.r-embedding",
            "bml-primary-embedding",
            format!("r1={},r2={}", e1.r, e2.r),
            n2 / n1.max(1e-300),
            1.0 + cfg.tol_exact,
        ),
    ]
}

pub fn check_tail_diagnostics(cfg: &ExperimentConfig) -> CheckRecord {
    let e = cfg.primary_exponents();
    let f = bml::dyadic_indicator(&DyadicCube::new(0, &[0]), cfg.l_exp, cfg.j_exp).unwrap();
    let beyond = bml::tail_norm(&f, &e, from_int(2)).unwrap();
    let zero_b = bml::translation_modulus(&f, &e, rat(0, 1)).unwrap();
    let half = bml::tail_norm(&f, &e, rat(1, 2)).unwrap();
    let expected = bml_norm(
        &MeshFunction::synthesize(
            1,
            cfg.l_exp,
            cfg.j_exp,
            &Generator::Indicator(Region::interval(rat(1, 2), from_int(1)).unwrap()),
        )
        .unwrap(),
        &e,
    )
    .expect_finite()
    .total;
    let worst = beyond.max(zero_b).max(rel_err(half, expected));
    CheckRecord::certified(
        "bml.compactness-diagnostics",
        "bml-tail-and-translation-modulus",
        "indicator cases".into(),
        worst,
        cfg.tol_exact,
    )
}

pub fn bml_suite(cfg: &ExperimentConfig) -> Report {
    let mut records = vec![
        check_indicator_closed_form(cfg),
        check_scaling_law(cfg),
        check_truncation_soundness(cfg, 100.min(cfg.corpus_size)),
    ];
    records.extend(check_grid_equivalence(cfg, cfg.corpus_size));
    records.push(check_nontriviality_gate(cfg));
    records.extend(check_dilation_translation_convolution(cfg));
    records.push(check_phi_embedding(cfg, 50));
    records.extend(check_separation_and_fatou(cfg));
    records.push(check_tail_diagnostics(cfg));
    Report { suite: "bml".into(), config: cfg.digest(), records }
}

// ───────────────────────── operators suite ─────────────────────────

pub fn check_operator_exactness(cfg: &ExperimentConfig) -> Vec<CheckRecord> {
    let chi = MeshFunction::synthesize(1, 2, 4, &Generator::DyadicIndicator { j: 0, m: vec![0] })
        .unwrap();
    let t2 = ops::hilbert_at(&chi, from_int(2)).unwrap();
    let want_t = 2.0f64.ln() / std::f64::consts::PI;
    let s = ops::fractional_integral(&chi, 0.5).unwrap();
    let hf = rat::to_f64(chi.cell_side());
    let x: f64 = 2.0 + hf / 2.0;
    let cell = s.values.locate(&[rat::from_f64_exact(x).unwrap()]).unwrap();
    let want_i = 2.0 * (x.sqrt() - (x - 1.0).sqrt());
    let mut worst_anti = 0.0f64;
    for k in 0..100u64 {
        let f = MeshFunction::synthesize(
            1,
            cfg.l_exp,
            cfg.j_exp,
            &Generator::RandomStep { seed: cfg.seed.wrapping_add(4000 + k), lo: -2.0, hi: 2.0 },
        )
        .unwrap();
        let g = MeshFunction::synthesize(
            1,
            cfg.l_exp,
            cfg.j_exp,
            &Generator::RandomStep { seed: cfg.seed.wrapping_add(5000 + k), lo: -2.0, hi: 2.0 },
        )
        .unwrap();
        let a = ops::hilbert_pairing(&f, &g).unwrap();
        let b = ops::hilbert_pairing(&g, &f).unwrap();
        worst_anti = worst_anti.max((a + b).abs() / a.abs().max(1.0));
    }
    let f = corpus_1d(cfg, 1).remove(0);
    let b = MeshFunction::zero(1, cfg.l_exp, cfg.j_exp).unwrap().map(|_| 2.5);
    let comm = ops::commutator(&b, &f).unwrap();
    vec![
        CheckRecord::certified(
            "ops.hilbert-indicator-value",
            "hilbert-log-closed-form",
            "T chi_[0,1)(2)".into(),
            rel_err(t2, want_t),
            cfg.tol_exact,
        ),
        CheckRecord::certified(
            "ops.fractional-indicator-value",
            "fractional-antiderivative",
            "I_1/2 chi_[0,1) near 2".into(),
            rel_err(s.values.get(&cell), want_i),
            cfg.tol_exact,
        ),
        CheckRecord::certified(
            "ops.pairing-antisymmetry",
            "hilbert-adjoint-is-minus",
            "pairs=100".into(),
            worst_anti,
            cfg.tol_pairing,
        ),
        CheckRecord::certified(
            "ops.commutator-constant-symbol",
            "commutator-definition",
            "b=const".into(),
            comm.values.sup_norm(),
            cfg.tol_exact,
        ),
    ]
}

pub fn check_commutator_duality(cfg: &ExperimentConfig, pairs: usize) -> CheckRecord {
    let mut worst = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xB7);
    for k in 0..pairs {
        let g = MeshFunction::synthesize(
            1,
            3,
            4,
            &Generator::Indicator(Region::interval(from_int(-4), from_int(-1)).unwrap()),
        )
        .unwrap()
        .mul(
            &MeshFunction::synthesize(
                1,
                3,
                4,
                &Generator::RandomStep { seed: cfg.seed.wrapping_add(6000 + k as u64), lo: -1.0, hi: 1.0 },
            )
            .unwrap(),
        )
        .unwrap();
        let h = MeshFunction::synthesize(
            1,
            3,
            4,
            &Generator::Indicator(Region::interval(from_int(1), from_int(4)).unwrap()),
        )
        .unwrap()
        .mul(
            &MeshFunction::synthesize(
                1,
                3,
                4,
                &Generator::RandomStep { seed: cfg.seed.wrapping_add(7000 + k as u64), lo: -1.0, hi: 1.0 },
            )
            .unwrap(),
        )
        .unwrap();
        let mut b = MeshFunction::zero(1, 3, 4).unwrap();
        let freq = rng.gen_range(0.3..1.5);
        for i in 0..b.cells_per_axis() {
            let x = rat::to_f64(b.cell_center(0, i));
            b.values_mut()[i] = (freq * x).sin();
        }
        let (lhs, rhs) = ops::commutator_duality(&b, &g, &h).unwrap();
        worst = worst.max((lhs - rhs).abs() / lhs.abs().max(1.0));
    }
    CheckRecord::certified(
        "ops.commutator-duality",
        "commutator-adjoint-identity",
        format!("pairs={pairs},disjoint supports"),
        worst,
        cfg.tol_pairing,
    )
}

pub fn check_kernel_certificate(cfg: &ExperimentConfig) -> CheckRecord {
    let k = ops::KernelDescriptor::hilbert();
    let (size, reg) = k.certify(10_000, cfg.seed);
    CheckRecord::certified(
        "ops.kernel-certificate",
        "standard-kernel-bounds",
        "triples=10000".into(),
        size.max(reg),
        1.0 + cfg.tol_exact,
    )
}

pub fn check_maximal_boundedness(cfg: &ExperimentConfig, count: usize) -> Vec<CheckRecord> {
    use rayon::prelude::*;
    let e = cfg.primary_exponents();
    let fs = corpus(cfg, count);
    let per_fn: Vec<[(f64, f64); 2]> = fs
        .par_iter()
        .map(|f| {
            let mut out = [(0.0f64, 0.0f64); 2];
            for (slot, extra) in [(0usize, 0u32), (1, 2)] {
                let g = f.refine(extra).unwrap();
                let nf = bml_norm(&g, &e).expect_finite().total;
                if nf == 0.0 {
                    continue;
                }
                let m = ops::maximal_dyadic(&g, &vec![0u8; g.n()]);
                let nm = bml_norm(&m, &e).expect_finite().total;
                out[slot].0 = nm / nf;
                let sh = ops::sharp_maximal(&g);
                let ns = bml_norm(&sh, &e).expect_finite().total;
                if ns > 0.0 {
                    out[slot].1 = nf / ns;
                }
            }
            out
        })
        .collect();
    let mut sup_ratio = [0.0f64; 2];
    let mut sup_sharp = [0.0f64; 2];
    for row in &per_fn {
        for slot in 0..2 {
            sup_ratio[slot] = sup_ratio[slot].max(row[slot].0);
            sup_sharp[slot] = sup_sharp[slot].max(row[slot].1);
        }
    }
    let stability = (sup_ratio[1] - sup_ratio[0]).abs() / sup_ratio[0];
    let stability_sharp = (sup_sharp[1] - sup_sharp[0]).abs() / sup_sharp[0];
    // The 10% refinement-stability protocol is pinned to the 1-d corpus;
    // other mesh dimensions report the drift without asserting it.
    let pinned = cfg.n == 1;
    let stab_record = |name: &str, anchor: &str, v: f64| {
        if pinned {
            CheckRecord::certified(name, anchor, format!("J->{}", cfg.j_exp + 2), v, 0.10)
        } else {
            CheckRecord::empirical(name, anchor, format!("J->{}", cfg.j_exp + 2), v)
        }
    };
    vec![
        CheckRecord::empirical(
            "ops.maximal-boundedness-constant",
            "maximal-bml-boundedness",
            format!("corpus={count}"),
            sup_ratio[0],
        ),
        stab_record("ops.maximal-refinement-stability", "maximal-bml-boundedness", stability),
        CheckRecord::empirical(
            "ops.sharp-reverse-constant",
            "sharp-maximal-reverse-bound",
            format!("corpus={count}"),
            sup_sharp[0],
        ),
        stab_record("ops.sharp-reverse-stability", "sharp-maximal-reverse-bound", stability_sharp),
    ]
}

pub fn check_pointwise_maximal_properties(cfg: &ExperimentConfig) -> Vec<CheckRecord> {
    let fs = corpus(cfg, cfg.corpus_size.min(40));
    // Difference form normalized by the pair's scale: ratios of two
    // dust-level sups are meaningless where both sides vanish.
    let mut worst_sub = 0.0f64;
    let mut worst_pow = 0.0f64;
    let mut worst_sharp = 0.0f64;
    for pair in fs.chunks(2) {
        if pair.len() < 2 {
            break;
        }
        let (f, g) = (&pair[0], &pair[1]);
        let scale = f.sup_norm() + g.sup_norm();
        let offs = vec![0u8; f.n()];
        let m_sum = ops::maximal_dyadic(&f.add(g).unwrap(), &offs);
        let bound = ops::maximal_dyadic(f, &offs).add(&ops::maximal_dyadic(g, &offs)).unwrap();
        for (a, b) in m_sum.values().iter().zip(bound.values()) {
            worst_sub = worst_sub.max((a - b) / scale);
        }
        let m1 = ops::powered_maximal(f, 1.0, &offs).unwrap();
        let m2 = ops::powered_maximal(f, 2.0, &offs).unwrap();
        for (a, b) in m1.values().iter().zip(m2.values()) {
            worst_pow = worst_pow.max((a - b) / scale);
        }
        let sh = ops::sharp_maximal(f);
        let m = ops::maximal_over_grids(f);
        for (s, mv) in sh.values().iter().zip(m.values()) {
            worst_sharp = worst_sharp.max((s - 2.0 * mv) / scale);
        }
    }
    vec![
        CheckRecord::certified(
            "ops.maximal-sublinear",
            "maximal-sublinearity",
            "corpus pairs, scale-relative".into(),
            worst_sub,
            cfg.tol_exact,
        ),
        CheckRecord::certified(
            "ops.powered-monotone",
            "powered-maximal-monotonicity",
            "eta=1 vs 2, scale-relative".into(),
            worst_pow,
            cfg.tol_exact,
        ),
        CheckRecord::certified(
            "ops.sharp-le-2-maximal",
            "sharp-vs-maximal-pointwise",
            "corpus, scale-relative".into(),
            worst_sharp,
            cfg.tol_exact,
        ),
    ]
}

pub fn check_l2_behavior(cfg: &ExperimentConfig) -> Vec<CheckRecord> {
    let e22 = LorentzExponents::new(2.0, 2.0).unwrap();
    let mut worst_smooth = 0.0f64;
    for (i, w) in [0.6, 0.9, 1.3].iter().enumerate() {
        let f = MeshFunction::synthesize(
            1,
            4,
            6,
            &Generator::GaussianBump { center: vec![i as f64 - 1.0], width: *w, amplitude: 1.0 },
        )
        .unwrap();
        let tf = ops::hilbert_transform(&f).unwrap().values;
        let ratio = mesh_lorentz_norm(&tf, e22, None) / mesh_lorentz_norm(&f, e22, None);
        worst_smooth = worst_smooth.max((ratio - 1.0).abs());
    }
    let mut worst_gen = 0.0f64;
    for f in corpus_1d(cfg, cfg.corpus_size.min(60)) {
        let nf = mesh_lorentz_norm(&f, e22, None);
        if nf == 0.0 {
            continue;
        }
        let tf = ops::hilbert_transform(&f).unwrap().values;
        worst_gen = worst_gen.max(mesh_lorentz_norm(&tf, e22, None) / nf);
    }
    vec![
        CheckRecord::certified(
            "ops.hilbert-l2-smooth-isometry",
            "hilbert-l2-isometry",
            "gaussian profiles".into(),
            worst_smooth,
            0.05,
        ),
        CheckRecord::certified(
            "ops.hilbert-l2-corpus-bound",
            "hilbert-l2-isometry",
            "corpus".into(),
            worst_gen,
            1.05,
        ),
    ]
}

pub fn check_fractional_pointwise(cfg: &ExperimentConfig) -> CheckRecord {
    let alpha = 0.5;
    let t = 1.5;
    let e = BmlExponents::new(1.0, 1.0, t, f64::INFINITY).unwrap();
    let mut c = 0.0f64;
    for f in corpus_1d(cfg, 30) {
        let f = f.abs();
        let norm = bml_norm(&f, &e).expect_finite().total;
        if norm == 0.0 {
            continue;
        }
        let ia = ops::fractional_integral(&f, alpha).unwrap().values;
        let m = ops::maximal_over_grids(&f);
        let expo = t * alpha;
        for (iv, mv) in ia.values().iter().zip(m.values()) {
            if *mv > 0.0 {
                c = c.max(iv / (norm.powf(expo) * mv.powf(1.0 - expo)));
            }
        }
    }
    CheckRecord::empirical(
        "ops.fractional-pointwise-constant",
        "fractional-maximal-pointwise",
        format!("alpha={alpha},t={t}"),
        c,
    )
}

pub fn check_cotlar(cfg: &ExperimentConfig) -> Vec<CheckRecord> {
    // Fixed truncation-radius family (the coarse mesh's dyadic grid), so
    // refinement changes the discretization, not the operator.
    let zetas: Vec<f64> = (-(cfg.l_exp + 1)..=cfg.j_exp)
        .map(|k| rat::to_f64(rat::pow2(-k)))
        .collect();
    let mut consts = [0.0f64; 2];
    for (slot, extra) in [(0usize, 0u32), (1, 1)] {
        for f in corpus_1d(cfg, 15) {
            let f = f.refine(extra).unwrap();
            let mut mt = MeshFunction::zero(f.n(), f.l_exp(), f.j_exp()).unwrap();
            for &z in &zetas {
                let t = ops::truncated_transform(&f, z).unwrap();
                mt = mt.zip(&t.values, |m, v| m.max(v.abs())).unwrap();
            }
            let tf = ops::hilbert_transform(&f).unwrap().values;
            let m_tf = ops::powered_maximal(&tf, 2.0, &[0]).unwrap();
            let mf = ops::maximal_over_grids(&f);
            for i in 0..mt.values().len() {
                let denom = m_tf.values()[i] + mf.values()[i];
                if denom > 1e-12 {
                    consts[slot] = consts[slot].max(mt.values()[i] / denom);
                }
            }
        }
    }
    let stability = (consts[1] - consts[0]).abs() / consts[0];
    vec![
        CheckRecord::empirical("ops.cotlar-constant", "cotlar-inequality", "ell=2".into(), consts[0]),
        CheckRecord::certified(
            "ops.cotlar-stability",
            "cotlar-inequality",
            "refined once".into(),
            stability,
            0.10,
        ),
    ]
}

pub fn check_commutator_sharp_bound(cfg: &ExperimentConfig) -> CheckRecord {
    let b = MeshFunction::synthesize(
        1,
        cfg.l_exp,
        cfg.j_exp,
        &Generator::DyadicIndicator { j: -1, m: vec![0] },
    )
    .unwrap();
    let bmo = ops::bmo_norm(&b);
    let mut c = 0.0f64;
    for f in corpus_1d(cfg, 10) {
        let comm = ops::commutator(&b, &f).unwrap().values;
        let sharp = ops::sharp_maximal(&comm);
        let tf = ops::hilbert_transform(&f).unwrap().values;
        let m_s = ops::powered_maximal(&tf, 2.0, &[0]).unwrap();
        let m_t = ops::powered_maximal(&f, 2.0, &[0]).unwrap();
        for i in 0..sharp.values().len() {
            let denom = bmo.lower * (m_s.values()[i] + m_t.values()[i]);
            if denom > 1e-12 {
                c = c.max(sharp.values()[i] / denom);
            }
        }
    }
    CheckRecord::empirical(
        "ops.commutator-sharp-constant",
        "commutator-sharp-estimate",
        "eta1=eta2=2".into(),
        c,
    )
}

pub fn check_oscillation_diagnostics(_cfg: &ExperimentConfig) -> Vec<CheckRecord> {
    let b = MeshFunction::synthesize(1, 2, 3, &Generator::DyadicIndicator { j: 0, m: vec![0] })
        .unwrap();
    let est = ops::bmo_norm(&b);
    let median = {
        let mut m = MeshFunction::zero(1, 2, 0).unwrap();
        let i0 = m.locate(&[from_int(0)]).unwrap()[0];
        m.values_mut()[i0] = 1.0;
        m.values_mut()[i0 + 1] = 2.0;
        m.values_mut()[i0 + 2] = 3.0;
        ops::median_value(&m, &Region::interval(from_int(0), from_int(3)).unwrap()).unwrap()
    };
    let bump = MeshFunction::synthesize(
        1,
        3,
        3,
        &Generator::GaussianBump { center: vec![0.0], width: 0.5, amplitude: 1.0 },
    )
    .unwrap();
    let prof = ops::cmo_profile(&bump, &[-4, -2, 0, 2]);
    let coarse_decay = prof.curve_large_scale().first().unwrap().1;
    vec![
        CheckRecord::certified(
            "ops.bmo-indicator-lower",
            "bmo-oscillation-maximum",
            "b=chi_[0,1)".into(),
            rel_err(est.lower, 0.5),
            1e-12,
        ),
        CheckRecord::certified(
            "ops.median-example",
            "median-value-definition",
            "values 1,2,3".into(),
            (median - 2.0).abs(),
            0.0,
        ),
        CheckRecord::certified(
            "ops.cmo-bump-decay",
            "cmo-vanishing-oscillation",
            "gaussian bump".into(),
            coarse_decay,
            0.1,
        ),
    ]
}

pub fn operators_suite(cfg: &ExperimentConfig) -> Report {
    let mut records = check_operator_exactness(cfg);
    records.push(check_commutator_duality(cfg, 50));
    records.push(check_kernel_certificate(cfg));
    records.extend(check_maximal_boundedness(cfg, cfg.corpus_size));
    records.extend(check_pointwise_maximal_properties(cfg));
    records.extend(check_l2_behavior(cfg));
    records.push(check_fractional_pointwise(cfg));
    records.extend(check_cotlar(cfg));
    records.push(check_commutator_sharp_bound(cfg));
    records.extend(check_oscillation_diagnostics(cfg));
    Report { suite: "operators".into(), config: cfg.digest(), records }
}

// ───────────────────────── blocks suite ─────────────────────────

pub fn check_block_machinery(cfg: &ExperimentConfig) -> Vec<CheckRecord> {
    let space = BlockSpace::new(cfg.primary_exponents()).unwrap();
    let b = canonical_block(space, DyadicCube::new(0, &[0]), 3, 4).unwrap();
    let md = blocks::decompose_maximal_of_block(&b, 3, 4).unwrap();
    let td = blocks::decompose_t_of_block(&b, 3, 4).unwrap();
    let invalid = md
        .decomposition
        .validate_all()
        .iter()
        .chain(td.decomposition.validate_all().iter())
        .filter(|v| !v.ok)
        .count();
    let cost_gap = rel_err(md.decomposition.cost, md.closed_form_cost)
        .max(rel_err(td.decomposition.cost, td.closed_form_cost));
    let mut violations = 0usize;
    let mut gap_ratios = Vec::new();
    for f in corpus(cfg, cfg.corpus_size.min(60)) {
        let family = blocks::default_test_family(&f, cfg.seed, 50);
        let lo = block_norm_lower(&f, space, &family).unwrap();
        let up = block_norm_upper(&f, space).unwrap();
        if lo > up * (1.0 + 1e-12) {
            violations += 1;
        }
        if lo > 0.0 {
            gap_ratios.push(up / lo);
        }
    }
    gap_ratios.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median_gap = gap_ratios.get(gap_ratios.len() / 2).copied().unwrap_or(1.0);
    vec![
        CheckRecord::certified(
            "blocks.decomposition-validity",
            "maximal-and-singular-block-decompositions",
            "canonical block".into(),
            invalid as f64,
            0.0,
        ),
        CheckRecord::certified(
            "blocks.decomposition-cost-closed-form",
            "block-decomposition-geometric-cost",
            "canonical block".into(),
            cost_gap,
            1e-10,
        ),
        CheckRecord::certified(
            "blocks.duality-sandwich",
            "block-norm-interval",
            format!("corpus={}", cfg.corpus_size.min(60)),
            violations as f64,
            0.0,
        ),
        CheckRecord::empirical(
            "blocks.interval-median-gap",
            "block-norm-interval",
            "upper/lower".into(),
            median_gap,
        ),
    ]
}

pub fn check_duality_pairing(cfg: &ExperimentConfig, pairs: usize) -> CheckRecord {
    let space = BlockSpace::new(cfg.primary_exponents()).unwrap();
    let mut worst = 0.0f64;
    for k in 0..pairs {
        let f = MeshFunction::synthesize(
            1,
            cfg.l_exp,
            cfg.j_exp,
            &Generator::RandomStep { seed: cfg.seed.wrapping_add(8000 + k as u64), lo: -2.0, hi: 2.0 },
        )
        .unwrap();
        let g = MeshFunction::synthesize(
            1,
            cfg.l_exp,
            cfg.j_exp,
            &Generator::RandomStep { seed: cfg.seed.wrapping_add(8500 + k as u64), lo: -2.0, hi: 2.0 },
        )
        .unwrap();
        let nf = bml_norm(&f, &space.primal).total().unwrap();
        let ug = block_norm_upper(&g, space).unwrap();
        let h = rat::to_f64(f.cell_volume());
        let pairing: f64 = f.mul(&g).unwrap().values().iter().sum::<f64>() * h;
        if nf * ug > 0.0 {
            worst = worst.max(pairing.abs() / (nf * ug));
        }
    }
    CheckRecord::certified(
        "blocks.pairing-inequality",
        "bml-block-pairing",
        format!("pairs={pairs}"),
        worst,
        1.0 + cfg.tol_pairing,
    )
}

pub fn check_chi_upper_scaling(cfg: &ExperimentConfig) -> Vec<CheckRecord> {
    let space = BlockSpace::new(cfg.primary_exponents()).unwrap();
    let tp = space.t_dual();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut worst_band = 0.0f64;
    for j in [-1i32, 0, 1, 2] {
        let g = bml::dyadic_indicator(&DyadicCube::new(j, &[0]), 2, 4).unwrap();
        let u = block_norm_upper(&g, space).unwrap();
        let ratio = u / (-(j as f64) / tp).exp2();
        worst_band = worst_band.max(ratio.max(1.0 / ratio));
        xs.push(-(j as f64) * 2.0f64.ln());
        ys.push(u.ln());
    }
    let (slope, r2) = regression(&xs, &ys);
    vec![
        CheckRecord::certified(
            "blocks.chi-upper-band",
            "block-norm-of-indicators",
            "j=-1..2".into(),
            worst_band,
            4.0,
        ),
        CheckRecord::certified(
            "blocks.chi-upper-exponent-fit",
            "block-norm-of-indicators",
            format!("slope={slope:.6},want={:.6}", 1.0 / tp),
            1.0 - r2,
            1e-3,
        ),
    ]
}

pub fn check_block_fatou_and_kothe(cfg: &ExperimentConfig) -> Vec<CheckRecord> {
    let space = BlockSpace::new(cfg.primary_exponents()).unwrap();
    let g = corpus(cfg, 1).remove(0).abs();
    let len = g.values().len();
    let mut uppers = Vec::new();
    for frac in 1..=4usize {
        let mut part = MeshFunction::zero(g.n(), g.l_exp(), g.j_exp()).unwrap();
        for i in 0..(len * frac / 4) {
            part.values_mut()[i] = g.values()[i];
        }
        if !part.is_zero() {
            uppers.push(block_norm_upper(&part, space).unwrap());
        }
    }
    let final_upper = *uppers.last().unwrap();
    let max_stage = uppers.iter().fold(0.0f64, |m, &u| m.max(u));
    let family = blocks::default_test_family(&g, cfg.seed, 80);
    let lo = block_norm_lower(&g, space, &family).unwrap();
    let up = block_norm_upper(&g, space).unwrap();
    vec![
        CheckRecord::empirical(
            "blocks.fatou-constant",
            "block-fatou-property",
            "monotone truncations".into(),
            final_upper / max_stage.max(1e-300),
        ),
        CheckRecord::empirical(
            "blocks.kothe-gap",
            "block-koethe-consistency",
            format!("family={}", family.len()),
            up / lo.max(1e-300),
        ),
    ]
}

pub fn blocks_suite(cfg: &ExperimentConfig) -> Report {
    let mut records = check_block_machinery(cfg);
    records.push(check_duality_pairing(cfg, 300.min(cfg.corpus_size * 2)));
    records.extend(check_chi_upper_scaling(cfg));
    records.extend(check_block_fatou_and_kothe(cfg));
    Report { suite: "blocks".into(), config: cfg.digest(), records }
}

// ───────────────────────── hardy suite ─────────────────────────

pub fn check_homogeneity(cfg: &ExperimentConfig, random_omegas: usize) -> Vec<CheckRecord> {
    let q = Region::interval(from_int(0), from_int(1)).unwrap();
    let (c, sign_ok) = hardy::homogeneity_constant(&q, &q, 16.0).unwrap();
    let want = 16.0 / std::f64::consts::PI * (8.5f64 / 7.5).ln();
    let mut min_c = f64::INFINITY;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xC3);
    for m in [16.0, 64.0] {
        for _ in 0..random_omegas {
            let a = rng.gen_range(0..14) as i128;
            let b = rng.gen_range((a + 1)..16);
            let omega = Region::interval(rat(a, 16), rat(b, 16)).unwrap();
            let (c, ok) = hardy::homogeneity_constant(&q, &omega, m).unwrap();
            if !ok {
                min_c = 0.0;
            }
            min_c = min_c.min(c);
        }
    }
    vec![
        CheckRecord::certified(
            "hardy.homogeneity-spot-value",
            "hilbert-homogeneity-lower-bound",
            format!("M=16,sign_ok={sign_ok}"),
            rel_err(c, want),
            1e-10,
        ),
        CheckRecord::certified(
            "hardy.homogeneity-floor",
            "hilbert-homogeneity-lower-bound",
            format!("random_omegas={random_omegas},M=16,64,min={min_c:.4}"),
            0.2,
            min_c,
        ),
    ]
}

/// Envelope-constant slope against M for single factorization steps.
pub fn check_envelope_slope(cfg: &ExperimentConfig) -> CheckRecord {
    let e = cfg.primary_exponents();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &m in &cfg.m_list {
        let l_need =
            hardy::step_required_l(&Region::interval(from_int(0), from_int(1)).unwrap(), m);
        let atom = canonical_atom(
            Region::interval(from_int(0), from_int(1)).unwrap(),
            l_need.max(4),
            6,
        )
        .unwrap();
        let step = factorization_step(&atom, m, &e).unwrap();
        xs.push(m.ln());
        ys.push(step.certificate.envelope_constant.ln());
    }
    let (slope, _) = regression(&xs, &ys);
    let pass_measure = if (-1.3..=-0.7).contains(&slope) { 0.0 } else { 1.0 };
    CheckRecord::certified(
        "hardy.envelope-slope",
        "two-bump-h1-bound",
        format!("M={:?},slope={slope:.4}", cfg.m_list),
        pass_measure,
        0.0,
    )
}

pub struct FactorizationSummary {
    pub searched_m: f64,
    pub state: hardy::FactorizationState,
    pub ratios: Vec<f64>,
}

/// Search M over powers of two 2^4..2^10 for the smallest with a one-round
/// certified contraction at or under 0.75 on the canonical atom, then run
/// `rounds` rounds at that M.
pub fn run_factorization(
    e: &BmlExponents,
    l_exp: i32,
    j_exp: i32,
    rounds: usize,
) -> Result<FactorizationSummary> {
    let cube = Region::interval(from_int(0), from_int(1)).unwrap();
    let mut searched = None;
    for pow in 4..=10u32 {
        let m = (1u64 << pow) as f64;
        let l_need = hardy::step_required_l(&cube, m).max(l_exp);
        let atom = canonical_atom(cube, l_need, j_exp)?;
        let probe = factorize(vec![(1.0, atom)], e, m, 1)?;
        let ratio = probe.rounds[0].certified_h1 / probe.initial_h1;
        if ratio <= 0.75 {
            searched = Some(m);
            break;
        }
    }
    let m = searched.ok_or_else(|| {
        crate::Error::UnsupportedExponents("no M in 2^4..2^10 reaches the 0.75 contraction".into())
    })?;
    let l_need = hardy::step_required_l(&cube, m).max(l_exp);
    let atom = canonical_atom(cube, l_need, j_exp)?;
    let state = factorize(vec![(1.0, atom)], e, m, rounds)?;
    let mut ratios = Vec::new();
    let mut prev = state.initial_h1;
    for r in &state.rounds {
        ratios.push(r.certified_h1 / prev);
        prev = r.certified_h1;
    }
    Ok(FactorizationSummary { searched_m: m, state, ratios })
}

pub fn check_factorization(cfg: &ExperimentConfig, l_exp: i32, j_exp: i32) -> Vec<CheckRecord> {
    let e = cfg.primary_exponents();
    let summary = run_factorization(&e, l_exp, j_exp, 3).unwrap();
    let gap = summary.state.reconstruction_gap();
    let worst_ratio = summary.ratios.iter().fold(0.0f64, |m, &r| m.max(r));
    let strictly_decreasing = summary.ratios.iter().all(|&r| r < 1.0);
    vec![
        CheckRecord::certified(
            "hardy.factorization-reconstruction",
            "hardy-factorization-identity",
            format!("M={},rounds=3,L={l_exp},J={j_exp}", summary.searched_m),
            gap,
            1e-9,
        ),
        CheckRecord::certified(
            "hardy.factorization-contraction",
            "hardy-factorization-contraction",
            format!("ratios={:?}", summary.ratios),
            if strictly_decreasing { worst_ratio } else { f64::INFINITY },
            0.75,
        ),
    ]
}

pub fn check_step_bounds(cfg: &ExperimentConfig) -> Vec<CheckRecord> {
    let e = cfg.primary_exponents();
    let mut cost_over_m = Vec::new();
    let mut residual_consts = Vec::new();
    let mut h_norm_ratio = 0.0f64;
    for &m in &cfg.m_list {
        let l_need =
            hardy::step_required_l(&Region::interval(from_int(0), from_int(1)).unwrap(), m);
        let atom = canonical_atom(
            Region::interval(from_int(0), from_int(1)).unwrap(),
            l_need.max(4),
            6,
        )
        .unwrap();
        let step = factorization_step(&atom, m, &e).unwrap();
        cost_over_m.push(step.product_cost / m);
        residual_consts.push(step.residual_bound_constant);
        // Provable normalization bound: |T(g)(c_Q)| ≥ 2/(πM) gives
        // ‖h‖ ≤ (π/2)·M·‖a‖.
        let na = bml_norm(&atom.payload, &e).total().unwrap();
        let nh = bml_norm(&step.h, &e).total().unwrap();
        h_norm_ratio = h_norm_ratio.max(nh / (std::f64::consts::PI / 2.0 * m * na));
    }
    let spread = |v: &[f64]| {
        let lo = v.iter().fold(f64::INFINITY, |a, &b| a.min(b));
        let hi = v.iter().fold(0.0f64, |a, &b| a.max(b));
        hi / lo.max(1e-300)
    };
    vec![
        CheckRecord::certified(
            "hardy.step-product-cost-scaling",
            "factorization-pair-cost",
            format!("cost/M={cost_over_m:?}"),
            spread(&cost_over_m),
            2.0,
        ),
        CheckRecord::certified(
            "hardy.step-residual-constant-stability",
            "factorization-residual-bound",
            format!("C={residual_consts:?}"),
            spread(&residual_consts),
            2.0,
        ),
        CheckRecord::certified(
            "hardy.step-h-normalization",
            "factorization-pair-cost",
            format!("M={:?}", cfg.m_list),
            h_norm_ratio,
            1.0 + 1e-9,
        ),
    ]
}

pub fn check_adjoint_identity(cfg: &ExperimentConfig) -> CheckRecord {
    let mut worst = 0.0f64;
    for k in 0..50u64 {
        let f = MeshFunction::synthesize(
            1,
            cfg.l_exp,
            cfg.j_exp,
            &Generator::RandomStep { seed: cfg.seed.wrapping_add(k), lo: -1.0, hi: 1.0 },
        )
        .unwrap();
        let g = MeshFunction::synthesize(
            1,
            cfg.l_exp,
            cfg.j_exp,
            &Generator::RandomStep { seed: cfg.seed.wrapping_add(300 + k), lo: -1.0, hi: 1.0 },
        )
        .unwrap();
        let a = ops::hilbert_pairing(&f, &g).unwrap();
        let b = ops::hilbert_pairing(&g, &f).unwrap();
        worst = worst.max((a + b).abs() / a.abs().max(1.0));
    }
    CheckRecord::certified(
        "hardy.adjoint-antisymmetry",
        "hilbert-adjoint-is-minus",
        "pairs=50".into(),
        worst,
        cfg.tol_pairing,
    )
}

pub fn check_commutator_lower(cfg: &ExperimentConfig) -> CheckRecord {
    let e = cfg.primary_exponents();
    let l = 5;
    let atom = canonical_atom(Region::interval(from_int(0), from_int(1)).unwrap(), l, 5).unwrap();
    let b = MeshFunction::synthesize(
        1,
        l,
        5,
        &Generator::Indicator(Region::interval(from_int(0), from_int(2)).unwrap()),
    )
    .unwrap();
    let diag = hardy::commutator_lower_diagnostic(&b, &[atom], &e, 16.0).unwrap();
    let bmo = ops::bmo_norm(&b);
    CheckRecord::empirical(
        "hardy.commutator-lower-vs-bmo",
        "bmo-from-commutator-bound",
        format!("diag={diag:.6},bmo_lower={:.6}", bmo.lower),
        bmo.lower / diag.max(1e-300),
    )
}

pub fn hardy_suite(cfg: &ExperimentConfig) -> Report {
    let mut records = check_homogeneity(cfg, 100);
    records.push(check_envelope_slope(cfg));
    records.extend(check_step_bounds(cfg));
    records.extend(check_factorization(cfg, 6, 8));
    records.push(check_adjoint_identity(cfg));
    records.push(check_commutator_lower(cfg));
    Report { suite: "hardy".into(), config: cfg.digest(), records }
}

pub fn run_suite(suite: Suite, cfg: &ExperimentConfig) -> Result<Vec<Report>> {
    cfg.validate()?;
    Ok(match suite {
        Suite::Lorentz => vec![lorentz_suite(cfg)],
        Suite::Bml => vec![bml_suite(cfg)],
        Suite::Operators => vec![operators_suite(cfg)],
        Suite::Blocks => vec![blocks_suite(cfg)],
        Suite::Hardy => vec![hardy_suite(cfg)],
        Suite::All => vec![
            lorentz_suite(cfg),
            bml_suite(cfg),
            operators_suite(cfg),
            blocks_suite(cfg),
            hardy_suite(cfg),
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg() -> ExperimentConfig {
        ExperimentConfig { corpus_size: 12, ..Default::default() }
    }

    #[test]
    fn config_validation() {
        let cfg = ExperimentConfig::default();
        assert!(cfg.validate().is_ok());
        let mut bad = cfg.clone();
        bad.exponents.push([2.0, 2.0, 3.0, 3.0]);
        assert!(bad.validate().is_err());
    }

    #[test]
    fn lorentz_suite_passes_small() {
        let cfg = small_cfg();
        let rep = lorentz_suite(&cfg);
        assert!(rep.all_certified_pass(), "{}", rep.to_json());
    }

    #[test]
    fn reports_are_deterministic() {
        let cfg = small_cfg();
        let a = lorentz_suite(&cfg).to_json();
        let b = lorentz_suite(&cfg).to_json();
        assert_eq!(a, b);
    }

    #[test]
    fn indicator_oracle_against_example_value() {
        let e = BmlExponents::new(2.0, 2.0, 3.0, 4.0).unwrap();
        let coarse = 1.0 / (1.0 - 0.5f64.powf(2.0 / 3.0));
        let fine = 0.5f64.powf(1.0 / 3.0) / (1.0 - 0.5f64.powf(1.0 / 3.0));
        let want = (coarse + fine).powf(0.25);
        let got = indicator_closed_form(1, 0, &e).unwrap();
        assert!((got - want).abs() <= 1e-14 * want);
    }

    #[test]
    fn regression_recovers_slope() {
        let xs: Vec<f64> = (1..10).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 - 2.0 * x).collect();
        let (slope, r2) = regression(&xs, &ys);
        assert!((slope + 2.0).abs() <= 1e-12);
        assert!((r2 - 1.0).abs() <= 1e-12);
    }
}
