//! The acceptance suite: every criterion pairs a library computation with an
//! independent oracle (closed forms, separately assembled quadratic forms,
//! direct simulation) and a runtime budget.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::feedback::{certificate_to_feedback, concatenated_control, solve_shifted_riccati};
use crate::linalg::{expm_scaled, hautus_margin, spectral_norm};
use crate::lrconstants::{constants_b1, constants_b2, estimate_spectral_constant, pointwise_c_kt0, pointwise_c_kt0_at, SemigroupBound};
use crate::periodic::{
    build_example4, example4_constant, example4_stabilizability_check, noncontrollability_witness, periodic_observation_energy,
};
use crate::quadrature::{integrate, QuadratureSpec};
use crate::semigroup::{gramian_closed_form, gramian_quadrature};
use crate::systems::{
    build_system, continued_fraction_x0, point_control_heat, spectral_projection_family, CutRule, LtiSystem, PointLocation,
};
use crate::weakobs::{
    check_certificate_seeded, evaluate_sides, sweep_alpha_with, CertificateStatus, ResidualRule, SweepOptions,
    WeakObsCertificate, WeakObsProblem, DEFAULT_HORIZONS, DEFAULT_SAMPLES,
};

#[derive(Debug, Clone, Serialize)]
pub struct VerifyConfig {
    pub seed: u64,
    /// Relative tolerance of the Gramian oracle.
    pub gramian_tol: f64,
    /// Absolute tolerance of the scalar Riccati oracle.
    pub riccati_tol: f64,
    /// Random directions per certified verdict in the soundness re-test.
    pub adversarial_samples: usize,
    /// Count exceeding a runtime budget as a failure.
    pub enforce_runtime: bool,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            seed: 20240607,
            gramian_tol: 1e-9,
            riccati_tol: 1e-10,
            adversarial_samples: 10_000,
            enforce_runtime: true,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
    pub budget_seconds: f64,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "[{}] {}. {} ({:.2} s / {:.0} s budget): {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.seconds,
            self.budget_seconds,
            self.detail
        )
    }
}

pub const CRITERIA: [(usize, &str, f64); 8] = [
    (1, "scalar Riccati oracle", 1.0),
    (2, "Gramian closed form vs quadrature", 5.0),
    (3, "certificates and feedback agree on random pairs", 30.0),
    (4, "explicit constants certify the point-control heat truncation", 10.0),
    (5, "periodic example numbers", 5.0),
    (6, "continued-fraction location", 1.0),
    (7, "concatenated control", 2.0),
    (8, "decision soundness", 60.0),
];

/// Runs one criterion by number.
pub fn run_criterion(id: usize, cfg: &VerifyConfig) -> Result<CriterionResult> {
    let &(_, name, budget) = CRITERIA
        .iter()
        .find(|c| c.0 == id)
        .ok_or_else(|| Error::InvalidArgument(format!("no criterion {id}")))?;
    let start = Instant::now();
    let outcome = match id {
        1 => scalar_riccati(cfg),
        2 => gramian_oracle(cfg),
        3 => random_pairs(cfg),
        4 => explicit_constants(cfg),
        5 => periodic_numbers(cfg),
        6 => continued_fraction(cfg),
        7 => concatenation(cfg),
        _ => soundness(cfg),
    };
    let seconds = start.elapsed().as_secs_f64();
    let (mut passed, mut detail) = match outcome {
        Ok((p, d)) => (p, d),
        Err(e) => (false, format!("error: {e}")),
    };
    if cfg.enforce_runtime && seconds > budget {
        passed = false;
        detail.push_str("; over runtime budget");
    }
    Ok(CriterionResult {
        id,
        name,
        passed,
        detail,
        seconds,
        budget_seconds: budget,
    })
}

pub fn run_all(cfg: &VerifyConfig) -> Vec<CriterionResult> {
    CRITERIA
        .iter()
        .map(|c| run_criterion(c.0, cfg).expect("criterion ids are listed"))
        .collect()
}

type Outcome = Result<(bool, String)>;

fn gaussian(rng: &mut ChaCha8Rng, r: usize, c: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| scale * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng))
}

fn scalar(a: f64, b: f64) -> LtiSystem {
    build_system(DMatrix::from_element(1, 1, a), DMatrix::from_element(1, 1, b)).expect("finite scalar system")
}

fn max_real_eig(m: &DMatrix<f64>) -> f64 {
    m.clone().schur().complex_eigenvalues().iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
}

fn scalar_riccati(cfg: &VerifyConfig) -> Outcome {
    let tol = cfg.riccati_tol;
    let base = solve_shifted_riccati(&scalar(0.0, 1.0), 1.0)?;
    let mut worst = (base.shifted_rate - SQRT_2).abs();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 1);
    for _ in 0..50 {
        let a = rng.random_range(-3.0..3.0);
        let b = rng.random_range(0.2..3.0);
        let mu = rng.random_range(0.1..4.0);
        // b²p² − 2(a+μ)p − 1 = 0, positive root
        let at: f64 = a + mu;
        let p = (at + (at * at + b * b).sqrt()) / (b * b);
        let rate = -(a - b * b * p);
        let fb = solve_shifted_riccati(&scalar(a, b), mu)?;
        worst = worst.max((fb.measured_rate - rate).abs() / rate.abs().max(1.0));
    }
    Ok((worst <= tol, format!("rate(0,1,1) − √2 = {:.2e}; worst scaled error {worst:.2e} (tol {tol:.0e})", base.shifted_rate - SQRT_2)))
}

fn gramian_oracle(cfg: &VerifyConfig) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 2);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.random_range(1..=20);
        let m = rng.random_range(1..=3);
        let a = DMatrix::from_diagonal(&DVector::from_fn(n, |_, _| rng.random_range(-5.0..2.0)));
        let b = gaussian(&mut rng, n, m, 1.0);
        let t = rng.random_range(0.2..3.0);
        let sys = build_system(a, b)?;
        let closed = gramian_closed_form(&sys, t)?.matrix;
        let quad = gramian_quadrature(&sys, t, &QuadratureSpec::default())?.matrix;
        worst = worst.max((&closed - &quad).norm() / closed.norm().max(f64::MIN_POSITIVE));
    }
    Ok((
        worst <= cfg.gramian_tol,
        format!("worst relative difference {worst:.2e} over 100 systems (tol {:.0e})", cfg.gramian_tol),
    ))
}

fn controllable_pair(rng: &mut ChaCha8Rng) -> Result<LtiSystem> {
    loop {
        let n = rng.random_range(1..=6);
        let m = rng.random_range(1..=2);
        let a = gaussian(rng, n, n, 1.0);
        let b = gaussian(rng, n, m, 1.0);
        let eig = a.complex_eigenvalues();
        if eig.iter().all(|&l| hautus_margin(&a, &b, l) > 1e-2) {
            return build_system(a, b);
        }
    }
}

/// A pair whose `+1` eigenvalue is invisible to the input, hidden by a
/// random rotation.
fn unstabilizable_pair(rng: &mut ChaCha8Rng) -> Result<LtiSystem> {
    let n = rng.random_range(2..=6);
    let m = rng.random_range(1..=2);
    let mut a = DMatrix::zeros(n, n);
    a[(0, 0)] = 1.0;
    a.view_mut((1, 1), (n - 1, n - 1)).copy_from(&gaussian(rng, n - 1, n - 1, 1.0));
    let mut b = gaussian(rng, n, m, 1.0);
    b.row_mut(0).fill(0.0);
    let q = gaussian(rng, n, n, 1.0).qr().q();
    build_system(&q * a * q.transpose(), &q * b)
}

fn random_pairs(cfg: &VerifyConfig) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 3);
    let opts = SweepOptions {
        samples: 64,
        seed: cfg.seed,
        t0: 0.0,
    };
    let rule = ResidualRule::default();
    let mut failures = Vec::new();
    let mut worst_gap = f64::INFINITY;
    for i in 0..30 {
        let sys = controllable_pair(&mut rng)?;
        let fam = sweep_alpha_with(&sys, &[1.0, 2.0, 4.0, 8.0], &DEFAULT_HORIZONS, &rule, &opts)?;
        if let Some(s) = fam.per_alpha.iter().find(|s| !s.certified) {
            failures.push(format!("pair {i}: α = {} not certified", s.alpha));
            continue;
        }
        for mu in [1.0, 2.0, 4.0] {
            match certificate_to_feedback(&sys, &fam, mu) {
                Ok(fb) => {
                    let rate = -max_real_eig(&(&sys.a_matrix + &sys.b_matrix * &fb.gain_k));
                    worst_gap = worst_gap.min(rate - mu);
                    if rate < mu - 1e-6 {
                        failures.push(format!("pair {i}: rate {rate} < μ = {mu}"));
                    }
                }
                Err(e) => failures.push(format!("pair {i}, μ = {mu}: {e}")),
            }
        }
    }
    for i in 0..10 {
        let sys = unstabilizable_pair(&mut rng)?;
        let fam = sweep_alpha_with(&sys, &[2.0], &DEFAULT_HORIZONS, &rule, &opts)?;
        if fam.per_alpha[0].certified {
            failures.push(format!("blocked pair {i}: α = 2 certified"));
        }
        if certificate_to_feedback(&sys, &fam, 2.0).is_ok() || solve_shifted_riccati(&sys, 2.0).is_ok() {
            failures.push(format!("blocked pair {i}: μ = 2 synthesized"));
        }
    }
    let detail = if failures.is_empty() {
        format!("30 pairs certified and stabilized (min rate − μ = {worst_gap:.3e}); 10 blocked pairs rejected")
    } else {
        failures.join("; ")
    };
    Ok((failures.is_empty(), detail))
}

fn explicit_constants(cfg: &VerifyConfig) -> Outcome {
    let spec = point_control_heat(FRAC_1_SQRT_2, 5.0, 16)?;
    let sys = spec.to_lti();
    let fam = spectral_projection_family(&spec, &CutRule::ModeCount)?;
    let bound = SemigroupBound::fit(&sys);
    let b_norm = spectral_norm(&sys.b_matrix);
    let t0 = 0.5;
    let grid = [0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0];
    let mut checked = 0;
    let mut failures = Vec::new();
    for alpha in [1.0, 2.0] {
        let pos = fam
            .alpha_k
            .iter()
            .position(|&ak| ak > alpha)
            .ok_or_else(|| Error::InvalidArgument("no compatible projection".into()))?;
        let k = fam.ks[pos];
        let c_k = estimate_spectral_constant(&spec, &fam, k)?;
        let c_kt0 = pointwise_c_kt0(FRAC_1_SQRT_2, 5.0, k, t0)?;
        let sets = [
            constants_b1(&bound, fam.m_k[pos], fam.alpha_k[pos], c_k, b_norm, alpha)?,
            constants_b2(&bound, t0, c_kt0, fam.m_k[pos], fam.alpha_k[pos], b_norm, alpha)?,
        ];
        for consts in &sets {
            for &t in grid.iter().filter(|&&t| consts.valid_at(t)) {
                let cert = WeakObsCertificate::new(t, alpha, consts.d, consts.c);
                let out = check_certificate_seeded(&sys, &cert, DEFAULT_SAMPLES, cfg.seed)?;
                checked += 1;
                if out.status != CertificateStatus::Certified {
                    failures.push(format!("{} α={alpha} T={t}: {:?}", consts.formula, out.status));
                }
            }
        }
    }
    let detail = if failures.is_empty() {
        format!("{checked} (formula, α, T) cases certified")
    } else {
        failures.join("; ")
    };
    Ok((failures.is_empty(), detail))
}

fn periodic_numbers(cfg: &VerifyConfig) -> Outcome {
    let _ = cfg;
    let sys = build_example4(10, 12)?;
    let alpha = sys.alpha_series.unwrap_or(f64::NAN);
    // oracle: forward partial sums, independent of the library's tail sums
    let partial = |upto: usize| (1..=upto).map(|k| (-((k * k) as f64)).exp()).sum::<f64>();
    let a5 = partial(5);
    let mut fails = Vec::new();
    if (alpha - a5).abs() > 1e-9 * a5 || (alpha - 0.3863186).abs() > 5e-8 {
        fails.push(format!("α = {alpha}"));
    }
    let tail = sys.series_tail_bound.unwrap_or(f64::INFINITY);
    if !(tail < 1e-70 && alpha - a5 <= 2.0 * (-36f64).exp()) {
        fails.push(format!("tail bound {tail:e}"));
    }
    let w = noncontrollability_witness(&sys, 1, 10.0)?;
    let tau = |n: usize| 1.0 - partial(n) / partial(12);
    let energy = ((-8.0 * tau(4)).exp() - (-8.0 * tau(3)).exp()) / 8.0;
    let bound = 2.0 / a5 * (-16f64).exp();
    if w.n != 4 || (w.lhs - (-4f64).exp()).abs() > 1e-9 * w.lhs {
        fails.push(format!("witness n = {}, lhs = {}", w.n, w.lhs));
    }
    if (w.energy - energy).abs() > 1e-9 * energy || !(w.energy <= bound) || !(w.lhs > 10.0 * energy.sqrt()) {
        fails.push(format!("energy {} (oracle {energy}, bound {bound})", w.energy));
    }
    let c1 = example4_constant(&sys, 1)?;
    if (c1 - a5.sqrt() * 0.5f64.exp()).abs() > 1e-9 * c1 {
        fails.push(format!("C(1) = {c1}"));
    }
    for k in 1..=5 {
        let c = example4_stabilizability_check(&sys, k, DEFAULT_SAMPLES)?;
        if c.status != CertificateStatus::Certified {
            fails.push(format!("k = {k}: {:?}", c.status));
        }
    }
    // cross-check the closed-form energy path on the witness mode
    let direct = periodic_observation_energy(&sys, 1, &[0.0, 0.0, 0.0, 1.0])?;
    if (direct - w.energy).abs() > 1e-12 * direct {
        fails.push("energy paths disagree".into());
    }
    let detail = if fails.is_empty() {
        format!(
            "α = {alpha:.10}, witness n = 4 with e⁻⁴ = {:.7} > 10·√E = {:.3e}, C(1) = {c1:.6}, k = 1..5 certified",
            w.lhs, w.rhs
        )
    } else {
        fails.join("; ")
    };
    Ok((fails.is_empty(), detail))
}

fn continued_fraction(cfg: &VerifyConfig) -> Outcome {
    let _ = cfg;
    let cf = continued_fraction_x0(3)?;
    let mut fails = Vec::new();
    let q = |n: usize| cf.convergents[n].map(|c| c.1);
    if q(2) != Some(2) || q(3) != Some(5963) {
        fails.push(format!("q₂ = {:?}, q₃ = {:?}", q(2), q(3)));
    }
    // a₂ = ⌈e^{q₂³}⌉ = ⌈e⁸⌉
    if cf.partial_quotients[2] != Some(2981) || (8f64).exp().ceil() != 2981.0 {
        fails.push(format!("a₂ = {:?}", cf.partial_quotients[2]));
    }
    let checks = cf.convergent_bound_checks();
    if checks.is_empty() || !checks.iter().all(|c| c.1) {
        fails.push(format!("convergent bounds {checks:?}"));
    }
    match pointwise_c_kt0_at(PointLocation::Rational { num: 1, den: 2 }, 0.0, 2, 1.0) {
        Err(Error::InvisibleMode { index: 2 }) => {}
        other => fails.push(format!("x0 = 1/2 gave {other:?}")),
    }
    let detail = if fails.is_empty() {
        format!("q₂ = 2, a₂ = 2981, q₃ = 5963; bounds hold at n ∈ {:?}; x0 = 1/2 refused at mode 2", checks.iter().map(|c| c.0).collect::<Vec<_>>())
    } else {
        fails.join("; ")
    };
    Ok((fails.is_empty(), detail))
}

fn concatenation(cfg: &VerifyConfig) -> Outcome {
    let _ = cfg;
    let sys = scalar(0.0, 1.0);
    let e2 = (-2f64).exp();
    let (u, rep) = concatenated_control(&sys, 1.0, 1.0, e2, &DVector::from_element(1, 1.0), 6)?;
    // simulate y' = u independently of the stored terminal states
    let spec = QuadratureSpec {
        panels: 4,
        nodes_per_panel: 12,
        adaptive: true,
        rel_tol: 1e-14,
    };
    let mut y = 1.0;
    let mut fails = Vec::new();
    let mut worst_ratio: f64 = 0.0;
    for i in 0..6 {
        let (du, _) = integrate(|t| u.value(t)[0], i as f64, (i + 1) as f64, &spec)?;
        y += du;
        let cap = (-2.0 * (i + 1) as f64).exp() * (1.0 + 1e-9);
        if y.abs() > cap {
            fails.push(format!("|y({})| = {:e} > {cap:e}", i + 1, y.abs()));
        }
    }
    for r in &rep.control_ratios {
        worst_ratio = worst_ratio.max(*r);
    }
    if rep.control_ratios.len() != 5 || worst_ratio > e2 * (1.0 + 1e-6) {
        fails.push(format!("control ratio {worst_ratio}"));
    }
    let detail = if fails.is_empty() {
        format!("|y(6)| = {:.3e}, worst control ratio / e⁻² = {:.9}", y.abs(), worst_ratio / e2)
    } else {
        fails.join("; ")
    };
    Ok((fails.is_empty(), detail))
}

fn soundness(cfg: &VerifyConfig) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 8);
    let fine = QuadratureSpec {
        panels: 64,
        nodes_per_panel: 10,
        adaptive: true,
        rel_tol: 1e-12,
    };
    let mut tally = [0usize; 3];
    let mut fails = Vec::new();
    for s in 0..20 {
        let n = rng.random_range(1..=4);
        let m = rng.random_range(1..=2);
        let a = gaussian(&mut rng, n, n, 0.8);
        let mut b = gaussian(&mut rng, n, m, 1.0);
        if s % 5 == 4 {
            // leave part of the state unobserved
            b.row_mut(0).fill(0.0);
        }
        let sys = build_system(a, b)?;
        for c in 0..10 {
            let t = rng.random_range(0.5..3.0);
            let alpha: f64 = [0.5, 1.0, 2.0][rng.random_range(0..3)];
            let cc = rng.random_range(0.2..2.0);
            let eps = cc * (-alpha * t).exp();
            let seed = cfg.seed ^ ((s * 10 + c) as u64);
            let (lo, _, _) = WeakObsProblem::from_system(&sys, t, eps)?.bracket(64, seed);
            let d = if lo.is_infinite() {
                rng.random_range(1.0..10.0)
            } else if lo == 0.0 {
                rng.random_range(0.0..1.0)
            } else {
                lo * rng.random_range(-0.7f64..0.7).exp()
            };
            let cert = WeakObsCertificate::new(t, alpha, d, cc);
            let out = check_certificate_seeded(&sys, &cert, DEFAULT_SAMPLES, seed.rotate_left(17))?;
            match out.status {
                CertificateStatus::Certified => {
                    tally[0] += 1;
                    // independent forms: explicit exponential and a finer quadrature
                    let st = expm_scaled(&sys.a_matrix.transpose(), t);
                    let g = gramian_quadrature(&sys, t, &fine)?.matrix;
                    let mut rr = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(31));
                    for _ in 0..cfg.adversarial_samples {
                        let phi = DVector::from_fn(n, |_, _| <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rr));
                        let lhs = (&st * &phi).norm();
                        let obs = phi.dot(&(&g * &phi)).max(0.0).sqrt();
                        let rhs = d * obs + eps * phi.norm();
                        if lhs > rhs * (1.0 + 1e-9) + 1e-14 * phi.norm() {
                            fails.push(format!("system {s} cert {c}: certified but {lhs:e} > {rhs:e}"));
                            break;
                        }
                    }
                }
                CertificateStatus::Refuted => {
                    tally[1] += 1;
                    let w = out.witness.clone().unwrap_or_default();
                    let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
                    let (lhs, obs) = evaluate_sides(&sys, t, &w)?;
                    if !(norm > 0.0 && lhs > d * obs + eps * norm) {
                        fails.push(format!("system {s} cert {c}: witness does not violate"));
                    }
                }
                CertificateStatus::Inconclusive => tally[2] += 1,
            }
        }
    }
    let detail = format!(
        "{} certified, {} refuted, {} inconclusive{}",
        tally[0],
        tally[1],
        tally[2],
        if fails.is_empty() { String::new() } else { format!("; {}", fails.join("; ")) }
    );
    Ok((fails.is_empty(), detail))
}
