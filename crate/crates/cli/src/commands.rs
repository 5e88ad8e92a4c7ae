use std::fs;

use anyhow::{anyhow, bail, Context, Result};
use nalgebra::DVector;
use serde_json::{json, Value};

use stabcert::feedback::{certificate_to_feedback, closed_loop_rate, concatenated_control};
use stabcert::linalg::{expm_scaled, is_diagonal, spectral_norm, sym_max_eig, sym_min_eig};
use stabcert::lrconstants::{
    constants_b1, constants_b2, estimate_spectral_constant, pointwise_c_kt0_at, CertificateConstants, SemigroupBound,
};
use stabcert::periodic::{
    build_example4, example4_constant, noncontrollability_witness, periodic_weakobs_check_seeded, PeriodicSystem,
};
use stabcert::quadrature::QuadratureSpec;
use stabcert::semigroup::{gramian_closed_form, observability_gramian};
use stabcert::systems::{
    continued_fraction_x0, spectral_projection_family, CutRule, LtiSystem, PointLocation, SpectralSystem,
};
use stabcert::systems::spec_file::{parse_system_spec, BuiltSystem, SystemSpec, X0Field};
use stabcert::verify::{run_all, VerifyConfig};
use stabcert::weakobs::{
    check_certificate_seeded, sweep_alpha_with, CertificateFamily, CertificateStatus, ResidualRule, SweepOptions,
    WeakObsCertificate, DEFAULT_ALPHAS, DEFAULT_HORIZONS,
};
use stabcert::Error as CoreError;

use crate::output::{rows, to_value, Cell, Output};
use crate::{Check, Cli, Command, Common, Example, Formula, PeriodicArgs, StabilizeArgs, WeakobsArgs};

const CONSTANT_HORIZONS: [f64; 7] = [0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0];
const CONSTANT_ALPHAS: [f64; 2] = [1.0, 2.0];

struct Tolerances {
    gramian: Option<f64>,
    riccati: Option<f64>,
}

fn parse_tolerances(items: &[String]) -> Result<Tolerances> {
    let mut tol = Tolerances { gramian: None, riccati: None };
    for item in items {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| anyhow!("--tol expects key=value, got {item:?}"))?;
        let v: f64 = v.trim().parse().with_context(|| format!("tolerance {item:?}"))?;
        if !(v > 0.0) {
            bail!("tolerance {item:?} must be positive");
        }
        match k.trim() {
            "gramian" => tol.gramian = Some(v),
            "riccati" => tol.riccati = Some(v),
            other => bail!("unknown tolerance key {other:?} (expected gramian or riccati)"),
        }
    }
    Ok(tol)
}

struct Loaded {
    spec: SystemSpec,
    built: BuiltSystem,
}

fn load_spec(common: &Common) -> Result<SystemSpec> {
    let src = common.system.as_deref().ok_or_else(|| anyhow!("--system is required for this command"))?;
    let text = if src.trim_start().starts_with('{') {
        src.to_string()
    } else {
        fs::read_to_string(src).with_context(|| format!("reading system spec {src}"))?
    };
    Ok(parse_system_spec(&text)?)
}

fn load(common: &Common) -> Result<Loaded> {
    let spec = load_spec(common)?;
    let built = spec.build()?;
    Ok(Loaded { spec, built })
}

fn lti(loaded: &Loaded) -> Result<(&LtiSystem, Option<&SpectralSystem>)> {
    match &loaded.built {
        BuiltSystem::Lti { system, spectral } => Ok((system, spectral.as_ref())),
        BuiltSystem::Periodic(_) => bail!("this command needs a time-invariant system, not periodic_l2"),
    }
}

fn system_summary(loaded: &Loaded) -> Value {
    let mut v = json!({ "spec": to_value(&loaded.spec) });
    match &loaded.built {
        BuiltSystem::Lti { system, spectral } => {
            v["label"] = json!(system.label);
            v["n_states"] = json!(system.n_states());
            v["n_inputs"] = json!(system.n_inputs());
            if let Some(s) = spectral {
                v["eigenvalues"] = json!(s.eigenvalues);
                v["basis"] = json!(s.basis_label);
            }
        }
        BuiltSystem::Periodic(p) => v["periodic"] = periodic_summary(p),
    }
    v
}

fn periodic_summary(p: &PeriodicSystem) -> Value {
    json!({
        "period": p.period,
        "a_diag": p.a_diag,
        "switch_times": p.switch_times,
        "alpha_series": p.alpha_series,
        "series_tail_bound": p.series_tail_bound,
    })
}

fn status_name(s: CertificateStatus) -> &'static str {
    match s {
        CertificateStatus::Certified => "certified",
        CertificateStatus::Refuted => "refuted",
        CertificateStatus::Inconclusive => "inconclusive",
    }
}

fn exit(s: CertificateStatus) -> u8 {
    s.exit_code() as u8
}

fn combine(statuses: impl IntoIterator<Item = CertificateStatus>) -> CertificateStatus {
    let mut out = CertificateStatus::Certified;
    for s in statuses {
        match s {
            CertificateStatus::Refuted => return CertificateStatus::Refuted,
            CertificateStatus::Inconclusive => out = CertificateStatus::Inconclusive,
            CertificateStatus::Certified => {}
        }
    }
    out
}

pub fn run(cli: &Cli) -> Result<u8> {
    let c = &cli.common;
    let tol = parse_tolerances(&c.tol)?;
    if let Command::VerifyAll = cli.command {
        return verify_all(c, &tol);
    }
    let out = Output::new(&c.out)?;
    let seed = c.seed.unwrap_or(0);
    match &cli.command {
        Command::Gramian { horizon } => gramian(c, &out, seed, &tol, *horizon),
        Command::Weakobs(args) => {
            let loaded = load(c)?;
            weakobs(c, &out, seed, &loaded, args, "weakobs")
        }
        Command::Constants { formula, t0 } => {
            let loaded = load(c)?;
            constants(c, &out, seed, &loaded, *formula, *t0, "constants")
        }
        Command::Stabilize(args) => stabilize(c, &out, seed, &tol, args),
        Command::Periodic(args) => {
            let loaded = load(c)?;
            let BuiltSystem::Periodic(sys) = &loaded.built else {
                bail!("periodic needs a periodic_l2 system");
            };
            periodic(c, &out, seed, sys, Some(system_summary(&loaded)), args, "periodic")
        }
        Command::Example { which } => example(c, &out, seed, which),
        Command::VerifyAll => unreachable!(),
    }
}

fn gramian(c: &Common, out: &Output, seed: u64, tol: &Tolerances, horizon: f64) -> Result<u8> {
    let loaded = load(c)?;
    let (sys, _) = lti(&loaded)?;
    let mut quad = QuadratureSpec::default();
    if let Some(t) = tol.gramian {
        quad.rel_tol = t;
    }
    let g = observability_gramian(sys, horizon, &quad)?;
    let closed = if is_diagonal(&sys.a_matrix) {
        let cf = gramian_closed_form(sys, horizon)?;
        let diff = (&cf.matrix - &g.matrix).abs().max() / cf.matrix.abs().max().max(f64::MIN_POSITIVE);
        Some(diff)
    } else {
        None
    };
    let n = g.matrix.nrows();
    let table: Vec<Vec<Cell>> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| vec![Cell::I(i as i64), Cell::I(j as i64), Cell::F(g.matrix[(i, j)])])
        .collect();
    out.csv("certificates", "gramian.csv", &["row", "col", "value"], &table)?;
    out.report(
        "gramian",
        "observability-gramian",
        seed,
        json!({
            "system": system_summary(&loaded),
            "T": horizon,
            "gramian": rows(&g.matrix),
            "lambda_min": sym_min_eig(&g.matrix),
            "lambda_max": sym_max_eig(&g.matrix),
            "quadrature_error_estimate": g.quadrature_error_estimate,
            "closed_form_relative_difference": closed,
        }),
    )?;
    Ok(0)
}

fn grids(c: &Common, alphas: &[f64], horizons: &[f64]) -> (Vec<f64>, Vec<f64>) {
    (
        c.alpha_grid.clone().unwrap_or_else(|| alphas.to_vec()),
        c.t_grid.clone().unwrap_or_else(|| horizons.to_vec()),
    )
}

fn certificate_rows(certs: &[WeakObsCertificate]) -> Vec<Vec<Cell>> {
    certs
        .iter()
        .map(|x| {
            vec![
                Cell::F(x.horizon),
                Cell::F(x.alpha),
                Cell::F(x.d_const),
                Cell::F(x.c_const),
                Cell::S(status_name(x.status).into()),
                Cell::F(x.margin),
                Cell::F(x.max_ratio),
            ]
        })
        .collect()
}

const CERT_HEADER: [&str; 7] = ["T", "alpha", "D", "C", "status", "margin", "max_ratio"];

fn sweep(c: &Common, sys: &LtiSystem, rule: &ResidualRule, seed: u64) -> Result<CertificateFamily> {
    let (alphas, horizons) = grids(c, &DEFAULT_ALPHAS, &DEFAULT_HORIZONS);
    let opts = SweepOptions {
        samples: c.samples,
        seed,
        ..SweepOptions::default()
    };
    Ok(sweep_alpha_with(sys, &alphas, &horizons, rule, &opts)?)
}

fn weakobs(c: &Common, out: &Output, seed: u64, loaded: &Loaded, args: &WeakobsArgs, command: &str) -> Result<u8> {
    weakobs_with(c, out, seed, loaded, args, command, json!({}))
}

fn weakobs_with(
    c: &Common,
    out: &Output,
    seed: u64,
    loaded: &Loaded,
    args: &WeakobsArgs,
    command: &str,
    extra: Value,
) -> Result<u8> {
    let (sys, _) = lti(loaded)?;
    let (status, mut body) = if let Some(d) = args.d {
        let (t, a) = match (args.horizon, args.alpha) {
            (Some(t), Some(a)) => (t, a),
            _ => bail!("a single check needs --horizon and --alpha together with --d"),
        };
        let cert = WeakObsCertificate::new(t, a, d, args.c.unwrap_or(args.residual_c));
        let cert = check_certificate_seeded(sys, &cert, c.samples, seed)?;
        out.csv("certificates", "weakobs.csv", &CERT_HEADER, &certificate_rows(std::slice::from_ref(&cert)))?;
        (cert.status, json!({ "certificates": [to_value(&cert)] }))
    } else {
        let rule = match args.residual.as_str() {
            "constant" => ResidualRule::Constant { c: args.residual_c },
            "feedback" => ResidualRule::Feedback,
            other => bail!("unknown residual rule {other:?} (expected constant or feedback)"),
        };
        let fam = sweep(c, sys, &rule, seed)?;
        out.csv("certificates", "weakobs.csv", &CERT_HEADER, &certificate_rows(&fam.certificates))?;
        (fam.overall_status(), json!({ "family": to_value(&fam), "certificates": to_value(&fam.certificates) }))
    };
    body["system"] = system_summary(loaded);
    body["verdict"] = json!(status_name(status));
    if let (Value::Object(b), Value::Object(e)) = (&mut body, extra) {
        b.extend(e);
    }
    out.report(command, "weak-observability-family", seed, body)?;
    Ok(exit(status))
}

fn point_location(spec: &SystemSpec) -> Option<(PointLocation, f64)> {
    match spec {
        SystemSpec::PointHeat { x0, c, depth, .. } => {
            let loc = match x0 {
                X0Field::Value(v) => PointLocation::Real(*v),
                X0Field::Rational { num, den } => PointLocation::Rational { num: *num, den: *den },
                X0Field::Keyword(_) => PointLocation::ContinuedFraction { depth: *depth },
            };
            Some((loc, *c))
        }
        _ => None,
    }
}

fn constants_json(k: &CertificateConstants) -> Value {
    json!({
        "formula": k.formula,
        "D": k.d,
        "C": k.c,
        "validity": { "T_min": k.t_min, "inclusive": k.t_min_inclusive },
    })
}

fn constants(c: &Common, out: &Output, seed: u64, loaded: &Loaded, formula: Formula, t0: f64, command: &str) -> Result<u8> {
    let (sys, spectral) = lti(loaded)?;
    let spec = spectral.ok_or_else(|| anyhow!("constants need a spectral system (point_heat, hermite, fractional)"))?;
    let point = point_location(&loaded.spec);
    if formula == Formula::B2 && point.is_none() {
        bail!("the truncated-observability formula needs a point_heat system");
    }
    let fam = spectral_projection_family(spec, &CutRule::ModeCount)?;
    let bound = SemigroupBound::fit(sys);
    let b_norm = spectral_norm(&sys.b_matrix);
    let (alphas, horizons) = grids(c, &CONSTANT_ALPHAS, &CONSTANT_HORIZONS);

    let mut entries = Vec::new();
    let mut table = Vec::new();
    let mut statuses = Vec::new();
    let mut notes = Vec::new();
    for &alpha in &alphas {
        let Some(pos) = fam.alpha_k.iter().position(|&ak| ak > alpha) else {
            notes.push(format!("α = {alpha}: no projection decays faster than α"));
            statuses.push(CertificateStatus::Inconclusive);
            continue;
        };
        let k = fam.ks[pos];
        let (m_k, alpha_k) = (fam.m_k[pos], fam.alpha_k[pos]);
        let mut sets = Vec::new();
        if formula != Formula::B2 {
            let c_k = estimate_spectral_constant(spec, &fam, k)?;
            let inputs = json!({ "alpha": alpha, "k": k, "M": bound.m_big, "delta0": bound.delta0,
                                 "M_k": m_k, "alpha_k": alpha_k, "C_k": c_k, "B_norm": b_norm });
            sets.push((constants_b1(&bound, m_k, alpha_k, c_k, b_norm, alpha)?, inputs));
        }
        if formula != Formula::B1 {
            if let Some((loc, heat_c)) = point {
                match pointwise_c_kt0_at(loc, heat_c, k, t0) {
                    Ok(ckt0) => {
                        let inputs = json!({ "alpha": alpha, "k": k, "M": bound.m_big, "delta0": bound.delta0,
                                             "M_k": m_k, "alpha_k": alpha_k, "T0": t0, "C_k_T0": ckt0,
                                             "B_norm": b_norm });
                        sets.push((constants_b2(&bound, t0, ckt0, m_k, alpha_k, b_norm, alpha)?, inputs));
                    }
                    Err(e @ CoreError::InvisibleMode { .. }) => {
                        notes.push(format!("α = {alpha}: {e}"));
                        statuses.push(CertificateStatus::Refuted);
                    }
                    Err(e) => return Err(e.into()),
                }
            }
        }
        for (consts, inputs) in sets {
            let mut checks = Vec::new();
            for &t in horizons.iter().filter(|&&t| consts.valid_at(t)) {
                let cert = WeakObsCertificate::new(t, alpha, consts.d, consts.c);
                let r = check_certificate_seeded(sys, &cert, c.samples, seed)?;
                statuses.push(r.status);
                table.push(
                    std::iter::once(Cell::S(consts.formula.into()))
                        .chain(certificate_rows(std::slice::from_ref(&r)).remove(0))
                        .collect(),
                );
                checks.push(to_value(&r));
            }
            let mut e = constants_json(&consts);
            e["inputs"] = inputs;
            e["checks"] = json!(checks);
            entries.push(e);
        }
    }
    let status = if statuses.is_empty() { CertificateStatus::Inconclusive } else { combine(statuses) };
    let header: Vec<&str> = std::iter::once("formula").chain(CERT_HEADER).collect();
    out.csv("certificates", "constants.csv", &header, &table)?;
    out.report(
        command,
        "explicit-constants",
        seed,
        json!({
            "system": system_summary(loaded),
            "constants": entries,
            "notes": notes,
            "verdict": status_name(status),
        }),
    )?;
    Ok(exit(status))
}

fn stabilize(c: &Common, out: &Output, seed: u64, tol: &Tolerances, args: &StabilizeArgs) -> Result<u8> {
    let mu = c.mu.ok_or_else(|| anyhow!("stabilize needs --mu"))?;
    let loaded = load(c)?;
    let (sys, _) = lti(&loaded)?;
    let fam = sweep(c, sys, &ResidualRule::Constant { c: 1.0 }, seed)?;
    out.csv("certificates", "weakobs.csv", &CERT_HEADER, &certificate_rows(&fam.certificates))?;
    let mut body = json!({ "system": system_summary(&loaded), "mu": mu, "family": to_value(&fam) });
    let fb = match certificate_to_feedback(sys, &fam, mu) {
        Ok(fb) => fb,
        Err(e @ (CoreError::Unstabilizable { .. } | CoreError::NoCertificate(_))) => {
            let status = match e {
                CoreError::Unstabilizable { .. } => CertificateStatus::Refuted,
                _ if fam.overall_status() == CertificateStatus::Refuted => CertificateStatus::Refuted,
                _ => CertificateStatus::Inconclusive,
            };
            eprintln!("{e}");
            body["error"] = json!(e.to_string());
            body["verdict"] = json!(status_name(status));
            out.report("stabilize", "rapid-stabilization", seed, body)?;
            return Ok(exit(status));
        }
        Err(e) => return Err(e.into()),
    };

    let riccati_tol = tol.riccati.unwrap_or(1e-8);
    let scale = 1.0 + fb.riccati_p.norm().powi(2);
    let residual_ok = fb.residual <= riccati_tol * scale;

    let gain_header: Vec<String> = (0..fb.gain_k.ncols()).map(|j| format!("k{j}")).collect();
    let gain_header: Vec<&str> = gain_header.iter().map(String::as_str).collect();
    let gain_rows: Vec<Vec<Cell>> = rows(&fb.gain_k).into_iter().map(|r| r.into_iter().map(Cell::F).collect()).collect();
    out.csv("decay", "gain.csv", &gain_header, &gain_rows)?;

    let acl = &sys.a_matrix + &sys.b_matrix * &fb.gain_k;
    let t_end = 10.0 / mu.max(0.1);
    let overshoot = fb.measured_overshoot.max(1.0);
    let curve: Vec<Vec<Cell>> = (0..=200)
        .map(|i| {
            let t = t_end * i as f64 / 200.0;
            let norm = spectral_norm(&expm_scaled(&acl, t));
            vec![Cell::F(t), Cell::F(norm), Cell::F(overshoot * (-mu * t).exp())]
        })
        .collect();
    out.csv("decay", "closed_loop.csv", &["t", "norm", "target_bound"], &curve)?;
    let (rate, _) = closed_loop_rate(sys, &fb.gain_k, t_end, 200)?;

    body["feedback"] = json!({
        "gain": rows(&fb.gain_k),
        "riccati_p": rows(&fb.riccati_p),
        "residual": fb.residual,
        "residual_within_tolerance": residual_ok,
        "measured_rate": fb.measured_rate,
        "shifted_rate": fb.shifted_rate,
        "measured_overshoot": fb.measured_overshoot,
        "curve_rate": rate,
        "selection": to_value(&fb.selection),
    });

    let mut status = if residual_ok && fb.measured_rate >= mu {
        CertificateStatus::Certified
    } else {
        CertificateStatus::Inconclusive
    };
    if let Some(beta) = args.beta {
        let eps_seg = (-2.0 * beta * args.t_seg).exp();
        let y0 = DVector::from_element(sys.n_states(), 1.0 / (sys.n_states() as f64).sqrt());
        let (signal, report) = concatenated_control(sys, beta, args.t_seg, eps_seg, &y0, args.segments)?;
        let seg_rows: Vec<Vec<Cell>> = (0..=args.segments)
            .map(|i| {
                vec![
                    Cell::F(i as f64 * args.t_seg),
                    Cell::F(report.state_norms[i]),
                    Cell::F(report.control_norms.get(i).copied().unwrap_or(f64::NAN)),
                    Cell::F(eps_seg.powi(i as i32)),
                ]
            })
            .collect();
        out.csv("decay", "concatenated.csv", &["t", "state_norm", "segment_control_l2", "target"], &seg_rows)?;
        if !report.contraction_holds {
            status = CertificateStatus::Inconclusive;
        }
        body["concatenated"] = json!({
            "beta": beta,
            "t_seg": args.t_seg,
            "eps_seg": eps_seg,
            "l2_norm": signal.l2_norm,
            "report": to_value(&report),
        });
    }
    body["verdict"] = json!(status_name(status));
    out.report("stabilize", "rapid-stabilization", seed, body)?;
    Ok(exit(status))
}

fn periodic(
    c: &Common,
    out: &Output,
    seed: u64,
    sys: &PeriodicSystem,
    summary: Option<Value>,
    args: &PeriodicArgs,
    command: &str,
) -> Result<u8> {
    let summary = summary.unwrap_or_else(|| json!({ "periodic": periodic_summary(sys) }));
    let energies = sys.mode_energies(1);
    if args.refute_null_controllability {
        let w = noncontrollability_witness(sys, args.m, args.big_c)?;
        let table: Vec<Vec<Cell>> = energies
            .iter()
            .enumerate()
            .map(|(i, &e)| vec![Cell::I(i as i64 + 1), Cell::F(sys.a_diag[i]), Cell::F(e)])
            .collect();
        out.csv("certificates", "periodic_modes.csv", &["n", "a", "energy_one_period"], &table)?;
        println!(
            "witness e_{}: ‖φ‖ = {:.6e} > C·√energy = {:.6e} over {} period(s)",
            w.n, w.lhs, w.rhs, args.m
        );
        out.report(
            command,
            "null-controllability-counterexample",
            seed,
            json!({
                "system": summary,
                "m": args.m,
                "C": args.big_c,
                "witness": to_value(&w),
                "verdict": "refuted",
            }),
        )?;
        return Ok(exit(CertificateStatus::Refuted));
    }

    let c_k = match args.c_k {
        Some(v) => v,
        None => {
            if sys.n_modes() <= args.k {
                bail!("truncation N = {} must exceed k = {}", sys.n_modes(), args.k);
            }
            example4_constant(sys, args.k)?
        }
    };
    let cert = periodic_weakobs_check_seeded(sys, args.k, args.n_k, c_k, c.samples.max(1), seed)?;
    let table: Vec<Vec<Cell>> = energies
        .iter()
        .enumerate()
        .map(|(i, &e)| {
            vec![
                Cell::I(i as i64 + 1),
                Cell::F(sys.a_diag[i]),
                Cell::F(e),
                Cell::F(cert.per_mode_margins[i]),
            ]
        })
        .collect();
    out.csv("certificates", "periodic_modes.csv", &["n", "a", "energy_one_period", "margin"], &table)?;
    out.report(
        command,
        "periodic-weak-observability",
        seed,
        json!({
            "system": summary,
            "certificates": [to_value(&cert)],
            "verdict": status_name(cert.status),
        }),
    )?;
    Ok(exit(cert.status))
}

fn example(c: &Common, out: &Output, seed: u64, which: &Example) -> Result<u8> {
    match which {
        Example::PointHeat { x0, depth, modes, c: heat_c, check } => {
            let x0_field = parse_x0(x0)?;
            let spec = SystemSpec::PointHeat { x0: x0_field.clone(), c: *heat_c, modes: *modes, depth: *depth };
            let mut extra = json!({});
            if let X0Field::Keyword(_) = x0_field {
                let cf = continued_fraction_x0(*depth)?;
                let (p, q) = cf.last_exact_convergent();
                println!("continued-fraction x0 = {p}/{q} (depth {depth})");
                extra["continued_fraction"] = json!({
                    "depth": depth,
                    "convergent": format!("{p}/{q}"),
                    "x0": cf.x0(),
                    "partial_quotients": cf.partial_quotients.iter().map(|a| a.map(|v| v.to_string())).collect::<Vec<_>>(),
                    "log_partial_quotients": cf.log_partial_quotients,
                    "convergent_bounds": cf.convergent_bound_checks(),
                });
            }
            let built = spec.build()?;
            let loaded = Loaded { spec, built };
            match check {
                Check::Weakobs => {
                    let args = WeakobsArgs {
                        residual: "constant".into(),
                        residual_c: 1.0,
                        d: None,
                        horizon: None,
                        alpha: None,
                        c: None,
                    };
                    weakobs_with(c, out, seed, &loaded, &args, "example point-heat", extra)
                }
                Check::Constants => {
                    let code = constants(c, out, seed, &loaded, Formula::Both, 0.5, "example point-heat")?;
                    if let Value::Object(e) = extra {
                        if !e.is_empty() {
                            let path = c.out.join("report.json");
                            let mut report: Value = serde_json::from_str(&fs::read_to_string(&path)?)?;
                            if let Value::Object(r) = &mut report {
                                r.extend(e);
                            }
                            fs::write(&path, serde_json::to_string_pretty(&report)? + "\n")?;
                        }
                    }
                    Ok(code)
                }
            }
        }
        Example::PeriodicL2 { modes, periodic: args } => {
            let sys = build_example4(*modes, (*modes + 2).max(12))?;
            periodic(c, out, seed, &sys, None, args, "example periodic-l2")
        }
    }
}

fn parse_x0(s: &str) -> Result<X0Field> {
    if s == "cf" {
        return Ok(X0Field::Keyword("cf".into()));
    }
    if let Some((p, q)) = s.split_once('/') {
        let num = p.trim().parse().with_context(|| format!("x0 numerator in {s:?}"))?;
        let den = q.trim().parse().with_context(|| format!("x0 denominator in {s:?}"))?;
        return Ok(X0Field::Rational { num, den });
    }
    Ok(X0Field::Value(s.parse().with_context(|| format!("x0 {s:?} is not cf, p/q or a number"))?))
}

fn verify_all(c: &Common, tol: &Tolerances) -> Result<u8> {
    let mut cfg = VerifyConfig::default();
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(t) = tol.gramian {
        cfg.gramian_tol = t;
    }
    if let Some(t) = tol.riccati {
        cfg.riccati_tol = t;
    }
    let results = run_all(&cfg);
    for r in &results {
        println!("{}", r.line());
    }
    let passed = results.iter().filter(|r| r.passed).count();
    println!("{passed}/{} criteria passed", results.len());
    let out = Output::new(&c.out)?;
    let table: Vec<Value> = results
        .iter()
        .map(|r| json!({ "id": r.id, "name": r.name, "passed": r.passed, "detail": r.detail }))
        .collect();
    out.report(
        "verify-all",
        "acceptance-suite",
        cfg.seed,
        json!({ "config": to_value(&cfg), "criteria": table, "all_passed": passed == results.len() }),
    )?;
    Ok(if passed == results.len() { 0 } else { 1 })
}
