//! Command implementations.

use crate::output::{param, sig12, sig12_opt, Out};
use crate::{CliError, PairArgs};
use grnconv_core::asymptotics::{
    self, classify_rate1, classify_rate2, expansion_l, profile, second_order_fidelity,
    second_order_fidelity_inverse, AsymptoticsError, Rate1Class, Rate2Class, RatePair1, RatePair2,
};
use grnconv_core::grn::{z_eval, GrnParams};
use grnconv_core::majorization::{
    iid_power, max_fidelity_majorization_with_storage, Distribution, MajorizationError,
};
use grnconv_core::quantum::PureState;
use grnconv_core::verify::run_battery;
use std::path::PathBuf;

fn numeric_from_asym(e: AsymptoticsError) -> CliError {
    match &e {
        AsymptoticsError::Range(_) => CliError::Numeric(e.to_string()),
        _ => CliError::Config(e.to_string()),
    }
}

fn numeric_from_major(e: MajorizationError) -> CliError {
    match &e {
        MajorizationError::Size(_) => CliError::Numeric(e.to_string()),
        _ => CliError::Config(e.to_string()),
    }
}

fn load_distribution(path: &PathBuf) -> Result<Distribution, CliError> {
    let raw = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    Distribution::from_json(&raw).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn load_state(path: &PathBuf) -> Result<Distribution, CliError> {
    let raw = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let state = PureState::from_json(&raw)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    Ok(state.schmidt_sq().clone())
}

/// Resolve the source/target pair from distribution or state flags.
fn load_pair(pair: &PairArgs) -> Result<(Distribution, Distribution), CliError> {
    let source = match (&pair.source, &pair.psi) {
        (Some(p), None) => load_distribution(p)?,
        (None, Some(p)) => load_state(p)?,
        _ => {
            return Err(CliError::Config(
                "provide exactly one of --source or --psi".into(),
            ))
        }
    };
    let target = match (&pair.target, &pair.phi) {
        (Some(p), None) => load_distribution(p)?,
        (None, Some(p)) => load_state(p)?,
        _ => {
            return Err(CliError::Config(
                "provide exactly one of --target or --phi".into(),
            ))
        }
    };
    Ok((source, target))
}

pub fn z_curve(
    vs: &[f64],
    ss: &[f64],
    mu_min: f64,
    mu_max: f64,
    grid: usize,
    out: &Option<PathBuf>,
) -> Result<(), CliError> {
    if vs.is_empty() || ss.is_empty() || !(mu_min < mu_max) || grid < 2 {
        return Err(CliError::Config(
            "need nonempty --v/--s lists, mu_min < mu_max, and --grid >= 2".into(),
        ));
    }
    let mut pairs = Vec::new();
    for &v in vs {
        for &s in ss {
            pairs.push((
                GrnParams::new(v, s).map_err(|e| CliError::Config(e.to_string()))?,
                v,
                s,
            ));
        }
    }
    let mut w = Out::create(out)?;
    let pair_names: Vec<String> = pairs
        .iter()
        .map(|(_, v, s)| format!("v={v} s={}", param(*s)))
        .collect();
    w.line(&format!(
        "# z-curve mu=[{mu_min},{mu_max}] grid={grid} pairs=[{}]",
        pair_names.join("; ")
    ))?;
    let header: Vec<String> = std::iter::once("mu".to_string())
        .chain(pairs.iter().map(|(_, v, s)| format!("z[v={v},s={}]", param(*s))))
        .collect();
    w.line(&header.join(","))?;
    for i in 0..=grid {
        let mu = mu_min + (mu_max - mu_min) * i as f64 / grid as f64;
        let mut row = vec![sig12(mu)];
        for (params, _, _) in &pairs {
            row.push(sig12(z_eval(*params, mu)));
        }
        w.line(&row.join(","))?;
    }
    w.finish()?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn region(
    pair: &PairArgs,
    nu: f64,
    order: u8,
    s1: Option<f64>,
    s2_min: f64,
    s2_max: f64,
    grid: usize,
    out: &Option<PathBuf>,
) -> Result<(), CliError> {
    if !(nu > 0.0 && nu < 1.0) {
        return Err(CliError::Config(format!("--nu must lie in (0,1), got {nu}")));
    }
    if grid < 2 {
        return Err(CliError::Config("--grid must be at least 2".into()));
    }
    let (p, q) = load_pair(pair)?;
    let prof = profile(&p, &q);
    let mut w = Out::create(out)?;
    match order {
        1 => {
            w.line(&format!(
                "# region order=1 nu={nu} H_p={} H_q={}",
                sig12(prof.h_p),
                sig12(prof.h_q)
            ))?;
            w.line("s1,t1,class")?;
            for i in 1..=grid {
                let s1 = prof.h_p * i as f64 / grid as f64;
                let t1 = s1 / prof.h_q;
                let class = match classify_rate1(&prof, RatePair1 { s1, t1 }) {
                    Rate1Class::Admissible => "ADMISSIBLE",
                    Rate1Class::SemiAdmissible => "SEMI_ADMISSIBLE",
                    Rate1Class::Interior => "INTERIOR",
                    Rate1Class::Outside => "OUTSIDE",
                };
                w.line(&format!("{},{},{class}", sig12(s1), sig12(t1)))?;
            }
        }
        2 => {
            let s1 = s1.unwrap_or(prof.h_p);
            w.line(&format!(
                "# region order=2 nu={nu} s1={} s2=[{s2_min},{s2_max}] grid={grid}",
                sig12(s1)
            ))?;
            w.line("s2,t2,class")?;
            for i in 0..=grid {
                let s2 = s2_min + (s2_max - s2_min) * i as f64 / grid as f64;
                let t2 =
                    second_order_fidelity_inverse(&prof, s1, s2, nu).map_err(numeric_from_asym)?;
                let class = match classify_rate2(&prof, s1, nu, RatePair2 { s2, t2 })
                    .map_err(numeric_from_asym)?
                {
                    Rate2Class::Admissible => "ADMISSIBLE",
                    Rate2Class::SemiAdmissible => "SEMI_ADMISSIBLE",
                    Rate2Class::Interior => "INTERIOR",
                    Rate2Class::Outside => "OUTSIDE",
                    Rate2Class::Unresolved => "UNRESOLVED",
                };
                w.line(&format!("{},{},{class}", sig12(s2), sig12(t2)))?;
            }
        }
        other => {
            return Err(CliError::Config(format!(
                "--order must be 1 or 2, got {other}"
            )))
        }
    }
    w.finish()?;
    Ok(())
}

pub fn expand(
    pair: &PairArgs,
    nu: f64,
    s1: Option<f64>,
    s2: f64,
    ns: &[u64],
    out: &Option<PathBuf>,
) -> Result<(), CliError> {
    if !(nu > 0.0 && nu < 1.0) {
        return Err(CliError::Config(format!("--nu must lie in (0,1), got {nu}")));
    }
    if ns.is_empty() || ns.contains(&0) {
        return Err(CliError::Config("--n needs positive copy counts".into()));
    }
    let (p, q) = load_pair(pair)?;
    let prof = profile(&p, &q);
    let s1 = s1.unwrap_or(prof.h_p);
    let mut w = Out::create(out)?;
    w.line(&format!(
        "# expand nu={nu} s1={} s2={s2} H_p={} H_q={}",
        sig12(s1),
        sig12(prof.h_p),
        sig12(prof.h_q)
    ))?;
    w.line("n,predicted,exact,abs_gap_over_sqrt_n")?;
    for &n in ns {
        let predicted = expansion_l(&prof, s1, s2, nu, n).map_err(numeric_from_asym)?;
        let bits = s1 * n as f64 + s2 * (n as f64).sqrt();
        let exact = if bits < 0.0 {
            None
        } else {
            match iid_power(&p, n) {
                Ok(source) => grnconv_core::majorization::max_convertible_number(
                    &source,
                    &q,
                    nu,
                    Some(bits),
                    grnconv_core::majorization::ConversionMode::Majorization,
                )
                .ok(),
                Err(_) => None, // type-class budget exceeded: prediction only
            }
        };
        let gap = exact.map(|e| (e as f64 - predicted).abs() / (n as f64).sqrt());
        w.line(&format!(
            "{n},{},{},{}",
            sig12(predicted),
            exact.map_or_else(|| "NA".into(), |e| e.to_string()),
            sig12_opt(gap)
        ))?;
    }
    w.finish()?;
    Ok(())
}

pub fn fidelity_finite_n(
    pair: &PairArgs,
    s2: f64,
    t2: f64,
    ns: &[u64],
    out: &Option<PathBuf>,
) -> Result<(), CliError> {
    if ns.is_empty() || ns.contains(&0) {
        return Err(CliError::Config("--n needs positive copy counts".into()));
    }
    let (p, q) = load_pair(pair)?;
    let prof = profile(&p, &q);
    let predicted = second_order_fidelity(&prof, prof.h_p, s2, t2).map_err(numeric_from_asym)?;
    let t1 = prof.h_p / prof.h_q;
    let mut w = Out::create(out)?;
    w.line(&format!(
        "# fidelity-finite-n s1={} t1={} s2={s2} t2={t2} predicted={}",
        sig12(prof.h_p),
        sig12(t1),
        sig12(predicted)
    ))?;
    w.line("n,T_n,S_n_bits,exact,predicted,abs_gap")?;
    for &n in ns {
        let copies = (t1 * n as f64 + t2 * (n as f64).sqrt()).round().max(1.0) as u64;
        let bits = prof.h_p * n as f64 + s2 * (n as f64).sqrt();
        if bits < 0.0 {
            return Err(CliError::Config(format!(
                "storage size is negative at n={n} (s2 too small)"
            )));
        }
        let source = iid_power(&p, n).map_err(numeric_from_major)?;
        let target = iid_power(&q, copies).map_err(numeric_from_major)?;
        let exact = max_fidelity_majorization_with_storage(&source, &target, bits)
            .map_err(numeric_from_major)?
            .fidelity;
        w.line(&format!(
            "{n},{copies},{},{},{},{}",
            sig12(bits),
            sig12(exact),
            sig12(predicted),
            sig12((exact - predicted).abs())
        ))?;
    }
    w.finish()?;
    Ok(())
}

pub fn ratio(
    pair: &PairArgs,
    t2s: &[f64],
    s2_min: f64,
    s2_max: f64,
    grid: usize,
    out: &Option<PathBuf>,
) -> Result<(), CliError> {
    if t2s.is_empty() || grid < 2 || !(s2_min < s2_max) {
        return Err(CliError::Config(
            "need nonempty --t2, s2_min < s2_max, and --grid >= 2".into(),
        ));
    }
    let (p, q) = load_pair(pair)?;
    let prof = profile(&p, &q);
    let mut w = Out::create(out)?;
    w.line(&format!(
        "# ratio s2=[{s2_min},{s2_max}] grid={grid} C={} D={}",
        sig12(prof.c_pq),
        sig12(prof.d_pq)
    ))?;
    let header: Vec<String> = std::iter::once("s2".to_string())
        .chain(t2s.iter().map(|t| format!("ratio[t2={t}]")))
        .collect();
    w.line(&header.join(","))?;
    for i in 0..=grid {
        let s2 = s2_min + (s2_max - s2_min) * i as f64 / grid as f64;
        let ratios = asymptotics::ratio_curve(&prof, s2, t2s).map_err(numeric_from_asym)?;
        let mut row = vec![sig12(s2)];
        row.extend(ratios.into_iter().map(sig12_opt));
        w.line(&row.join(","))?;
    }
    w.finish()?;
    Ok(())
}

pub fn verify(seed: u64, grid: usize, tol: f64) -> Result<(), CliError> {
    if !(tol > 0.0) || grid < 2 {
        return Err(CliError::Config(
            "--tol must be positive and --grid at least 2".into(),
        ));
    }
    let checks = run_battery_scaled(seed, grid, tol);
    let mut failures = 0;
    for c in &checks {
        println!(
            "{} {} ({})",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
        if !c.passed {
            failures += 1;
        }
    }
    if failures > 0 {
        return Err(CliError::Verification(format!(
            "{failures} of {} checks failed",
            checks.len()
        )));
    }
    println!("all {} checks passed", checks.len());
    Ok(())
}

fn run_battery_scaled(seed: u64, grid: usize, tol: f64) -> Vec<grnconv_core::verify::Check> {
    let mut checks = run_battery(seed, grid);
    if (tol - 1.0).abs() > 1e-12 {
        // tolerance rescaling re-judges the gauge checks by their reported
        // worst value
        for c in &mut checks {
            if let Some((worst, base)) = parse_gauge(&c.detail) {
                c.passed = worst <= base * tol;
            }
        }
    }
    checks
}

fn parse_gauge(detail: &str) -> Option<(f64, f64)> {
    // "worst 1.2e-5 (tol 1e-3)"
    let rest = detail.strip_prefix("worst ")?;
    let mut parts = rest.splitn(2, " (tol ");
    let worst = parts.next()?.parse().ok()?;
    let tol = parts.next()?.strip_suffix(')')?.parse().ok()?;
    Some((worst, tol))
}
