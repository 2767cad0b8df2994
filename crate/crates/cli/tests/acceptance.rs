//! Acceptance checks. Each criterion prints one `PASS` or `FAIL` line with the
//! measured values; the process exits non-zero if any criterion fails.

use std::fs;
use std::process::ExitCode;

use chaos_market::commands::{
    CommandOutput, EquilibriumSummary, IndependenceSummary, SweepSummary, TrajectorySummary,
};
use chaos_market::config::GridSpec;
use chaos_market::presets::{preset, PRESET_NAMES};
use chaos_market::{compute, execute, CommandKind, ResolvedRun};
use chaos_market_core::chaos::{
    analytic_lyapunov, autocorrelation, diagnose_regime, empirical_lyapunov, lyapunov_candidates,
    lyapunov_gap_closed_form, oscillation_volatility, v_infinity_formula, RegimeCriteria, RegimeLabel,
};
use chaos_market_core::distribution::excess_kurtosis;
use chaos_market_core::equilibrium::{chain_rule_bottom_row, jacobian_fd};
use chaos_market_core::monte_carlo::{converged_volatility, run_ensemble, volatility_curve, EnsembleConfig};
use chaos_market_core::{
    ed1, returns, simulate, simulate_with_guard, step, DivergenceGuard, ModelParams, PriceState, ShockSpec,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn params(a1: f64) -> ModelParams {
    ModelParams::new(1, 5, 0.01, a1).unwrap()
}

fn preset_run(name: &str) -> ResolvedRun {
    let p = preset(name).unwrap();
    let mut config = p.config;
    config.seed = Some(config.seed_value());
    ResolvedRun {
        command: p.command,
        preset: Some(p.name),
        figure: Some(p.figure),
        config,
        out: "unused".into(),
        threads: None,
    }
}

fn json<T: serde::de::DeserializeOwned>(out: &CommandOutput, name: &str) -> T {
    serde_json::from_str(&out.get(name).unwrap().contents).unwrap()
}

/// The seven-branch table, written independently of the library.
fn ed1_table(x: f64, w: f64) -> f64 {
    if x <= -3.0 * w {
        0.2
    } else if x <= -2.0 * w {
        -0.6 * x / w - 1.6
    } else if x <= -w {
        0.3 * x / w + 0.2
    } else if x <= w {
        0.1 * x / w
    } else if x <= 2.0 * w {
        0.3 * x / w - 0.2
    } else if x <= 3.0 * w {
        -0.6 * x / w + 1.6
    } else {
        -0.2
    }
}

fn demand_exactness() -> Outcome {
    let mut worst_table = 0.0f64;
    let mut worst_odd = 0.0f64;
    for w in [0.005, 0.01, 0.02] {
        for i in 0..10_000 {
            let x = -5.0 * w + 10.0 * w * i as f64 / 9_999.0;
            worst_table = worst_table.max((ed1(x, w).unwrap() - ed1_table(x, w)).abs());
            worst_odd = worst_odd.max((ed1(x, w).unwrap() + ed1(-x, w).unwrap()).abs());
        }
    }
    let mut worst_jump = 0.0f64;
    for w in [0.005, 0.01, 0.02] {
        for k in [-3.0, -2.0, -1.0, 1.0, 2.0, 3.0] {
            let b: f64 = k * w;
            let at = ed1(b, w).unwrap();
            let below = ed1(b * (1.0 - 1e-15), w).unwrap();
            let above = ed1(b * (1.0 + 1e-15), w).unwrap();
            worst_jump = worst_jump.max((at - below).abs()).max((at - above).abs());
        }
    }
    let pass = worst_table <= 1e-12 && worst_odd <= 1e-12 && worst_jump <= 1e-12;
    outcome(
        pass,
        format!("table err {worst_table:.1e}, odd err {worst_odd:.1e}, breakpoint jump {worst_jump:.1e} (tol 1e-12)"),
    )
}

fn regime_anchors() -> Outcome {
    let out = compute(&preset_run("fig2")).unwrap();
    let s: Vec<TrajectorySummary> = json(&out, "summary.json");
    let got: Vec<RegimeLabel> = s.iter().map(|t| t.regime.label).collect();
    let want = [RegimeLabel::Convergent, RegimeLabel::Chaotic, RegimeLabel::Oscillating];
    outcome(
        got == want,
        format!(
            "a1 0.049/0.26/0.39 -> {}",
            got.iter().map(|l| l.as_str()).collect::<Vec<_>>().join("/")
        ),
    )
}

fn transition_sensitivity() -> Outcome {
    let out = compute(&preset_run("fig4")).unwrap();
    let s: Vec<TrajectorySummary> = json(&out, "summary.json");
    let find = |a1: f64| s.iter().find(|t| t.a1 == a1).unwrap();
    let (lo, hi) = (find(0.0497), find(0.0498));
    let within = |p: f64, target: f64| (p - target).abs() <= 0.15 * target;
    let pass = lo.regime.label == RegimeLabel::Convergent
        && hi.regime.label == RegimeLabel::Convergent
        && within(lo.final_price, 41.0)
        && within(hi.final_price, 72.0);
    outcome(
        pass,
        format!(
            "limit(0.0497) = {:.2} [{}], limit(0.0498) = {:.2} [{}], targets 41 and 72 +-15%",
            lo.final_price,
            lo.regime.label.as_str(),
            hi.final_price,
            hi.regime.label.as_str()
        ),
    )
}

fn oscillation_onset() -> Outcome {
    let out = compute(&preset_run("fig5")).unwrap();
    let s: Vec<TrajectorySummary> = json(&out, "summary.json");
    let find = |a1: f64| s.iter().find(|t| t.a1 == a1).unwrap();
    let p_star = 10.0;
    let to_zero = |t: &TrajectorySummary| t.regime.label == RegimeLabel::Divergent && t.final_price < 0.1 * p_star;
    let centre = find(0.4).trailing_mean_price;
    let pass = to_zero(find(0.365))
        && to_zero(find(0.38))
        && find(0.39).regime.label == RegimeLabel::Oscillating
        && find(0.4).regime.label == RegimeLabel::Oscillating
        && (centre - 10.0).abs() <= 1.0;
    let d = |a1: f64| {
        let t = find(a1);
        format!("{}:{}@{:.2e}", a1, t.regime.label.as_str(), t.final_price)
    };
    outcome(
        pass,
        format!("{}, {}, {}, {}, centre(0.4) = {centre:.3}", d(0.365), d(0.38), d(0.39), d(0.4)),
    )
}

fn equilibrium_suite() -> Outcome {
    let mut fixed = true;
    for n in [3, 5, 10] {
        for p_star in [1.0, 10.0, 100.0] {
            for a1 in [0.05, 0.2, 0.4] {
                let p = ModelParams::new(1, n, 0.01, a1).unwrap();
                let s = PriceState::constant(p_star, n).unwrap();
                fixed &= step(&s, &p).unwrap().log_prices() == s.log_prices();
            }
        }
    }

    let mut run = preset_run("fig2");
    run.command = CommandKind::Equilibrium;
    let out = compute(&run).unwrap();
    let s: EquilibriumSummary = json(&out, "equilibrium.json");
    let not_unstable: Vec<String> = s
        .certificates
        .iter()
        .filter(|c| !(c.max_modulus > 1.0))
        .map(|c| format!("(a1={},w={},n={},p*={})", c.params.a1, c.params.w, c.params.n, c.p_star))
        .collect();

    // Oracle: d f / d y_i = [i = n] + a1 (0.1 / w) ([i = n] - 1/n) for m = 1.
    let mut worst_rel = 0.0f64;
    let mut printed_gap = 0.0f64;
    for c in &s.certificates {
        let p = c.params;
        let fd = jacobian_fd(&p, c.p_star, 1e-6 * c.p_star).unwrap().bottom_row();
        let k = p.a1 * 0.1 / p.w;
        for (i, v) in fd.iter().enumerate() {
            let last = i == p.n - 1;
            let oracle = if last { 1.0 } else { 0.0 } + k * (if last { 1.0 } else { 0.0 } - 1.0 / p.n as f64);
            worst_rel = worst_rel.max((v - oracle).abs() / oracle.abs());
        }
        for (lib, v) in chain_rule_bottom_row(&p).iter().zip(&fd) {
            worst_rel = worst_rel.max((lib - v).abs() / v.abs());
        }
        let printed = 1.0 + p.a1 * c.p_star * k * (1.0 - 1.0 / p.n as f64);
        if c.p_star != 1.0 {
            printed_gap = printed_gap.max((printed - fd[p.n - 1]).abs());
        }
    }
    let derivative_ok = worst_rel <= 1e-4;
    // The price-scaled bottom-right entry disagrees with the measured
    // derivative whenever p* != 1; the chain rule without it agrees.
    let discrepancy_resolved = derivative_ok && printed_gap > 1e-2;
    let pass = fixed && not_unstable.is_empty() && derivative_ok && discrepancy_resolved;
    outcome(
        pass,
        format!(
            "fixed points exact: {fixed}; max|lambda| > 1 at {}/{} points (not at {}); FD vs chain rule rel err {worst_rel:.1e}; price-scaled entry off by up to {printed_gap:.2}",
            s.certificates.len() - not_unstable.len(),
            s.certificates.len(),
            if not_unstable.is_empty() { "none".to_string() } else { not_unstable.join(" ") },
        ),
    )
}

fn lyapunov() -> Outcome {
    let p = params(0.17);
    let ens = run_ensemble(&EnsembleConfig {
        params: p,
        p_star: 10.0,
        v0: 1e-6,
        runs: 600,
        horizon: 100,
        seed: preset("fig8").unwrap().config.seed_value(),
    })
    .unwrap();
    let curve = volatility_curve(&ens).unwrap();
    let v_inf = converged_volatility(&curve, 0.25).unwrap().value;
    let fit = empirical_lyapunov(&curve, v_inf).unwrap();
    let l2 = analytic_lyapunov(&p).unwrap();
    let l2_oracle = (0.75f64 + 8.0 * 0.17).ln();

    let mut worst_l3 = 0.0f64;
    for a1 in GridSpec::range(0.1, 0.35, 0.005).points().unwrap() {
        let c = lyapunov_candidates(&params(a1)).unwrap();
        worst_l3 = worst_l3.max((c.l3 - c.l2).abs());
    }
    let mut worst_gap = 0.0f64;
    for n in [4, 5, 7, 10] {
        for w in [0.005, 0.01, 0.02] {
            for a1 in GridSpec::range(0.05, 0.45, 0.01).points().unwrap() {
                let q = ModelParams::new(1, n, w, a1).unwrap();
                let c = lyapunov_candidates(&q).unwrap();
                worst_gap = worst_gap.max((c.l3.exp() - c.l2.exp() - lyapunov_gap_closed_form(&q).unwrap()).abs());
            }
        }
    }
    let pass = (fit.exponent - 0.74).abs() <= 0.10
        && (l2 - 0.7467).abs() <= 1e-4
        && (l2 - l2_oracle).abs() <= 1e-12
        && worst_l3 < 0.05
        && worst_gap <= 1e-10;
    outcome(
        pass,
        format!(
            "fitted {:.3} over t={}..{} (target 0.74 +-0.10); L2 = {l2:.5}; max|L3-L2| on [0.1,0.35] = {worst_l3:.4}; gap identity err {worst_gap:.1e}",
            fit.exponent, fit.window.0, fit.window.1
        ),
    )
}

fn volatility_convergence() -> Outcome {
    let seed = preset("fig7").unwrap().config.seed_value();
    let mut parts = Vec::new();
    let mut pass = true;
    for v0 in [1e-5, 1e-4, 1e-3] {
        let ens = run_ensemble(&EnsembleConfig {
            params: params(0.17),
            p_star: 10.0,
            v0,
            runs: 100,
            horizon: 100,
            seed,
        })
        .unwrap();
        let v = converged_volatility(&volatility_curve(&ens).unwrap(), 0.25).unwrap();
        pass &= (v.value - 0.030).abs() <= 0.005 && !v.still_trending;
        parts.push(format!("v0={v0:e}: {:.4}", v.value));
    }
    let f17 = v_infinity_formula(0.17, 0.01);
    pass &= (f17 - 0.0295).abs() < 1e-4;
    parts.push(format!("formula(0.17) = {f17:.5}"));
    for (a1, target) in [(0.12, 0.019), (0.14, 0.023), (0.18, 0.031)] {
        let f = v_infinity_formula(a1, 0.01);
        let ens = run_ensemble(&EnsembleConfig {
            params: params(a1),
            p_star: 10.0,
            v0: 1e-3,
            runs: 600,
            horizon: 100,
            seed,
        })
        .unwrap();
        let mc = converged_volatility(&volatility_curve(&ens).unwrap(), 0.25).unwrap().value;
        pass &= (f - target).abs() <= 0.001 && (mc - f).abs() <= 0.2 * f;
        parts.push(format!("a1={a1}: formula {f:.5} vs MC {mc:.5}"));
    }
    outcome(pass, parts.join("; "))
}

fn oscillation_law() -> Outcome {
    let shock = ShockSpec::from_simple_return(10.0, 0.01).unwrap();
    let criteria = RegimeCriteria::default();
    let mut checked = 0;
    let mut worst = 0.0f64;
    let mut excluded = Vec::new();
    for a1 in GridSpec::range(0.3, 0.45, 0.0025).points().unwrap() {
        let p = params(a1);
        let law = oscillation_volatility(&p).unwrap();
        if !law.constraint_holds {
            continue;
        }
        let traj = simulate(&p, &shock, criteria.horizon).unwrap();
        let d = diagnose_regime(&traj, &criteria);
        if !(d.label == RegimeLabel::Oscillating && d.period == Some(2)) {
            excluded.push(format!("{a1}:{}", d.label.as_str()));
            continue;
        }
        let r = returns(&traj).unwrap();
        let tail = &r[r.len() - 100..];
        let v = (tail.iter().map(|x| x * x).sum::<f64>() / tail.len() as f64).sqrt();
        worst = worst.max((v - law.v_inf).abs() / law.v_inf);
        checked += 1;
    }
    outcome(
        checked >= 20 && worst <= 1e-3,
        format!(
            "{checked} two-value steady states, max rel err {worst:.1e}; constraint holds but no two-value steady state at {}",
            excluded.join(" ")
        ),
    )
}

fn independence() -> Outcome {
    let out = compute(&preset_run("fig12")).unwrap();
    let s: IndependenceSummary = json(&out, "independence.json");
    let i = |a1: f64| s.drift.iter().find(|d| d.a1 == a1).unwrap().report.distance;
    let (i12, i14, i18) = (i(0.12), i(0.14), i(0.18));
    let sweep = compute(&preset_run("fig13")).unwrap();
    let sw: SweepSummary = json(&sweep, "sweep.json");
    let crossing_ok = sw.zero_crossing.is_some_and(|(a, b)| a >= 0.13 - 1e-12 && b <= 0.16 + 1e-12);
    let pass = i12 > 0.0 && i18 < 0.0 && i14.abs() < i12.abs() && i14.abs() < i18.abs() && crossing_ok;
    outcome(
        pass,
        format!(
            "I(0.12) = {i12:+.4}, I(0.14) = {i14:+.4}, I(0.18) = {i18:+.4}; sweep crosses zero in {:?}",
            sw.zero_crossing
        ),
    )
}

fn stylized_facts() -> Outcome {
    let shock = ShockSpec::from_simple_return(10.0, 0.01).unwrap();
    let series = |a1: f64| {
        let traj = simulate_with_guard(&params(a1), &shock, 101_000, DivergenceGuard::disabled()).unwrap();
        returns(&traj).unwrap()[1000..].to_vec()
    };
    let r10 = series(0.1);
    let ac10 = autocorrelation(&r10, 20).unwrap();
    let positive = ac10.iter().all(|&x| x > 0.0);
    let mut parts = vec![format!(
        "a1=0.1 lags 1-20 positive: {positive} (lag1 {:+.3}, min {:+.3})",
        ac10[0],
        ac10.iter().cloned().fold(f64::INFINITY, f64::min)
    )];
    let mut decays = true;
    for a1 in [0.14, 0.34] {
        let r = series(a1);
        let ac = autocorrelation(&r, 20).unwrap();
        let band = 2.0 / (r.len() as f64).sqrt();
        let ok = ac[4].abs() < band;
        decays &= ok;
        parts.push(format!("a1={a1} |rho(5)| = {:.3} vs 2/sqrt(N) = {band:.4}", ac[4].abs()));
    }
    let r14 = series(0.14);
    let k = excess_kurtosis(&r14).unwrap();
    parts.push(format!("excess kurtosis(0.14) = {k:+.3}"));
    outcome(positive && decays && k > 0.0, parts.join("; "))
}

fn reproducibility() -> Outcome {
    let root = tempfile::tempdir().unwrap();
    let mut names: Vec<&str> = PRESET_NAMES.to_vec();
    names.push("equilibrium");
    let mut mismatched = Vec::new();
    for name in &names {
        let mut dirs = Vec::new();
        for (i, threads) in [Some(1), Some(4), None].into_iter().enumerate() {
            let mut run = if *name == "equilibrium" {
                let mut r = preset_run("fig2");
                r.command = CommandKind::Equilibrium;
                r.preset = None;
                r.figure = None;
                r
            } else {
                preset_run(name)
            };
            run.threads = threads;
            run.out = root.path().join(format!("{name}-{i}"));
            execute(&run).unwrap();
            let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(&run.out)
                .unwrap()
                .map(|e| {
                    let e = e.unwrap();
                    (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
                })
                .collect();
            files.sort();
            dirs.push(files);
        }
        if dirs.windows(2).any(|w| w[0] != w[1]) {
            mismatched.push(name.to_string());
        }
    }
    outcome(
        mismatched.is_empty(),
        format!(
            "{} runs x 3 (threads 1, 4, default) byte-identical; mismatches: {}",
            names.len(),
            if mismatched.is_empty() { "none".to_string() } else { mismatched.join(", ") }
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("demand function exactness", demand_exactness),
        ("regime anchors", regime_anchors),
        ("transition sensitivity", transition_sensitivity),
        ("oscillation onset", oscillation_onset),
        ("fixed points and linear instability", equilibrium_suite),
        ("Lyapunov exponent", lyapunov),
        ("volatility convergence", volatility_convergence),
        ("oscillation volatility law", oscillation_law),
        ("distance to independence", independence),
        ("autocorrelation and kurtosis", stylized_facts),
        ("reproducibility", reproducibility),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!("{} [{:>2}] {name}: {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
