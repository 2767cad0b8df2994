//! Named configurations that regenerate the data behind each figure.

use crate::config::*;
use crate::CommandKind;

#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub figure: &'static str,
    pub command: CommandKind,
    pub config: RunConfig,
}

pub const PRESET_NAMES: [&str; 17] = [
    "fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9", "fig10", "fig11", "fig12", "fig13",
    "fig14", "fig15", "fig16", "fig17", "figA1",
];

fn with(f: impl FnOnce(&mut RunConfig)) -> RunConfig {
    let mut c = RunConfig::default();
    f(&mut c);
    c
}

fn ensemble(runs: usize, horizon: usize, v0: f64) -> EnsembleSection {
    EnsembleSection {
        runs,
        horizon,
        v0,
        ..EnsembleSection::default()
    }
}

pub fn preset(name: &str) -> Option<Preset> {
    use CommandKind::*;
    let (figure, command, config) = match name {
        "fig2" => (
            "Fig. 2: convergent, chaotic and oscillating price trajectories",
            Simulate,
            with(|c| c.simulate.a1_values = vec![0.049, 0.26, 0.39]),
        ),
        "fig3" => (
            "Fig. 3: regime zones over a1",
            Sweep,
            with(|c| {
                c.sweep.kind = SweepKind::Regimes;
                c.sweep.grid = GridSpec::range(0.01, 0.45, 0.0025);
            }),
        ),
        "fig4" => (
            "Fig. 4: trajectories leaving the convergent zone",
            Simulate,
            with(|c| c.simulate.a1_values = vec![0.049, 0.0495, 0.0496, 0.0497, 0.0498]),
        ),
        "fig5" => (
            "Fig. 5: trajectories entering the oscillation zone",
            Simulate,
            with(|c| c.simulate.a1_values = vec![0.365, 0.38, 0.39, 0.4]),
        ),
        "fig6" => (
            "Fig. 6: Monte Carlo return paths and the random-walk reference",
            Lyapunov,
            with(|c| {
                c.ensemble = ensemble(100, 100, 1e-3);
                c.lyapunov.v0_values = vec![1e-5, 1e-4, 1e-3];
                c.lyapunov.fit = false;
                c.lyapunov.return_paths = 100;
                c.lyapunov.random_walk = Some(RandomWalkSection::default());
            }),
        ),
        "fig7" => (
            "Fig. 7: volatility v(t) for three initial shock scales",
            Lyapunov,
            with(|c| {
                c.ensemble = ensemble(100, 100, 1e-3);
                c.lyapunov.v0_values = vec![1e-5, 1e-4, 1e-3];
                c.lyapunov.fit = false;
                c.lyapunov.random_walk = Some(RandomWalkSection::default());
            }),
        ),
        "fig8" => (
            "Fig. 8: ln v(t) and the fitted Lyapunov exponent",
            Lyapunov,
            with(|c| {
                c.ensemble = ensemble(600, 100, 1e-6);
                c.lyapunov.v0_values = vec![1e-6, 1e-5, 1e-4, 1e-3];
            }),
        ),
        "fig9" => (
            "Fig. 9: ln v(t) for five strengths",
            Lyapunov,
            with(|c| {
                c.ensemble = ensemble(600, 100, 1e-6);
                c.lyapunov.a1_values = vec![0.12, 0.17, 0.22, 0.27, 0.32];
                c.lyapunov.v0_values = vec![1e-6];
            }),
        ),
        "fig10" => (
            "Fig. 10: converged volatility against a1",
            Sweep,
            with(|c| {
                c.ensemble = ensemble(100, 200, 1e-3);
                c.sweep.kind = SweepKind::Volatility;
                c.sweep.grid = GridSpec::range(0.01, 0.45, 0.005);
            }),
        ),
        "fig11" => (
            "Fig. 11: converged volatility against w",
            Sweep,
            with(|c| {
                c.model.a1 = 0.2;
                c.ensemble = ensemble(100, 200, 1e-3);
                c.sweep.kind = SweepKind::Volatility;
                c.sweep.axis = SweepAxis::W;
                c.sweep.grid = GridSpec::range(0.0005, 0.04, 0.0005);
            }),
        ),
        "fig12" => (
            "Fig. 12: drift d(t) against the random-walk reference",
            Independence,
            with(|c| {
                c.ensemble = ensemble(600, 50, 1e-3);
                c.independence.a1_values = vec![0.12, 0.14, 0.18];
            }),
        ),
        "fig13" => (
            "Fig. 13: distance to independence against a1",
            Sweep,
            with(|c| {
                c.ensemble = ensemble(600, 50, 1e-3);
                c.sweep.kind = SweepKind::Independence;
                c.sweep.grid = GridSpec::range(0.1, 0.2, 0.005);
            }),
        ),
        "fig14" => (
            "Fig. 14: distance to independence against w",
            Sweep,
            with(|c| {
                c.model.a1 = 0.2;
                c.ensemble = ensemble(600, 50, 1e-3);
                c.sweep.kind = SweepKind::Independence;
                c.sweep.axis = SweepAxis::W;
                c.sweep.grid = GridSpec::range(0.008, 0.02, 0.0005);
            }),
        ),
        "fig15" => (
            "Fig. 15: return autocorrelations",
            Independence,
            with(|c| {
                c.independence.a1_values = vec![0.1, 0.14, 0.34];
                c.independence.drift = false;
                c.independence.autocorrelation = true;
            }),
        ),
        "fig16" => (
            "Fig. 16: attractor projection on (r_{t-1}, r_t)",
            Distribution,
            with(|c| c.model.a1 = 0.14),
        ),
        "fig17" => (
            "Fig. 17: return density against the matched Gaussian",
            Distribution,
            with(|c| c.model.a1 = 0.14),
        ),
        "figA1" => (
            "Fig. A1: Lyapunov exponent candidates L1, L2, L3 against a1",
            Lyapunov,
            with(|c| {
                c.lyapunov.v0_values = Vec::new();
                c.lyapunov.fit = false;
                c.lyapunov.candidates = Some(GridSpec::range(0.05, 0.4, 0.005));
            }),
        ),
        _ => return None,
    };
    let name = PRESET_NAMES.iter().copied().find(|p| *p == name)?;
    Some(Preset {
        name,
        figure,
        command,
        config,
    })
}
