//! Probability that the first `k0` variables to enter the lasso path are
//! exactly the true active set.

use covtest_core::{compute_path_with, EventKind, PathLimits};

use crate::config::{FigureSection, ScenarioConfig};
use crate::error::Result;
use crate::generate::Replicate;
use crate::runner::run_replicates;

/// Outcome of one replicate at one point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventBOutcome {
    Hit,
    Miss,
    /// Path computation failed; counted as a miss and reported separately.
    Failed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventBPoint {
    pub k0: usize,
    pub coef_size: f64,
    pub fraction: f64,
    /// Binomial Monte-Carlo standard error of `fraction`.
    pub se: f64,
    pub runs: usize,
    pub failures: usize,
}

impl EventBPoint {
    fn from_outcomes(k0: usize, coef_size: f64, outcomes: &[EventBOutcome]) -> Self {
        let runs = outcomes.len();
        let hits = outcomes
            .iter()
            .filter(|o| **o == EventBOutcome::Hit)
            .count();
        let failures = outcomes
            .iter()
            .filter(|o| **o == EventBOutcome::Failed)
            .count();
        let fraction = hits as f64 / runs as f64;
        let se = (fraction * (1.0 - fraction) / runs as f64).sqrt();
        EventBPoint {
            k0,
            coef_size,
            fraction,
            se,
            runs,
            failures,
        }
    }
}

/// The first `k0` distinct variables to enter, in entry order.
pub fn first_entries(rep: &Replicate, cfg: &ScenarioConfig) -> Result<(Vec<usize>, Vec<usize>)> {
    let data = rep.scenario(cfg);
    let limits = PathLimits {
        max_steps: 50 * cfg.k0 + 100,
        max_distinct_entries: Some(cfg.k0),
    };
    let path = compute_path_with(&rep.x, &data.y, limits)?;
    let mut seen = Vec::with_capacity(cfg.k0);
    for e in path.events.iter().filter(|e| e.kind == EventKind::Enter) {
        if !seen.contains(&e.variable) {
            seen.push(e.variable);
        }
        if seen.len() == cfg.k0 {
            break;
        }
    }
    Ok((seen, data.a_star))
}

fn outcome(rep: &Replicate, cfg: &ScenarioConfig) -> EventBOutcome {
    match first_entries(rep, cfg) {
        Ok((mut seen, a_star)) => {
            seen.sort_unstable();
            if seen == a_star {
                EventBOutcome::Hit
            } else {
                EventBOutcome::Miss
            }
        }
        Err(_) => EventBOutcome::Failed,
    }
}

/// Fraction of `cfg.runs` replicates where event B holds.
pub fn prob_event_b(cfg: &ScenarioConfig, jobs: usize) -> Result<EventBPoint> {
    cfg.validate()?;
    let outcomes = run_replicates(cfg.runs, jobs, |run| match Replicate::draw(cfg, run) {
        Ok(rep) => outcome(&rep, cfg),
        Err(_) => EventBOutcome::Failed,
    })?;
    Ok(EventBPoint::from_outcomes(cfg.k0, cfg.coef_size, &outcomes))
}

/// Every (k0, size) point of a figure sweep; each replicate's design and
/// noise are drawn once and shared by all points. Points are ordered by k0,
/// then size.
pub fn figure_grid(
    base: &ScenarioConfig,
    fig: &FigureSection,
    jobs: usize,
) -> Result<Vec<EventBPoint>> {
    base.validate()?;
    let points: Vec<ScenarioConfig> = fig
        .k0_values
        .iter()
        .flat_map(|&k0| {
            fig.coef_sizes
                .iter()
                .map(move |&s| base.with_k0(k0).with_coef_size(s))
        })
        .collect();
    for p in &points {
        p.validate()?;
    }
    let per_run = run_replicates(base.runs, jobs, |run| match Replicate::draw(base, run) {
        Ok(rep) => points
            .iter()
            .map(|cfg| outcome(&rep, cfg))
            .collect::<Vec<_>>(),
        Err(_) => vec![EventBOutcome::Failed; points.len()],
    })?;
    Ok(points
        .iter()
        .enumerate()
        .map(|(i, cfg)| {
            let col: Vec<EventBOutcome> = per_run.iter().map(|r| r[i]).collect();
            EventBPoint::from_outcomes(cfg.k0, cfg.coef_size, &col)
        })
        .collect())
}
