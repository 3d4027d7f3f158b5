//! Lasso regularization path by LARS homotopy with the lasso modification
//! (active variables whose coefficient crosses zero leave the model).

use crate::design::{DesignMatrix, Response};
use crate::error::{Error, Result};
use crate::lasso::lambda_max;
use crate::linalg::{dot, gram, mul_cols, spd_solve_many};

/// Relative tolerance under which two entry candidates count as tied.
pub const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Enter,
    Leave,
}

/// One knot event: `variable` enters or leaves the active set at knot `step`
/// (1-based, `step = k` happens at `knots[k - 1]`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PathEvent {
    pub step: usize,
    pub variable: usize,
    pub kind: EventKind,
}

/// Why path computation stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathEnd {
    /// λ reached zero; the terminal solution is stored.
    Exhausted,
    /// The configured step or entry budget was used up.
    MaxSteps,
    /// The active Gram matrix became singular, or n variables are active
    /// (no further entry is possible before λ = 0).
    RankDeficient,
    /// Zero response: there are no knots at all.
    Empty,
}

/// Stopping rule for [`compute_path_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PathLimits {
    /// Maximum number of knots (enter and leave events both count).
    pub max_steps: usize,
    /// Stop once this many distinct variables have entered.
    pub max_distinct_entries: Option<usize>,
}

impl PathLimits {
    pub fn steps(max_steps: usize) -> Self {
        PathLimits {
            max_steps,
            max_distinct_entries: None,
        }
    }
}

/// Piecewise-linear lasso solution path.
///
/// `knots[k]`, `betas[k]`, `events[k]` and `active_sets[k]` all describe
/// knot `k + 1`: its penalty, the solution there, the event that happens,
/// and the active set on the segment just below it.
#[derive(Debug, Clone, PartialEq)]
pub struct LassoPath {
    pub knots: Vec<f64>,
    pub betas: Vec<Vec<f64>>,
    pub events: Vec<PathEvent>,
    pub active_sets: Vec<Vec<usize>>,
    /// Solution at λ = 0 when the path was followed to the end.
    pub terminal_beta: Option<Vec<f64>>,
    pub end: PathEnd,
    pub max_steps_reached: bool,
    p: usize,
}

/// Linear description of the path between two consecutive knots.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment<'a> {
    pub lambda_hi: f64,
    pub lambda_lo: f64,
    pub beta_hi: &'a [f64],
    pub beta_lo: &'a [f64],
    pub active_set: &'a [usize],
}

impl LassoPath {
    pub fn p(&self) -> usize {
        self.p
    }

    pub fn len(&self) -> usize {
        self.knots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.knots.is_empty()
    }

    /// Active set before knot 1 is empty; `active_before(k)` is Â_{k-1}.
    pub fn active_before(&self, step: usize) -> &[usize] {
        if step <= 1 {
            &[]
        } else {
            &self.active_sets[step - 2]
        }
    }

    /// Penalty of the knot following `step`, or 0 when `step` is the last
    /// knot of an exhausted path.
    pub fn next_lambda(&self, step: usize) -> Option<f64> {
        if step < self.knots.len() {
            Some(self.knots[step])
        } else if step == self.knots.len() && self.terminal_beta.is_some() {
            Some(0.0)
        } else {
            None
        }
    }

    /// Active set at the end of the computed path.
    pub fn final_active_set(&self) -> &[usize] {
        self.active_sets.last().map_or(&[], Vec::as_slice)
    }

    /// Segments between consecutive knots, including the final one down to
    /// λ = 0 for an exhausted path.
    pub fn segments(&self) -> Vec<Segment<'_>> {
        let mut out = Vec::with_capacity(self.knots.len());
        for k in 0..self.knots.len() {
            let (lambda_lo, beta_lo) = if k + 1 < self.knots.len() {
                (self.knots[k + 1], self.betas[k + 1].as_slice())
            } else if let Some(t) = &self.terminal_beta {
                (0.0, t.as_slice())
            } else {
                break;
            };
            out.push(Segment {
                lambda_hi: self.knots[k],
                lambda_lo,
                beta_hi: &self.betas[k],
                beta_lo,
                active_set: &self.active_sets[k],
            });
        }
        out
    }

    /// Entry events in order, as `(step, variable)`.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.events
            .iter()
            .filter(|e| e.kind == EventKind::Enter)
            .map(|e| (e.step, e.variable))
    }
}

/// Follows the path for at most `max_steps` knots.
pub fn compute_path(x: &DesignMatrix, y: &Response, max_steps: usize) -> Result<LassoPath> {
    compute_path_with(x, y, PathLimits::steps(max_steps))
}

/// Follows the path until the limits, λ = 0, or a singular active set.
pub fn compute_path_with(x: &DesignMatrix, y: &Response, limits: PathLimits) -> Result<LassoPath> {
    if limits.max_steps == 0 {
        return Err(Error::InvalidArgument(
            "max_steps must be at least 1".into(),
        ));
    }
    let lmax = lambda_max(x, y)?;
    let p = x.p();
    let mut path = LassoPath {
        knots: Vec::new(),
        betas: Vec::new(),
        events: Vec::new(),
        active_sets: Vec::new(),
        terminal_beta: None,
        end: PathEnd::Empty,
        max_steps_reached: false,
        p,
    };
    if lmax == 0.0 {
        return Ok(path);
    }
    let yv = y.as_slice();
    let corr0 = x.t_mul(yv);
    let first = pick_first(&corr0, lmax);
    let mut h = Homotopy::new(x, yv, None, vec![0.0; p], lmax);
    h.enter(first, corr0[first].signum());
    let mut ever_entered = vec![false; p];
    ever_entered[first] = true;
    let mut distinct = 1usize;
    record(&mut path, &h, first, EventKind::Enter);

    loop {
        if path.knots.len() >= limits.max_steps
            || limits.max_distinct_entries.is_some_and(|m| distinct >= m)
        {
            path.end = PathEnd::MaxSteps;
            path.max_steps_reached = true;
            return Ok(path);
        }
        match h.step(0.0) {
            Step::Event(kind, j) => {
                if kind == EventKind::Enter && !ever_entered[j] {
                    ever_entered[j] = true;
                    distinct += 1;
                }
                record(&mut path, &h, j, kind);
            }
            Step::Floor => {
                path.terminal_beta = Some(h.beta);
                path.end = PathEnd::Exhausted;
                return Ok(path);
            }
            Step::Singular => {
                path.end = PathEnd::RankDeficient;
                return Ok(path);
            }
        }
    }
}

/// Follows the lasso path restricted to `cols` from a solution `beta0` at
/// `lambda0` down to `target`. Returns `None` if the active Gram matrix
/// turns singular or the step budget runs out.
pub(crate) fn restricted_descent(
    x: &DesignMatrix,
    cols: &[usize],
    y: &[f64],
    beta0: &[f64],
    lambda0: f64,
    target: f64,
) -> Option<Vec<f64>> {
    let mut allowed = vec![false; x.p()];
    for &j in cols {
        allowed[j] = true;
    }
    let mut beta = vec![0.0; x.p()];
    for &j in cols {
        beta[j] = beta0[j];
    }
    let mut h = Homotopy::new(x, y, Some(allowed), beta, lambda0);
    for &j in cols {
        if h.beta[j] != 0.0 {
            let s = h.beta[j].signum();
            h.enter(j, s);
        }
    }
    h.last_entered = None;
    for _ in 0..4 * cols.len() + 20 {
        match h.step(target) {
            Step::Event(..) => {}
            Step::Floor => return Some(h.beta),
            Step::Singular => return None,
        }
    }
    None
}

enum Step {
    Event(EventKind, usize),
    /// The floor penalty was reached without further events.
    Floor,
    Singular,
}

/// LARS-lasso state: the active set with signs and the current solution.
struct Homotopy<'a> {
    x: &'a DesignMatrix,
    y: &'a [f64],
    /// Candidate columns; `None` means all.
    allowed: Option<Vec<bool>>,
    beta: Vec<f64>,
    lambda: f64,
    // active variables in entry order with their signs
    active: Vec<usize>,
    signs: Vec<f64>,
    in_active: Vec<bool>,
    last_entered: Option<usize>,
    // a variable that just left may only come back with the opposite sign
    just_left: Option<(usize, f64)>,
}

impl<'a> Homotopy<'a> {
    fn new(
        x: &'a DesignMatrix,
        y: &'a [f64],
        allowed: Option<Vec<bool>>,
        beta: Vec<f64>,
        lambda: f64,
    ) -> Self {
        Homotopy {
            x,
            y,
            allowed,
            beta,
            lambda,
            active: Vec::new(),
            signs: Vec::new(),
            in_active: vec![false; x.p()],
            last_entered: None,
            just_left: None,
        }
    }

    fn enter(&mut self, j: usize, sign: f64) {
        self.active.push(j);
        self.signs.push(sign);
        self.in_active[j] = true;
        self.last_entered = Some(j);
        self.just_left = None;
    }

    /// Moves λ down to the next knot (or to `floor`) and applies its event.
    fn step(&mut self, floor: f64) -> Step {
        let (x, yv) = (self.x, self.y);
        if self.active.len() >= x.n() {
            return Step::Singular;
        }
        // β_A(λ) = G⁻¹X_Aᵀy − λ·G⁻¹s_A on this segment
        let xty: Vec<f64> = self.active.iter().map(|&j| dot(x.col(j), yv)).collect();
        let Some(mut sols) = spd_solve_many(gram(x, &self.active), &[&self.signs, &xty]) else {
            return Step::Singular;
        };
        let ls_part = sols.pop().expect("two solutions");
        let dir = sols.pop().expect("two solutions");

        // residual and correlations follow the segment formula exactly, so
        // rounding cannot accumulate from knot to knot
        let ls_fit = mul_cols(x, &self.active, &ls_part);
        let resid: Vec<f64> = yv.iter().zip(&ls_fit).map(|(a, b)| a - b).collect();
        let u = mul_cols(x, &self.active, &dir);
        let lambda = self.lambda;

        // entry candidates: |c_j − δ a_j| = λ − δ with c_j = X_jᵀr(λ)
        let mut best_enter: Option<(f64, usize, f64)> = None;
        for j in 0..x.p() {
            if self.in_active[j] || self.allowed.as_ref().is_some_and(|a| !a[j]) {
                continue;
            }
            let left_sign = self.just_left.filter(|&(v, _)| v == j).map(|(_, s)| s);
            let a = dot(x.col(j), &u);
            let c = dot(x.col(j), &resid) + lambda * a;
            let mut delta = f64::INFINITY;
            let mut sign = 0.0;
            if 1.0 - a > 0.0 && left_sign != Some(1.0) {
                let d = (lambda - c).max(0.0) / (1.0 - a);
                if d < delta {
                    delta = d;
                    sign = 1.0;
                }
            }
            if 1.0 + a > 0.0 && left_sign != Some(-1.0) {
                let d = (lambda + c).max(0.0) / (1.0 + a);
                if d < delta {
                    delta = d;
                    sign = -1.0;
                }
            }
            if !delta.is_finite() {
                continue;
            }
            let better = match best_enter {
                None => true,
                // strictly smaller beyond the tie tolerance; ties keep the lower index
                Some((bd, _, _)) => delta < bd - TIE_TOL * lambda.max(bd),
            };
            if better {
                best_enter = Some((delta, j, sign));
            }
        }

        // leave candidates: active coefficient reaches zero at λ = ls_j / dir_j
        let mut best_leave: Option<(f64, usize)> = None;
        for (pos, &j) in self.active.iter().enumerate() {
            if Some(j) == self.last_entered || dir[pos] == 0.0 {
                continue;
            }
            let delta = lambda - ls_part[pos] / dir[pos];
            if delta > 0.0 && best_leave.is_none_or(|(bd, _)| delta < bd) {
                best_leave = Some((delta, pos));
            }
        }

        let delta_enter = best_enter.map_or(f64::INFINITY, |b| b.0);
        let delta_leave = best_leave.map_or(f64::INFINITY, |b| b.0);
        let delta = delta_enter.min(delta_leave);
        let to_floor = delta >= lambda - floor;
        self.lambda = if to_floor { floor } else { lambda - delta };
        for (pos, &j) in self.active.iter().enumerate() {
            self.beta[j] = ls_part[pos] - self.lambda * dir[pos];
        }
        if to_floor {
            return Step::Floor;
        }

        if delta_leave < delta_enter {
            let (_, pos) = best_leave.expect("leave candidate");
            let j = self.active.remove(pos);
            let s = self.signs.remove(pos);
            self.in_active[j] = false;
            self.beta[j] = 0.0;
            self.last_entered = None;
            self.just_left = Some((j, s));
            Step::Event(EventKind::Leave, j)
        } else {
            let (_, j, sign) = best_enter.expect("entry candidate");
            self.enter(j, sign);
            Step::Event(EventKind::Enter, j)
        }
    }
}

/// Largest |c_j|; ties within [`TIE_TOL`] go to the lowest index.
fn pick_first(corr: &[f64], lmax: f64) -> usize {
    corr.iter()
        .position(|c| c.abs() >= lmax * (1.0 - TIE_TOL))
        .expect("lambda_max attained")
}

fn record(path: &mut LassoPath, h: &Homotopy<'_>, variable: usize, kind: EventKind) {
    let step = path.knots.len() + 1;
    path.knots.push(h.lambda);
    path.betas.push(h.beta.clone());
    path.events.push(PathEvent {
        step,
        variable,
        kind,
    });
    let mut set = h.active.clone();
    set.sort_unstable();
    path.active_sets.push(set);
}

/// Coefficients at penalty `lambda` by linear interpolation between knots.
pub fn coef_at(path: &LassoPath, lambda: f64) -> Result<Vec<f64>> {
    if !(lambda >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "lambda must be nonnegative, got {lambda}"
        )));
    }
    let p = path.p;
    let Some(&first) = path.knots.first() else {
        return Ok(vec![0.0; p]);
    };
    if lambda >= first {
        return Ok(vec![0.0; p]);
    }
    for seg in path.segments() {
        if lambda <= seg.lambda_hi && lambda >= seg.lambda_lo {
            let width = seg.lambda_hi - seg.lambda_lo;
            if width == 0.0 {
                return Ok(seg.beta_lo.to_vec());
            }
            let t = (seg.lambda_hi - lambda) / width;
            return Ok(seg
                .beta_hi
                .iter()
                .zip(seg.beta_lo)
                .map(|(h, l)| h + t * (l - h))
                .collect());
        }
    }
    Err(Error::OutOfRange {
        lambda,
        last_knot: *path.knots.last().expect("nonempty"),
    })
}
