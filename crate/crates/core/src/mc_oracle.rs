//! Monte Carlo oracle for the drawdown functionals.
//!
//! Paths of `X` are built from exact compound-Poisson jump epochs with
//! exponential sizes; between jumps the drift and diffusion are advanced on a
//! `dt` grid. Within a step `X` is a Brownian bridge between its end points,
//! so the extremes of the step are drawn from their exact conditional law:
//! the bridge minimum of `Y` decides the passage below `h` and the increase
//! of `S`, the bridge maximum decides default. This removes the `sqrt(dt)`
//! bias of monitoring at grid points only.
//!
//! Two refinements keep desk-scale runs tractable without changing what is
//! estimated:
//!
//! * With `sigma = 0` the motion between jumps is deterministic, so each
//!   inter-jump segment is integrated in closed form (crossing times and the
//!   discounted increase of `S` are exact).
//! * With `sigma > 0`, while the drawdown is far from every level that matters
//!   (0, `h`, `b`) several grid steps are merged into one Gaussian increment.
//!   Merging is only done when a crossing within the merged step would need a
//!   move of more than [`MERGE_SIGMAS`] standard deviations, so the fine grid
//!   would have recorded no event there either.
//!
//! Every path owns three ChaCha streams (jumps, Brownian increments and bridge
//! extremes) selected
//! from the seed and the path index, and batches are reduced in index order,
//! so results are bit-identical for a given config regardless of the number of
//! threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cds::{CdsTerms, SwitchPayoff, SwitchTerms};
use crate::error::{Error, Result};
use crate::levy_model::JumpDiffusionModel;
use crate::scale_fn::ScaleEvaluator;

/// Distance, in standard deviations of the merged increment, that the
/// drawdown must keep from every level before grid steps are merged.
pub const MERGE_SIGMAS: f64 = 6.0;

const MERGE_FACTORS: [f64; 13] = [
    4096.0, 2048.0, 1024.0, 512.0, 256.0, 128.0, 64.0, 32.0, 16.0, 8.0, 4.0, 2.0, 1.0,
];

/// Bridge extremes are only drawn when an end point lies within this many
/// step standard deviations of a level; beyond it the crossing probability
/// is below `exp(-2 * 8^2)`.
const BRIDGE_SIGMAS: f64 = 8.0;

/// Paths per parallel work item.
const BATCH: usize = 512;

/// Discount mass ignored by the default horizon, `exp(-r * horizon)`.
pub const DEFAULT_HORIZON_MASS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathConfig {
    pub dt: f64,
    /// Cap on simulated time; `None` picks `ln(1e8) / r`.
    pub horizon: Option<f64>,
    pub n_paths: usize,
    pub seed: u64,
    /// Pair each path with one driven by the negated Brownian increments.
    pub antithetic: bool,
}

impl Default for PathConfig {
    fn default() -> Self {
        Self {
            dt: 1e-4,
            horizon: None,
            n_paths: 200_000,
            seed: 20_240_517,
            antithetic: false,
        }
    }
}

impl PathConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidPathConfig(format!("dt must be > 0, got {}", self.dt)));
        }
        if let Some(h) = self.horizon {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::InvalidPathConfig(format!("horizon must be > 0, got {h}")));
            }
        }
        if self.n_paths == 0 {
            return Err(Error::InvalidPathConfig("n_paths must be >= 1".into()));
        }
        if self.antithetic && !self.n_paths.is_multiple_of(2) {
            return Err(Error::InvalidPathConfig(
                "antithetic sampling needs an even n_paths".into(),
            ));
        }
        Ok(())
    }

    pub fn horizon_for(&self, r: f64) -> f64 {
        self.horizon
            .unwrap_or_else(|| -DEFAULT_HORIZON_MASS.ln() / r.max(1e-12))
    }
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    /// Number of independent samples (pairs when antithetic).
    pub n_effective: usize,
    /// Share of paths that reached the horizon before default.
    pub censored_fraction: f64,
}

impl McEstimate {
    /// `(analytic - mean) / std_error`; infinite when a non-zero gap has zero
    /// standard error.
    pub fn z_score(&self, analytic: f64) -> f64 {
        let gap = analytic - self.mean;
        if self.std_error > 0.0 {
            gap / self.std_error
        } else if gap.abs() <= 1e-12 * analytic.abs().max(1.0) {
            0.0
        } else {
            f64::INFINITY * gap.signum()
        }
    }

    /// Whether `analytic` lies within `k` standard errors (with a floating
    /// point allowance for deterministic estimates).
    pub fn agrees_with(&self, analytic: f64, k: f64) -> bool {
        self.z_score(analytic).abs() <= k
    }
}

/// Running mean and variance (Welford), mergeable in a fixed order.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn merge(&mut self, other: &Moments) {
        if other.n == 0 {
            return;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        self.mean += d * other.n as f64 / n as f64;
        self.m2 += other.m2 + d * d * (self.n as f64) * (other.n as f64) / n as f64;
        self.n = n;
    }

    fn estimate(&self, censored_fraction: f64) -> McEstimate {
        let var = if self.n > 1 {
            self.m2 / (self.n - 1) as f64
        } else {
            0.0
        };
        McEstimate {
            mean: self.mean,
            std_error: (var / self.n.max(1) as f64).sqrt(),
            n_effective: self.n,
            censored_fraction,
        }
    }
}

/// Events reported by the path engine.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Event {
    /// Increase of the running maximum, already discounted at rate `r`.
    MaxIncrease { discounted: f64 },
    /// First time the drawdown is below the lower level.
    LowerCrossing { t: f64, y: f64 },
    /// Drawdown above the default level.
    Default { t: f64, y: f64 },
    Checkpoint { index: usize, y: f64 },
    Horizon,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Control {
    Continue,
    Stop,
}

struct PathStreams {
    jumps: ChaCha8Rng,
    normals: ChaCha8Rng,
    bridge: ChaCha8Rng,
    negate: bool,
}

impl PathStreams {
    fn new(seed: u64, pair: u64, negate: bool) -> Self {
        let stream = |id: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(id);
            rng
        };
        Self {
            jumps: stream(3 * pair),
            normals: stream(3 * pair + 1),
            bridge: stream(3 * pair + 2),
            negate,
        }
    }

    /// Uniform on `(0, 1]` for the bridge extremes.
    fn bridge_uniform(&mut self) -> f64 {
        let u: f64 = self.bridge.random();
        1.0 - u
    }

    /// Minimum of a Brownian bridge from `a` to `b` with variance `var`.
    fn bridge_min(&mut self, a: f64, b: f64, var: f64) -> f64 {
        let u = self.bridge_uniform();
        0.5 * (a + b - ((b - a).powi(2) - 2.0 * var * u.ln()).sqrt())
    }

    /// Maximum of a Brownian bridge from `a` to `b` with variance `var`.
    fn bridge_max(&mut self, a: f64, b: f64, var: f64) -> f64 {
        let u = self.bridge_uniform();
        0.5 * (a + b + ((b - a).powi(2) - 2.0 * var * u.ln()).sqrt())
    }

    fn exponential(&mut self, rate: f64) -> f64 {
        // 1 - U lies in (0, 1]
        let u: f64 = self.jumps.random();
        -(1.0 - u).ln() / rate
    }

    fn normal(&mut self) -> f64 {
        let z: f64 = StandardNormal.sample(&mut self.normals);
        if self.negate {
            -z
        } else {
            z
        }
    }
}

/// Simulates one drawdown path and feeds events to `observer` until it asks
/// to stop, the path defaults, or the horizon is reached.
struct DrawdownEngine<'a> {
    model: &'a JumpDiffusionModel,
    r: f64,
    b: f64,
    lower: Option<f64>,
    dt: f64,
    horizon: f64,
    checkpoints: &'a [f64],
}

impl DrawdownEngine<'_> {
    fn run<F: FnMut(Event) -> Control>(&self, y0: f64, streams: &mut PathStreams, mut observer: F) {
        let m = self.model;
        let mut t = 0.0;
        let mut y = y0;
        let mut lower = self.lower;
        let mut next_checkpoint = 0;

        if y > self.b {
            observer(Event::Default { t, y });
            return;
        }
        if let Some(h) = lower {
            // started at or below the level: the crossing is immediate
            if y <= h {
                lower = None;
                if observer(Event::LowerCrossing { t, y }) == Control::Stop {
                    return;
                }
            }
        }
        while next_checkpoint < self.checkpoints.len() && self.checkpoints[next_checkpoint] <= 0.0 {
            if observer(Event::Checkpoint {
                index: next_checkpoint,
                y,
            }) == Control::Stop
            {
                return;
            }
            next_checkpoint += 1;
        }

        let mut next_jump = streams.exponential(m.jump_rate);
        loop {
            let checkpoint_time = self
                .checkpoints
                .get(next_checkpoint)
                .copied()
                .unwrap_or(f64::INFINITY);
            let limit = next_jump.min(self.horizon).min(checkpoint_time);

            if m.has_unbounded_variation() {
                let gap = match lower {
                    Some(h) => y.min(self.b - y).min(y - h),
                    None => y.min(self.b - y),
                };
                let mut step = self.dt;
                for factor in MERGE_FACTORS {
                    let candidate = factor * self.dt;
                    if MERGE_SIGMAS * m.sigma * candidate.sqrt() + m.mu.abs() * candidate < gap {
                        step = candidate;
                        break;
                    }
                }
                let reached_limit = t + step >= limit;
                let step = if reached_limit { limit - t } else { step };
                let sd = m.sigma * step.sqrt();
                let start = y;
                let end = y - m.mu * step - sd * streams.normal();
                t = if reached_limit { limit } else { t + step };
                let var = sd * sd;
                // extremes of Y over the step with S held at its start value
                let floor = lower.unwrap_or(0.0);
                let low = if start.min(end) - floor < BRIDGE_SIGMAS * sd {
                    streams.bridge_min(start, end, var)
                } else {
                    start.min(end)
                };
                let high = if self.b - start.max(end) < BRIDGE_SIGMAS * sd {
                    streams.bridge_max(start, end, var)
                } else {
                    start.max(end)
                };
                y = end;
                if let Some(h) = lower {
                    if low < h {
                        lower = None;
                        if observer(Event::LowerCrossing { t, y: h }) == Control::Stop {
                            return;
                        }
                    }
                }
                if low < 0.0 {
                    // S rises by -low; Y is measured from the new maximum
                    y -= low;
                    let discounted = (-self.r * t).exp() * (-low);
                    if observer(Event::MaxIncrease { discounted }) == Control::Stop {
                        return;
                    }
                }
                if high > self.b {
                    observer(Event::Default { t, y: self.b });
                    return;
                }
                if !reached_limit {
                    continue;
                }
            } else {
                // Deterministic segment: Y falls at rate mu, then S grows.
                if let Some(h) = lower {
                    let cross = t + (y - h) / m.mu;
                    if cross < limit {
                        t = cross;
                        y = h;
                        lower = None;
                        if observer(Event::LowerCrossing { t, y }) == Control::Stop {
                            return;
                        }
                        continue;
                    }
                }
                let to_zero = t + y / m.mu;
                if to_zero < limit {
                    let discounted =
                        m.mu * ((-self.r * to_zero).exp() - (-self.r * limit).exp()) / self.r;
                    y = 0.0;
                    if observer(Event::MaxIncrease { discounted }) == Control::Stop {
                        return;
                    }
                } else {
                    y -= m.mu * (limit - t);
                }
                t = limit;
            }

            // t == limit here
            if t >= self.horizon {
                observer(Event::Horizon);
                return;
            }
            if t == checkpoint_time {
                if observer(Event::Checkpoint {
                    index: next_checkpoint,
                    y,
                }) == Control::Stop
                {
                    return;
                }
                next_checkpoint += 1;
            }
            if t == next_jump {
                y += streams.exponential(m.jump_decay);
                next_jump = t + streams.exponential(m.jump_rate);
                if y > self.b {
                    observer(Event::Default { t, y });
                    return;
                }
            }
        }
    }
}

/// Per-path summary of a run to default (or horizon).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    /// `tau_h-` when it occurred before default.
    pub tau_lower: Option<f64>,
    pub y_at_lower: f64,
    /// `tau_b+`; `None` when the horizon was reached first.
    pub tau_default: Option<f64>,
    /// `int_0^{tau_b+} exp(-r t) dS_t`.
    pub discounted_ds: f64,
    /// Same integral stopped at `tau_h- ∧ tau_b+`.
    pub discounted_ds_before_lower: f64,
}

impl PathRecord {
    pub fn censored(&self) -> bool {
        self.tau_default.is_none()
    }

    fn discount(r: f64, t: Option<f64>) -> f64 {
        t.map_or(0.0, |t| (-r * t).exp())
    }
}

/// Shared simulation setup for all oracle entry points.
#[derive(Debug, Clone, Copy)]
pub struct DrawdownSimulator {
    pub model: JumpDiffusionModel,
    pub r: f64,
    pub b: f64,
    pub cfg: PathConfig,
}

impl DrawdownSimulator {
    pub fn new(model: JumpDiffusionModel, r: f64, b: f64, cfg: PathConfig) -> Result<Self> {
        model.validate()?;
        cfg.validate()?;
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidPathConfig(format!("r must be > 0, got {r}")));
        }
        if !(b > 0.0 && b.is_finite()) {
            return Err(Error::InvalidPathConfig(format!("b must be > 0, got {b}")));
        }
        Ok(Self { model, r, b, cfg })
    }

    fn engine<'a>(&'a self, lower: Option<f64>, checkpoints: &'a [f64], horizon: f64) -> DrawdownEngine<'a> {
        DrawdownEngine {
            model: &self.model,
            r: self.r,
            b: self.b,
            lower,
            dt: self.cfg.dt,
            horizon,
            checkpoints,
        }
    }

    fn record_path(&self, y0: f64, lower: Option<f64>, streams: &mut PathStreams) -> PathRecord {
        let engine = self.engine(lower, &[], self.cfg.horizon_for(self.r));
        let mut rec = PathRecord {
            tau_lower: None,
            y_at_lower: f64::NAN,
            tau_default: None,
            discounted_ds: 0.0,
            discounted_ds_before_lower: 0.0,
        };
        engine.run(y0, streams, |event| {
            match event {
                Event::MaxIncrease { discounted } => {
                    rec.discounted_ds += discounted;
                    if rec.tau_lower.is_none() {
                        rec.discounted_ds_before_lower += discounted;
                    }
                }
                Event::LowerCrossing { t, y } => {
                    rec.tau_lower = Some(t);
                    rec.y_at_lower = y;
                }
                Event::Default { t, .. } => rec.tau_default = Some(t),
                Event::Checkpoint { .. } | Event::Horizon => {}
            }
            Control::Continue
        });
        rec
    }

    /// Simulates `n` individual paths (antithetic pairing ignored); useful
    /// for pathwise checks.
    pub fn sample_paths(&self, y0: f64, lower: Option<f64>, n: usize) -> Result<Vec<PathRecord>> {
        check_start(y0, self.b, lower)?;
        Ok((0..n as u64)
            .map(|i| {
                let mut streams = PathStreams::new(self.cfg.seed, i, false);
                self.record_path(y0, lower, &mut streams)
            })
            .collect())
    }

    /// Runs the configured number of paths and averages the `K` per-path
    /// values produced by `score`. Antithetic partners are averaged before
    /// entering the moment accumulators. Also returns the censored fraction.
    pub fn estimate_scores<const K: usize, F>(
        &self,
        y0: f64,
        lower: Option<f64>,
        score: F,
    ) -> Result<([McEstimate; K], f64)>
    where
        F: Fn(&PathRecord) -> [f64; K] + Sync,
    {
        check_start(y0, self.b, lower)?;
        let per_sample = if self.cfg.antithetic { 2 } else { 1 };
        let samples = self.cfg.n_paths / per_sample;
        let batches = samples.div_ceil(BATCH);
        let partial: Vec<([Moments; K], usize)> = (0..batches)
            .into_par_iter()
            .map(|batch| {
                let mut moments = [Moments::default(); K];
                let mut censored = 0;
                let start = batch * BATCH;
                let end = ((batch + 1) * BATCH).min(samples);
                for sample in start..end {
                    let mut acc = [0.0; K];
                    for copy in 0..per_sample {
                        let mut streams = PathStreams::new(self.cfg.seed, sample as u64, copy == 1);
                        let rec = self.record_path(y0, lower, &mut streams);
                        censored += rec.censored() as usize;
                        for (a, v) in acc.iter_mut().zip(score(&rec)) {
                            *a += v / per_sample as f64;
                        }
                    }
                    for (m, v) in moments.iter_mut().zip(acc) {
                        m.push(v);
                    }
                }
                (moments, censored)
            })
            .collect();

        let mut total = [Moments::default(); K];
        let mut censored = 0;
        for (moments, c) in &partial {
            for (t, m) in total.iter_mut().zip(moments) {
                t.merge(m);
            }
            censored += c;
        }
        let fraction = censored as f64 / (samples * per_sample).max(1) as f64;
        if fraction > 1e-3 {
            log::warn!(
                "{:.2}% of paths reached the horizon before default",
                100.0 * fraction
            );
        }
        Ok((total.map(|m| m.estimate(fraction)), fraction))
    }
}

fn check_start(y0: f64, b: f64, lower: Option<f64>) -> Result<()> {
    crate::error::check_domain("y0", y0, 0.0, b)?;
    if let Some(h) = lower {
        if !(h > 0.0) || h > b {
            return Err(Error::Domain {
                name: "h",
                value: h,
                lower: 0.0,
                upper: b,
            });
        }
    }
    Ok(())
}

/// Monte Carlo estimates of the drawdown functionals started at `y0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DrawdownEstimates {
    /// `exp(-r tau_b+)`.
    pub exit_up: McEstimate,
    /// `int_0^{tau_b+} exp(-r t) dS_t`.
    pub max_increase: McEstimate,
    /// `exp(-r tau_h-) 1{tau_h- <= tau_b+}`.
    pub two_sided_down: Option<McEstimate>,
    /// `exp(-r tau_b+) 1{tau_b+ <= tau_h-}`.
    pub two_sided_up: Option<McEstimate>,
    /// `exp(-r tau_h-) G_b(Y_{tau_h-}) 1{tau_h- <= tau_b+}`.
    pub candidate_j: Option<McEstimate>,
    pub censored_fraction: f64,
}

/// Estimates the default transform, the discounted running-maximum integral
/// and, when `h` is given, the two-sided transforms; with a payoff also the
/// threshold-rule value `J_h(y0)`.
pub fn simulate_drawdown_functionals(
    sim: &DrawdownSimulator,
    y0: f64,
    h: Option<f64>,
    payoff: Option<&SwitchPayoff<'_>>,
) -> Result<DrawdownEstimates> {
    check_start(y0, sim.b, h)?;
    let r = sim.r;
    let g = |y: f64| payoff.map_or(0.0, |p| p.value_extended(y));
    let ([exit_up, max_increase, down, up, j], censored) = sim.estimate_scores(y0, h, |rec| {
        let default_df = PathRecord::discount(r, rec.tau_default);
        let lower_df = PathRecord::discount(r, rec.tau_lower);
        let (down, j) = if rec.tau_lower.is_some() {
            (lower_df, lower_df * g(rec.y_at_lower))
        } else {
            (0.0, 0.0)
        };
        let up = if rec.tau_lower.is_none() { default_df } else { 0.0 };
        [default_df, rec.discounted_ds, down, up, j]
    })?;
    Ok(DrawdownEstimates {
        exit_up,
        max_increase,
        two_sided_down: h.map(|_| down),
        two_sided_up: h.map(|_| up),
        candidate_j: h.and(payoff).map(|_| j),
        censored_fraction: censored,
    })
}

/// Realized discounted cash flow of the switchable contract for one path,
/// with the switch exercised at `tau_h-`.
pub fn switch_cash_flow(rec: &PathRecord, r: f64, terms: &CdsTerms, switch: &SwitchTerms) -> f64 {
    let p_hat = terms.p + switch.p_tilde;
    let alpha_hat = terms.alpha + switch.alpha_tilde;
    let default_df = PathRecord::discount(r, rec.tau_default);
    match rec.tau_lower {
        Some(theta) => {
            -terms.p * rec.discounted_ds_before_lower + default_df * alpha_hat
                - (p_hat * (rec.discounted_ds - rec.discounted_ds_before_lower)
                    + (-r * theta).exp() * switch.gamma)
        }
        None => -terms.p * rec.discounted_ds + default_df * terms.alpha,
    }
}

/// The same cash flow regrouped as outright contract plus switch option.
pub fn rearranged_cash_flow(rec: &PathRecord, r: f64, terms: &CdsTerms, switch: &SwitchTerms) -> f64 {
    let default_df = PathRecord::discount(r, rec.tau_default);
    let outright = -terms.p * rec.discounted_ds + default_df * terms.alpha;
    let option = match rec.tau_lower {
        Some(theta) => {
            -switch.p_tilde * (rec.discounted_ds - rec.discounted_ds_before_lower)
                + default_df * switch.alpha_tilde
                - (-r * theta).exp() * switch.gamma
        }
        None => 0.0,
    };
    outright + option
}

/// Value of the switchable contract under the threshold rule `tau_h-`,
/// together with the estimate of `E[exp(-r theta); theta <= tau_b+]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwitchValueEstimate {
    pub value: McEstimate,
    pub exercise_discount: McEstimate,
}

pub fn switch_contract_value_mc(
    sim: &DrawdownSimulator,
    terms: &CdsTerms,
    switch: &SwitchTerms,
    h: f64,
    y0: f64,
) -> Result<SwitchValueEstimate> {
    terms.validate()?;
    switch.validate()?;
    check_start(y0, sim.b, Some(h))?;
    let r = sim.r;
    let ([value, exercise], _) = sim.estimate_scores(y0, Some(h), |rec| {
        let exercise = rec.tau_lower.map_or(0.0, |t| (-r * t).exp());
        [switch_cash_flow(rec, r, terms, switch), exercise]
    })?;
    Ok(SwitchValueEstimate {
        value,
        exercise_discount: exercise,
    })
}

/// Estimates of the stopped scale-function processes at each observation
/// time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MartingaleReport {
    pub times: Vec<f64>,
    /// `exp(-u (t ∧ tau)) W(b - Y_{t ∧ tau})` with `tau = tau_h- ∧ tau_b+`.
    pub w_estimates: Vec<McEstimate>,
    /// Same with `Z` in place of `W`.
    pub z_estimates: Vec<McEstimate>,
    pub w_initial: f64,
    pub z_initial: f64,
    /// Pairs of time indices whose estimates differ by more than three
    /// combined standard errors, tagged `"W"` or `"Z"`.
    pub flagged: Vec<(String, usize, usize)>,
}

impl MartingaleReport {
    pub fn constant(&self) -> bool {
        self.flagged.is_empty()
    }
}

pub fn martingale_scan(
    sim: &DrawdownSimulator,
    y0: f64,
    h: f64,
    u: f64,
    times: &[f64],
) -> Result<MartingaleReport> {
    check_start(y0, sim.b, Some(h))?;
    if times.is_empty() || times.windows(2).any(|w| w[1] <= w[0]) || times[0] < 0.0 {
        return Err(Error::InvalidPathConfig(
            "observation times must be non-negative and strictly increasing".into(),
        ));
    }
    let eval = ScaleEvaluator::new(sim.model, u)?;
    let b = sim.b;
    let n_times = times.len();
    let horizon = times[n_times - 1] * (1.0 + 1e-12) + 1e-12;
    let engine = sim.engine(Some(h), times, horizon);
    let per_sample = if sim.cfg.antithetic { 2 } else { 1 };
    let samples = sim.cfg.n_paths / per_sample;
    let batches = samples.div_ceil(BATCH);

    let partial: Vec<Vec<(Moments, Moments)>> = (0..batches)
        .into_par_iter()
        .map(|batch| {
            let mut moments = vec![(Moments::default(), Moments::default()); n_times];
            let end = ((batch + 1) * BATCH).min(samples);
            for sample in batch * BATCH..end {
                let mut acc = vec![(0.0, 0.0); n_times];
                for copy in 0..per_sample {
                    let mut streams = PathStreams::new(sim.cfg.seed, sample as u64, copy == 1);
                    // value frozen at the stopping time, if reached
                    let mut frozen: Option<(f64, f64)> = None;
                    let mut values = vec![(0.0, 0.0); n_times];
                    let mut filled = 0;
                    let weight = 1.0 / per_sample as f64;
                    engine.run(y0, &mut streams, |event| {
                        match event {
                            Event::LowerCrossing { t, y } | Event::Default { t, y } => {
                                let df = (-u * t).exp();
                                frozen = Some((df * eval.w(b - y), df * eval.z(b - y)));
                                for v in values.iter_mut().skip(filled) {
                                    *v = frozen.unwrap();
                                }
                                filled = n_times;
                                return Control::Stop;
                            }
                            Event::Checkpoint { index, y } => {
                                let df = (-u * times[index]).exp();
                                values[index] = (df * eval.w(b - y), df * eval.z(b - y));
                                filled = index + 1;
                            }
                            Event::MaxIncrease { .. } | Event::Horizon => {}
                        }
                        if filled == n_times {
                            Control::Stop
                        } else {
                            Control::Continue
                        }
                    });
                    for (a, v) in acc.iter_mut().zip(&values) {
                        a.0 += weight * v.0;
                        a.1 += weight * v.1;
                    }
                }
                for (m, a) in moments.iter_mut().zip(&acc) {
                    m.0.push(a.0);
                    m.1.push(a.1);
                }
            }
            moments
        })
        .collect();

    let mut total = vec![(Moments::default(), Moments::default()); n_times];
    for batch in &partial {
        for (t, m) in total.iter_mut().zip(batch) {
            t.0.merge(&m.0);
            t.1.merge(&m.1);
        }
    }
    let w_estimates: Vec<_> = total.iter().map(|m| m.0.estimate(0.0)).collect();
    let z_estimates: Vec<_> = total.iter().map(|m| m.1.estimate(0.0)).collect();
    let mut flagged = Vec::new();
    for (label, est) in [("W", &w_estimates), ("Z", &z_estimates)] {
        for i in 0..n_times {
            for j in i + 1..n_times {
                let se = (est[i].std_error.powi(2) + est[j].std_error.powi(2)).sqrt();
                let gap = (est[i].mean - est[j].mean).abs();
                if gap > 3.0 * se && gap > 1e-12 {
                    flagged.push((label.to_string(), i, j));
                }
            }
        }
    }
    Ok(MartingaleReport {
        times: times.to_vec(),
        w_estimates,
        z_estimates,
        w_initial: eval.w(b - y0),
        z_initial: eval.z(b - y0),
        flagged,
    })
}

/// Estimates `E_x[exp(-u T_b+); T_b+ < T_0-]` for the unreflected process.
pub fn simulate_classic_exit(
    model: &JumpDiffusionModel,
    u: f64,
    x0: f64,
    b: f64,
    cfg: &PathConfig,
) -> Result<McEstimate> {
    model.validate()?;
    cfg.validate()?;
    crate::error::check_domain("x0", x0, 0.0, b)?;
    let horizon = cfg.horizon_for(u);
    let per_sample = if cfg.antithetic { 2 } else { 1 };
    let samples = cfg.n_paths / per_sample;
    let batches = samples.div_ceil(BATCH);
    let partial: Vec<Moments> = (0..batches)
        .into_par_iter()
        .map(|batch| {
            let mut moments = Moments::default();
            let end = ((batch + 1) * BATCH).min(samples);
            for sample in batch * BATCH..end {
                let mut acc = 0.0;
                for copy in 0..per_sample {
                    let mut streams = PathStreams::new(cfg.seed, sample as u64, copy == 1);
                    let t = classic_exit_time(model, x0, b, cfg.dt, horizon, &mut streams);
                    acc += t.map_or(0.0, |t| (-u * t).exp()) / per_sample as f64;
                }
                moments.push(acc);
            }
            moments
        })
        .collect();
    let mut total = Moments::default();
    for m in &partial {
        total.merge(m);
    }
    Ok(total.estimate(0.0))
}

/// Time of the first passage above `b` if it precedes the passage below 0.
fn classic_exit_time(
    model: &JumpDiffusionModel,
    x0: f64,
    b: f64,
    dt: f64,
    horizon: f64,
    streams: &mut PathStreams,
) -> Option<f64> {
    let mut t = 0.0;
    let mut x = x0;
    if x >= b {
        return Some(0.0);
    }
    let mut next_jump = streams.exponential(model.jump_rate);
    loop {
        let limit = next_jump.min(horizon);
        if model.has_unbounded_variation() {
            let gap = x.min(b - x);
            let mut step = dt;
            for factor in MERGE_FACTORS {
                let candidate = factor * dt;
                if MERGE_SIGMAS * model.sigma * candidate.sqrt() + model.mu.abs() * candidate < gap {
                    step = candidate;
                    break;
                }
            }
            let reached = t + step >= limit;
            let step = if reached { limit - t } else { step };
            let sd = model.sigma * step.sqrt();
            let start = x;
            x += model.mu * step + sd * streams.normal();
            t = if reached { limit } else { t + step };
            let var = sd * sd;
            if start.min(x) < BRIDGE_SIGMAS * sd && streams.bridge_min(start, x, var) < 0.0 {
                return None;
            }
            if b - start.max(x) < BRIDGE_SIGMAS * sd && streams.bridge_max(start, x, var) > b {
                return Some(t);
            }
            if !reached {
                continue;
            }
        } else {
            let hit = t + (b - x) / model.mu;
            if hit < limit {
                return Some(hit);
            }
            x += model.mu * (limit - t);
            t = limit;
        }
        if t >= horizon {
            return None;
        }
        x -= streams.exponential(model.jump_decay);
        next_jump = t + streams.exponential(model.jump_rate);
        if x < 0.0 {
            return None;
        }
    }
}

/// One analytic value next to its simulated counterpart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleCheck {
    pub name: String,
    pub y: f64,
    /// Lower level used by the estimator.
    pub h: f64,
    pub analytic: f64,
    pub estimate: McEstimate,
    pub z_score: f64,
}

impl OracleCheck {
    fn new(name: &str, y: f64, h: f64, analytic: f64, estimate: McEstimate) -> Self {
        Self {
            name: name.to_string(),
            y,
            h,
            analytic,
            z_score: estimate.z_score(analytic),
            estimate,
        }
    }

    pub fn passed(&self, max_z: f64) -> bool {
        self.z_score.abs() <= max_z
    }
}

/// Lower level used for the two-sided transforms at `y`: `h*` when `y` is in
/// the continuation region, `y / 2` otherwise (the transforms need `h <= y`).
pub fn two_sided_level(h_star: f64, y: f64) -> f64 {
    if y >= h_star {
        h_star
    } else {
        0.5 * y
    }
}

/// Compares every closed-form functional at `y` with simulation: the default
/// transform, the discounted running-maximum integral, both two-sided
/// transforms, the threshold-rule value `J_h*` and the total value of the
/// switchable contract.
pub fn oracle_suite(
    model: &JumpDiffusionModel,
    terms: &CdsTerms,
    switch: &SwitchTerms,
    y: f64,
    cfg: &PathConfig,
) -> Result<Vec<OracleCheck>> {
    use crate::drawdown::DrawdownProblem;
    use crate::stopping::{candidate_j, total_value, OptimalSwitch};

    terms.validate()?;
    let eval = ScaleEvaluator::new(*model, terms.r)?;
    let optimal = OptimalSwitch::solve(&eval, *switch, terms.b)?;
    let payoff = optimal.payoff();
    let h_star = optimal.h_star();
    let h = two_sided_level(h_star, y);
    let problem = DrawdownProblem::new(&eval, terms.b, y)?;
    let sim = DrawdownSimulator::new(*model, terms.r, terms.b, *cfg)?;
    let r = terms.r;

    let run = |lower: f64| {
        sim.estimate_scores(y, Some(lower), |rec| {
            let default_df = PathRecord::discount(r, rec.tau_default);
            let (down, j, up) = match rec.tau_lower {
                Some(t) => {
                    let df = (-r * t).exp();
                    (df, df * payoff.value_extended(rec.y_at_lower), 0.0)
                }
                None => (0.0, 0.0, default_df),
            };
            [
                default_df,
                rec.discounted_ds,
                down,
                up,
                j,
                switch_cash_flow(rec, r, terms, switch),
            ]
        })
    };
    let (first, _) = run(h)?;
    let second = if h == h_star { first } else { run(h_star)?.0 };

    let j_exact = if y >= h_star {
        candidate_j(payoff, h_star, y)?
    } else {
        payoff.value(y)?
    };
    let total = total_value(&eval, terms, switch, y)?.total;
    Ok(vec![
        OracleCheck::new("exit_up", y, h, problem.exit_up_transform(), first[0]),
        OracleCheck::new("max_increase", y, h, problem.discounted_max_increase(), first[1]),
        OracleCheck::new("two_sided_down", y, h, problem.two_sided_down(h)?, first[2]),
        OracleCheck::new("two_sided_up", y, h, problem.two_sided_up(h)?, first[3]),
        OracleCheck::new("candidate_j", y, h_star, j_exact, second[4]),
        OracleCheck::new("total_value", y, h_star, total, second[5]),
    ])
}
