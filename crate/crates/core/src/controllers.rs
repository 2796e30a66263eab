//! Pacing controllers.
//!
//! Every controller owns a pacing multiplier `lambda` in `[lambda_min, 1]`
//! and turns one cycle's `(desired, observed)` spend rates into the next
//! multiplier. Four update laws live here:
//!
//! * [`BaselineController`]: fixed-magnitude multiplicative steps whose size
//!   adapts to how oscillatory the recent `lambda` trajectory is.
//! * [`BucketController`]: the bucketized hysteresis law. The relative error
//!   is quantized into bands and each band applies its own multiplicative
//!   step, larger for larger errors.
//! * [`AveragedFeedback`]: the bucket law fed a moving average of observed
//!   spend.
//! * [`AveragedUpdate`]: the bucket law whose candidate multipliers are
//!   averaged before they are applied.

use alloc::collections::VecDeque;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{ensure, ConfigError};

/// One control cycle's measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlInput {
    pub desired_rate: f64,
    pub observed_rate: f64,
}

impl ControlInput {
    pub const fn new(desired_rate: f64, observed_rate: f64) -> Self {
        Self {
            desired_rate,
            observed_rate,
        }
    }
}

/// Dead band around the desired rate: `max(absolute, relative * desired)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub relative: f64,
    pub absolute: f64,
}

impl Tolerance {
    pub const fn absolute(eps: f64) -> Self {
        Self {
            relative: 0.0,
            absolute: eps,
        }
    }

    pub fn at(&self, desired_rate: f64) -> f64 {
        self.absolute.max(self.relative * desired_rate)
    }

    pub fn validate(&self) -> Vec<ConfigError> {
        let mut errs = Vec::new();
        if !(self.relative.is_finite() && self.relative >= 0.0) {
            errs.push(ConfigError::new(
                "tolerance.relative",
                "must be finite and >= 0",
            ));
        }
        if !(self.absolute.is_finite() && self.absolute > 0.0) {
            errs.push(ConfigError::new(
                "tolerance.absolute",
                "must be finite and > 0",
            ));
        }
        errs
    }
}

/// Normalized tracking error `(desired - observed) / desired`.
///
/// Positive when under-delivering. A zero desired rate maps to `-1` when
/// anything was spent and to `0` otherwise.
pub fn relative_error(input: ControlInput) -> f64 {
    let ControlInput {
        desired_rate: d,
        observed_rate: o,
    } = input;
    if d > 0.0 {
        (d - o) / d
    } else if o > 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Ratio of path length to net displacement over a trajectory.
///
/// Returns `None` for fewer than two points and `+inf` when the endpoints
/// coincide. Finite results are always `>= 1`.
pub fn fluctuation_factor(trajectory: &[f64]) -> Option<f64> {
    let (first, last) = match trajectory {
        [first, .., last] => (*first, *last),
        _ => return None,
    };
    let displacement = (last - first).abs();
    if displacement == 0.0 {
        return Some(f64::INFINITY);
    }
    let rising = trajectory.windows(2).all(|w| w[1] >= w[0]);
    let falling = trajectory.windows(2).all(|w| w[1] <= w[0]);
    if rising || falling {
        return Some(1.0);
    }
    let distance: f64 = trajectory.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    // Rounding in the sum can land a hair under the displacement.
    Some((distance / displacement).max(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineParams {
    pub eta_up: f64,
    pub eta_down: f64,
    /// Fluctuation factor above which the step size shrinks.
    pub tau: f64,
    pub tolerance: Tolerance,
    pub alpha_min: f64,
    pub alpha_max: f64,
    /// Number of recent multipliers the fluctuation factor looks at.
    pub window_n: usize,
}

impl BaselineParams {
    pub fn validate(&self) -> Vec<ConfigError> {
        let mut errs = Vec::new();
        if !(self.eta_up.is_finite() && self.eta_up > 0.0) {
            errs.push(ConfigError::new(
                "baseline.eta_up",
                "must be finite and > 0",
            ));
        }
        if !(self.eta_down > 0.0 && self.eta_down < 1.0) {
            errs.push(ConfigError::new("baseline.eta_down", "must lie in (0, 1)"));
        }
        if !(self.tau.is_finite() && self.tau > 1.0) {
            errs.push(ConfigError::new("baseline.tau", "must be finite and > 1"));
        }
        if !(self.alpha_min > 0.0 && self.alpha_min < 1.0) {
            errs.push(ConfigError::new("baseline.alpha_min", "must lie in (0, 1)"));
        }
        if !(self.alpha_max > 0.0 && self.alpha_max < 1.0) {
            errs.push(ConfigError::new("baseline.alpha_max", "must lie in (0, 1)"));
        }
        if self.alpha_min > self.alpha_max {
            errs.push(ConfigError::new(
                "baseline.alpha_min",
                "must not exceed alpha_max",
            ));
        }
        if self.window_n < 2 {
            errs.push(ConfigError::new("baseline.window_n", "must be >= 2"));
        }
        errs.extend(self.tolerance.validate());
        errs
    }
}

/// Adapts the baseline step size to the recent trajectory.
///
/// A smooth trend (`F <= 1`) grows the step by `1 + eta_up`, an oscillating
/// one (`F > tau`) shrinks it by `1 - eta_down`. The result is clamped to
/// `[alpha_min, alpha_max]`.
pub fn adapt_scale(alpha: f64, trajectory: &[f64], params: &BaselineParams) -> f64 {
    let next = match fluctuation_factor(trajectory) {
        None => alpha,
        Some(f) if f <= 1.0 => alpha * (1.0 + params.eta_up),
        Some(f) if f > params.tau => alpha * (1.0 - params.eta_down),
        Some(_) => alpha,
    };
    next.clamp(params.alpha_min, params.alpha_max)
}

/// Thresholds and per-band multiplicative scales of the bucketized law.
#[derive(Debug, Clone, PartialEq)]
pub struct BandTable {
    thresholds: Vec<f64>,
    scales: Vec<f64>,
}

impl BandTable {
    /// Thresholds must start at 0 and increase strictly; every scale lies in
    /// `(0, 1)`.
    pub fn new(thresholds: Vec<f64>, scales: Vec<f64>) -> Result<Self, Vec<ConfigError>> {
        let errs = Self::check(&thresholds, &scales);
        if errs.is_empty() {
            Ok(Self { thresholds, scales })
        } else {
            Err(errs)
        }
    }

    pub fn check(thresholds: &[f64], scales: &[f64]) -> Vec<ConfigError> {
        let mut errs = Vec::new();
        if thresholds.is_empty() {
            errs.push(ConfigError::new(
                "thresholds",
                "at least one band is required",
            ));
        }
        if thresholds.len() != scales.len() {
            errs.push(ConfigError::new(
                "scales",
                "must have one entry per threshold",
            ));
        }
        if thresholds.first().is_some_and(|&t| t != 0.0) {
            errs.push(ConfigError::new(
                "thresholds",
                "the first threshold must be exactly 0",
            ));
        }
        if thresholds.iter().any(|t| !t.is_finite()) {
            errs.push(ConfigError::new("thresholds", "must be finite"));
        }
        if thresholds
            .windows(2)
            .any(|w| w[0].partial_cmp(&w[1]) != Some(core::cmp::Ordering::Less))
        {
            errs.push(ConfigError::new(
                "thresholds",
                "must be strictly increasing",
            ));
        }
        if scales.iter().any(|&s| !(s > 0.0 && s < 1.0)) {
            errs.push(ConfigError::new("scales", "every scale must lie in (0, 1)"));
        }
        errs
    }

    pub fn len(&self) -> usize {
        self.thresholds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thresholds.is_empty()
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    /// Index (0-based) of the highest band whose threshold is `<= abs_error`.
    pub fn select(&self, abs_error: f64) -> usize {
        // thresholds[0] == 0, so the partition point is at least 1 for any
        // non-negative error.
        self.thresholds
            .partition_point(|&t| t <= abs_error)
            .saturating_sub(1)
    }

    pub fn scale_for(&self, abs_error: f64) -> f64 {
        self.scales[self.select(abs_error)]
    }
}

fn clamp_lambda(lambda: f64, lambda_min: f64) -> f64 {
    lambda.clamp(lambda_min, 1.0)
}

fn validate_lambda(lambda: f64, lambda_min: f64) -> Vec<ConfigError> {
    let mut errs = Vec::new();
    if !(lambda_min > 0.0 && lambda_min < 1.0) {
        errs.push(ConfigError::new("lambda_min", "must lie in (0, 1)"));
    }
    if !(lambda >= lambda_min && lambda <= 1.0) {
        errs.push(ConfigError::new("lambda0", "must lie in [lambda_min, 1]"));
    }
    errs
}

fn first_error<T>(value: T, errs: Vec<ConfigError>) -> Result<T, ConfigError> {
    match errs.into_iter().next() {
        Some(e) => Err(e),
        None => Ok(value),
    }
}

/// Anything that can close the pacing loop.
pub trait PacingController {
    /// Multiplier to apply during the next cycle.
    fn lambda(&self) -> f64;

    /// Consumes one cycle's measurement and returns the next multiplier.
    fn update(&mut self, input: ControlInput) -> f64;
}

/// Variable-step multiplicative controller used as the production reference.
#[derive(Debug, Clone)]
pub struct BaselineController {
    params: BaselineParams,
    lambda_min: f64,
    lambda: f64,
    alpha: f64,
    trajectory: VecDeque<f64>,
}

impl BaselineController {
    pub fn new(
        params: BaselineParams,
        lambda0: f64,
        alpha0: f64,
        lambda_min: f64,
    ) -> Result<Self, ConfigError> {
        let mut errs = params.validate();
        errs.extend(validate_lambda(lambda0, lambda_min));
        if !(alpha0 >= params.alpha_min && alpha0 <= params.alpha_max) {
            errs.push(ConfigError::new(
                "baseline.alpha0",
                "must lie in [alpha_min, alpha_max]",
            ));
        }
        let mut trajectory = VecDeque::with_capacity(params.window_n + 1);
        trajectory.push_back(lambda0);
        first_error(
            Self {
                params,
                lambda_min,
                lambda: lambda0,
                alpha: alpha0,
                trajectory,
            },
            errs,
        )
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn params(&self) -> &BaselineParams {
        &self.params
    }

    /// Recent applied multipliers, oldest first.
    pub fn trajectory(&self) -> Vec<f64> {
        self.trajectory.iter().copied().collect()
    }
}

impl PacingController for BaselineController {
    fn lambda(&self) -> f64 {
        self.lambda
    }

    fn update(&mut self, input: ControlInput) -> f64 {
        self.alpha = adapt_scale(self.alpha, self.trajectory.make_contiguous(), &self.params);

        let eps = self.params.tolerance.at(input.desired_rate);
        let gap = input.observed_rate - input.desired_rate;
        if gap.abs() > eps {
            let step = if gap < 0.0 {
                1.0 + self.alpha
            } else {
                1.0 - self.alpha
            };
            self.lambda = clamp_lambda(self.lambda * step, self.lambda_min);
        }

        self.trajectory.push_back(self.lambda);
        while self.trajectory.len() > self.params.window_n {
            self.trajectory.pop_front();
        }
        self.lambda
    }
}

/// Bucketized hysteresis controller.
#[derive(Debug, Clone)]
pub struct BucketController {
    bands: BandTable,
    tolerance: Tolerance,
    lambda_min: f64,
    lambda: f64,
}

impl BucketController {
    pub fn new(
        bands: BandTable,
        tolerance: Tolerance,
        lambda0: f64,
        lambda_min: f64,
    ) -> Result<Self, ConfigError> {
        let mut errs = tolerance.validate();
        errs.extend(validate_lambda(lambda0, lambda_min));
        first_error(
            Self {
                bands,
                tolerance,
                lambda_min,
                lambda: lambda0,
            },
            errs,
        )
    }

    pub fn bands(&self) -> &BandTable {
        &self.bands
    }

    /// Multiplier this controller would produce from `lambda` for `input`,
    /// without touching the stored state.
    pub fn step_from(&self, lambda: f64, input: ControlInput) -> f64 {
        let ControlInput {
            desired_rate: d,
            observed_rate: o,
        } = input;
        if (o - d).abs() < self.tolerance.at(d) {
            return lambda;
        }
        let direction = if o < d { 1.0 } else { -1.0 };
        let scale = self.bands.scale_for(relative_error(input).abs());
        clamp_lambda(lambda * (1.0 + scale * direction), self.lambda_min)
    }

    pub(crate) fn set_lambda(&mut self, lambda: f64) {
        self.lambda = clamp_lambda(lambda, self.lambda_min);
    }
}

impl PacingController for BucketController {
    fn lambda(&self) -> f64 {
        self.lambda
    }

    fn update(&mut self, input: ControlInput) -> f64 {
        self.lambda = self.step_from(self.lambda, input);
        self.lambda
    }
}

fn mean(values: &VecDeque<f64>) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn push_bounded(buf: &mut VecDeque<f64>, value: f64, cap: usize) {
    buf.push_back(value);
    while buf.len() > cap {
        buf.pop_front();
    }
}

/// Bucket controller driven by the mean of the last `window_m` observed rates.
#[derive(Debug, Clone)]
pub struct AveragedFeedback {
    inner: BucketController,
    window_m: usize,
    history: VecDeque<f64>,
}

impl AveragedFeedback {
    pub fn new(inner: BucketController, window_m: usize) -> Result<Self, ConfigError> {
        ensure(window_m >= 1, "aof.window_m", "must be >= 1")?;
        Ok(Self {
            inner,
            window_m,
            history: VecDeque::with_capacity(window_m + 1),
        })
    }

    pub fn inner(&self) -> &BucketController {
        &self.inner
    }

    /// Observed rate the inner controller saw on the last update.
    pub fn averaged_rate(&self) -> Option<f64> {
        (!self.history.is_empty()).then(|| mean(&self.history))
    }
}

impl PacingController for AveragedFeedback {
    fn lambda(&self) -> f64 {
        self.inner.lambda()
    }

    fn update(&mut self, input: ControlInput) -> f64 {
        push_bounded(&mut self.history, input.observed_rate, self.window_m);
        let filtered = ControlInput {
            observed_rate: mean(&self.history),
            ..input
        };
        self.inner.update(filtered)
    }
}

/// Where [`AveragedUpdate`] computes its next candidate from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChainMode {
    /// From the previous candidate.
    #[default]
    Candidate,
    /// From the previously applied (averaged) multiplier.
    Applied,
}

/// Bucket controller whose candidate multipliers are averaged over the last
/// `window_l` cycles before being applied.
#[derive(Debug, Clone)]
pub struct AveragedUpdate {
    inner: BucketController,
    window_l: usize,
    chain: ChainMode,
    candidates: VecDeque<f64>,
    applied: f64,
}

impl AveragedUpdate {
    pub fn new(
        inner: BucketController,
        window_l: usize,
        chain: ChainMode,
    ) -> Result<Self, ConfigError> {
        ensure(window_l >= 1, "alu.window_l", "must be >= 1")?;
        let applied = inner.lambda();
        Ok(Self {
            inner,
            window_l,
            chain,
            candidates: VecDeque::with_capacity(window_l + 1),
            applied,
        })
    }

    /// Most recent candidate, before averaging.
    pub fn candidate(&self) -> f64 {
        self.inner.lambda()
    }

    pub fn candidates(&self) -> Vec<f64> {
        self.candidates.iter().copied().collect()
    }
}

impl PacingController for AveragedUpdate {
    fn lambda(&self) -> f64 {
        self.applied
    }

    fn update(&mut self, input: ControlInput) -> f64 {
        let candidate = self.inner.update(input);
        push_bounded(&mut self.candidates, candidate, self.window_l);
        self.applied = clamp_lambda(mean(&self.candidates), self.inner.lambda_min);
        if self.chain == ChainMode::Applied {
            self.inner.set_lambda(self.applied);
        }
        self.applied
    }
}

/// Never changes its multiplier.
#[derive(Debug, Clone, Copy)]
pub struct HoldController {
    lambda: f64,
}

impl HoldController {
    pub fn new(lambda: f64) -> Result<Self, ConfigError> {
        ensure(
            lambda > 0.0 && lambda <= 1.0,
            "lambda0",
            "must lie in (0, 1]",
        )?;
        Ok(Self { lambda })
    }
}

impl PacingController for HoldController {
    fn lambda(&self) -> f64 {
        self.lambda
    }

    fn update(&mut self, _input: ControlInput) -> f64 {
        self.lambda
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ControllerKind {
    Baseline,
    Bhc,
    Aof,
    Alu,
    /// Bucket controller running the damped band table.
    SlowedBands,
    Hold,
}

impl ControllerKind {
    pub const ALL: [ControllerKind; 6] = [
        ControllerKind::Baseline,
        ControllerKind::Bhc,
        ControllerKind::Aof,
        ControllerKind::Alu,
        ControllerKind::SlowedBands,
        ControllerKind::Hold,
    ];

    pub const fn name(self) -> &'static str {
        match self {
            ControllerKind::Baseline => "baseline",
            ControllerKind::Bhc => "bhc",
            ControllerKind::Aof => "aof",
            ControllerKind::Alu => "alu",
            ControllerKind::SlowedBands => "slowed_bands",
            ControllerKind::Hold => "hold",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }
}

impl fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Every constant needed to build any controller kind.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerConstants {
    pub lambda_min: f64,
    pub tolerance: Tolerance,
    pub baseline: BaselineParams,
    pub alpha0: f64,
    pub standard_bands: BandTable,
    pub slowed_bands: BandTable,
    pub aof_window: usize,
    pub alu_window: usize,
    pub alu_chain: ChainMode,
}

impl ControllerConstants {
    pub fn build(&self, kind: ControllerKind, lambda0: f64) -> Result<Controller, ConfigError> {
        let bucket = |bands: &BandTable| {
            BucketController::new(bands.clone(), self.tolerance, lambda0, self.lambda_min)
        };
        Ok(match kind {
            ControllerKind::Baseline => Controller::Baseline(BaselineController::new(
                self.baseline,
                lambda0,
                self.alpha0,
                self.lambda_min,
            )?),
            ControllerKind::Bhc => Controller::Bucket(bucket(&self.standard_bands)?),
            ControllerKind::SlowedBands => Controller::Bucket(bucket(&self.slowed_bands)?),
            ControllerKind::Aof => Controller::AveragedFeedback(AveragedFeedback::new(
                bucket(&self.standard_bands)?,
                self.aof_window,
            )?),
            ControllerKind::Alu => Controller::AveragedUpdate(AveragedUpdate::new(
                bucket(&self.standard_bands)?,
                self.alu_window,
                self.alu_chain,
            )?),
            ControllerKind::Hold => Controller::Hold(HoldController::new(lambda0)?),
        })
    }
}

/// Closed set of controllers buildable from configuration.
#[derive(Debug, Clone)]
pub enum Controller {
    Baseline(BaselineController),
    Bucket(BucketController),
    AveragedFeedback(AveragedFeedback),
    AveragedUpdate(AveragedUpdate),
    Hold(HoldController),
}

impl PacingController for Controller {
    fn lambda(&self) -> f64 {
        match self {
            Controller::Baseline(c) => c.lambda(),
            Controller::Bucket(c) => c.lambda(),
            Controller::AveragedFeedback(c) => c.lambda(),
            Controller::AveragedUpdate(c) => c.lambda(),
            Controller::Hold(c) => c.lambda(),
        }
    }

    fn update(&mut self, input: ControlInput) -> f64 {
        match self {
            Controller::Baseline(c) => c.update(input),
            Controller::Bucket(c) => c.update(input),
            Controller::AveragedFeedback(c) => c.update(input),
            Controller::AveragedUpdate(c) => c.update(input),
            Controller::Hold(c) => c.update(input),
        }
    }
}

impl<C: PacingController + ?Sized> PacingController for &mut C {
    fn lambda(&self) -> f64 {
        (**self).lambda()
    }

    fn update(&mut self, input: ControlInput) -> f64 {
        (**self).update(input)
    }
}
