//! Simulated auction traffic, spend plans and the closed pacing loop.
//!
//! Every control cycle draws its traffic from its own ChaCha stream keyed by
//! `(seed, cycle)`, so two controllers run with the same seed face exactly
//! the same opportunities, and changing how many draws one cycle consumes
//! never shifts the next.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Poisson, Uniform};

use crate::auction::{paced_bid_unchecked, run_auction, AdLine, Opportunity, PricingRule};
use crate::controllers::{ControlInput, Controller, ControllerKind, PacingController};
use crate::error::ConfigError;

/// Stochastic structure of the impression stream one line bids into.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrafficModel {
    /// Mean of the Poisson arrival count per cycle.
    pub arrivals_per_cycle: f64,
    /// Location of the log-normal highest competing bid.
    pub competitor_mu: f64,
    /// Scale of the log-normal highest competing bid.
    pub competitor_sigma: f64,
    pub p_lo: f64,
    pub p_hi: f64,
    pub pricing: PricingRule,
}

impl TrafficModel {
    pub fn validate(&self) -> Vec<ConfigError> {
        let mut errs = Vec::new();
        if !(self.arrivals_per_cycle.is_finite() && self.arrivals_per_cycle >= 0.0) {
            errs.push(ConfigError::new(
                "traffic.arrivals_per_cycle",
                "must be finite and >= 0",
            ));
        }
        if !self.competitor_mu.is_finite() {
            errs.push(ConfigError::new("traffic.competitor_mu", "must be finite"));
        }
        if !(self.competitor_sigma.is_finite() && self.competitor_sigma >= 0.0) {
            errs.push(ConfigError::new(
                "traffic.competitor_sigma",
                "must be finite and >= 0",
            ));
        }
        if !(0.0 <= self.p_lo && self.p_lo <= self.p_hi && self.p_hi <= 1.0) {
            errs.push(ConfigError::new(
                "traffic.p_lo",
                "need 0 <= p_lo <= p_hi <= 1",
            ));
        }
        errs
    }

    /// Expected spend of one cycle at multiplier `lambda`, ignoring the
    /// budget cap.
    ///
    /// Closed form over the log-normal competitor bid, Simpson's rule over
    /// the uniform event probability.
    pub fn expected_spend(&self, max_bid: f64, lambda: f64) -> f64 {
        const INTERVALS: usize = 256;
        let per_arrival = |p: f64| self.expected_charge(lambda * max_bid * p);
        let mean_charge = if self.p_hi > self.p_lo {
            let h = (self.p_hi - self.p_lo) / INTERVALS as f64;
            let mut acc = per_arrival(self.p_lo) + per_arrival(self.p_hi);
            for i in 1..INTERVALS {
                let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                acc += w * per_arrival(self.p_lo + i as f64 * h);
            }
            acc * h / 3.0 / (self.p_hi - self.p_lo)
        } else {
            per_arrival(self.p_lo)
        };
        self.arrivals_per_cycle * mean_charge
    }

    /// `E[charge]` for a fixed own bid against the competitor distribution.
    fn expected_charge(&self, bid: f64) -> f64 {
        if bid <= 0.0 {
            return 0.0;
        }
        let (mu, sigma) = (self.competitor_mu, self.competitor_sigma);
        let log_bid = libm::log(bid);
        if sigma == 0.0 {
            let comp = libm::exp(mu);
            return match (bid > comp, self.pricing) {
                (false, _) => 0.0,
                (true, PricingRule::FirstPrice) => bid,
                (true, PricingRule::SecondPrice) => comp,
            };
        }
        match self.pricing {
            PricingRule::FirstPrice => bid * normal_cdf((log_bid - mu) / sigma),
            PricingRule::SecondPrice => {
                libm::exp(mu + 0.5 * sigma * sigma)
                    * normal_cdf((log_bid - mu - sigma * sigma) / sigma)
            }
        }
    }

    /// Multiplier whose expected spend matches `desired_rate`, by bisection
    /// in log space over `[lambda_min, 1]`.
    pub fn equilibrium_lambda(&self, max_bid: f64, desired_rate: f64, lambda_min: f64) -> f64 {
        if self.expected_spend(max_bid, 1.0) <= desired_rate {
            return 1.0;
        }
        if self.expected_spend(max_bid, lambda_min) >= desired_rate {
            return lambda_min;
        }
        let (mut lo, mut hi) = (libm::log(lambda_min), 0.0);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if self.expected_spend(max_bid, libm::exp(mid)) < desired_rate {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        libm::exp(0.5 * (lo + hi))
    }
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / core::f64::consts::SQRT_2)
}

/// How the total budget is meant to be spread over the horizon.
#[derive(Debug, Clone, PartialEq)]
pub enum PlanShape {
    Even,
    /// One non-negative weight per cycle.
    Weighted(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpendPlan {
    total_budget: f64,
    horizon: usize,
    shape: PlanShape,
    /// `suffix[c]` is the weight still ahead at the start of cycle `c`.
    suffix: Vec<f64>,
}

impl SpendPlan {
    pub fn new(
        total_budget: f64,
        horizon: usize,
        shape: PlanShape,
    ) -> Result<Self, Vec<ConfigError>> {
        let mut errs = Vec::new();
        if !(total_budget.is_finite() && total_budget > 0.0) {
            errs.push(ConfigError::new(
                "plan.total_budget",
                "must be finite and > 0",
            ));
        }
        if horizon == 0 {
            errs.push(ConfigError::new("plan.horizon", "must be > 0"));
        }
        let weights: Vec<f64> = match &shape {
            PlanShape::Even => alloc::vec![1.0; horizon],
            PlanShape::Weighted(w) => {
                if w.len() != horizon {
                    errs.push(ConfigError::new(
                        "plan.weights",
                        "need exactly one weight per cycle",
                    ));
                }
                if w.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                    errs.push(ConfigError::new(
                        "plan.weights",
                        "weights must be finite and >= 0",
                    ));
                }
                let total: f64 = w.iter().sum();
                if total.is_nan() || total <= 0.0 {
                    errs.push(ConfigError::new(
                        "plan.weights",
                        "weights must sum to a positive value",
                    ));
                }
                w.clone()
            }
        };
        if !errs.is_empty() {
            return Err(errs);
        }
        let mut suffix = alloc::vec![0.0; horizon + 1];
        for c in (0..horizon).rev() {
            suffix[c] = suffix[c + 1] + weights[c];
        }
        Ok(Self {
            total_budget,
            horizon,
            shape,
            suffix,
        })
    }

    pub fn even(total_budget: f64, horizon: usize) -> Result<Self, Vec<ConfigError>> {
        Self::new(total_budget, horizon, PlanShape::Even)
    }

    pub fn total_budget(&self) -> f64 {
        self.total_budget
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn shape(&self) -> &PlanShape {
        &self.shape
    }

    fn weight(&self, cycle: usize) -> f64 {
        self.suffix[cycle] - self.suffix[cycle + 1]
    }

    /// Planned spend for `cycle` alone.
    pub fn target_spend(&self, cycle: usize) -> f64 {
        match &self.shape {
            PlanShape::Even => self.total_budget / self.horizon as f64,
            PlanShape::Weighted(w) => self.total_budget * w[cycle] / self.suffix[0],
        }
    }

    /// Planned cumulative spend at the end of `cycle`.
    pub fn target_cumulative(&self, cycle: usize) -> f64 {
        let cycle = cycle.min(self.horizon - 1);
        match &self.shape {
            PlanShape::Even => self.total_budget * (cycle + 1) as f64 / self.horizon as f64,
            PlanShape::Weighted(_) => {
                self.total_budget * (self.suffix[0] - self.suffix[cycle + 1]) / self.suffix[0]
            }
        }
    }

    /// Spend rate that would finish the remaining budget on plan.
    pub fn desired_rate(&self, cycle: usize, budget_remaining: f64) -> f64 {
        if cycle >= self.horizon || budget_remaining <= 0.0 {
            return 0.0;
        }
        let ahead = self.suffix[cycle];
        if ahead <= 0.0 {
            return 0.0;
        }
        match self.shape {
            PlanShape::Even => budget_remaining / (self.horizon - cycle) as f64,
            PlanShape::Weighted(_) => budget_remaining * self.weight(cycle) / ahead,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CycleOutcome {
    pub spend: f64,
    pub entered: u64,
    pub won: u64,
}

/// Maps one cycle's multiplier to the spend it produces.
pub trait Plant {
    fn run_cycle(&self, cycle: usize, lambda: f64, budget_remaining: f64) -> CycleOutcome;
}

/// Runs one cycle of auctions for `adline` at multiplier `lambda`.
///
/// Wins are charged in arrival order. The win that would cross the remaining
/// budget is charged only what is left, and the line then sits out the rest
/// of the cycle, so spend never exceeds `budget_remaining`.
pub fn run_cycle<R: Rng + ?Sized>(
    adline: &AdLine,
    lambda: f64,
    traffic: &TrafficModel,
    rng: &mut R,
    budget_remaining: f64,
) -> CycleOutcome {
    let mut out = CycleOutcome::default();
    let arrivals = draw_arrivals(traffic.arrivals_per_cycle, rng);
    if arrivals == 0 || budget_remaining <= 0.0 {
        return out;
    }
    let p_event = Uniform::new_inclusive(traffic.p_lo, traffic.p_hi).expect("validated p range");
    let competitor = LogNormal::new(traffic.competitor_mu, traffic.competitor_sigma)
        .expect("validated competitor distribution");

    for _ in 0..arrivals {
        let opp = Opportunity {
            p_event: p_event.sample(rng),
            competitor_bid: competitor.sample(rng),
        };
        let bid = paced_bid_unchecked(lambda, adline.max_bid * opp.p_event);
        let outcome = run_auction(bid, opp, traffic.pricing);
        out.entered += 1;
        if outcome.won {
            out.won += 1;
            let left = budget_remaining - out.spend;
            if outcome.price >= left {
                out.spend = budget_remaining;
                break;
            }
            out.spend += outcome.price;
        }
    }
    out
}

fn draw_arrivals<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    let poisson = Poisson::new(mean).expect("validated arrival mean");
    poisson.sample(rng) as u64
}

/// Per-cycle RNG stream for `seed`.
pub fn cycle_rng(seed: u64, cycle: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(cycle as u64);
    rng
}

/// Auction traffic for one line under one seed.
#[derive(Debug, Clone, PartialEq)]
pub struct AuctionPlant {
    pub adline: AdLine,
    pub traffic: TrafficModel,
    pub seed: u64,
}

impl AuctionPlant {
    pub fn new(adline: AdLine, traffic: TrafficModel, seed: u64) -> Result<Self, Vec<ConfigError>> {
        let mut errs = adline.validate();
        errs.extend(traffic.validate());
        if errs.is_empty() {
            Ok(Self {
                adline,
                traffic,
                seed,
            })
        } else {
            Err(errs)
        }
    }

    pub fn expected_spend(&self, lambda: f64) -> f64 {
        self.traffic.expected_spend(self.adline.max_bid, lambda)
    }
}

impl Plant for AuctionPlant {
    fn run_cycle(&self, cycle: usize, lambda: f64, budget_remaining: f64) -> CycleOutcome {
        let mut rng = cycle_rng(self.seed, cycle);
        run_cycle(
            &self.adline,
            lambda,
            &self.traffic,
            &mut rng,
            budget_remaining,
        )
    }
}

/// Deterministic plant whose spend is exactly `gain * lambda`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearPlant {
    pub gain: f64,
}

impl Plant for LinearPlant {
    fn run_cycle(&self, _cycle: usize, lambda: f64, budget_remaining: f64) -> CycleOutcome {
        CycleOutcome {
            spend: (self.gain * lambda).min(budget_remaining.max(0.0)),
            entered: 0,
            won: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleRecord {
    pub cycle: usize,
    /// Multiplier applied during this cycle.
    pub lambda: f64,
    /// Rate handed to the controller as its setpoint.
    pub desired_rate: f64,
    /// Planned spend for this cycle alone.
    pub target_spend: f64,
    pub cycle_spend: f64,
    pub cum_spend: f64,
    pub target_cum_spend: f64,
    pub auctions: u64,
    pub wins: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Telemetry {
    pub records: Vec<CycleRecord>,
}

impl Telemetry {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.lambda).collect()
    }

    pub fn total_spend(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.cum_spend)
    }

    pub fn total_wins(&self) -> u64 {
        self.records.iter().map(|r| r.wins).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioResult {
    pub telemetry: Telemetry,
    pub seed: u64,
    pub controller_kind: ControllerKind,
}

/// Closes the loop between `controller` and `plant` over the plan horizon.
///
/// Each cycle the controller's multiplier is applied for the whole cycle and
/// the cycle's spend is fed back as the observed rate. Once the budget is
/// gone the loop keeps running with zero spend, so the telemetry always
/// covers the full horizon.
pub fn run_closed_loop<P, C>(plant: &P, controller: &mut C, plan: &SpendPlan) -> Telemetry
where
    P: Plant + ?Sized,
    C: PacingController + ?Sized,
{
    let total = plan.total_budget();
    let mut cum = 0.0f64;
    let mut records = Vec::with_capacity(plan.horizon());
    for cycle in 0..plan.horizon() {
        let remaining = (total - cum).max(0.0);
        let desired = plan.desired_rate(cycle, remaining);
        let lambda = controller.lambda();
        let out = plant.run_cycle(cycle, lambda, remaining);
        let spend = out.spend.clamp(0.0, remaining);
        cum = (cum + spend).min(total);
        records.push(CycleRecord {
            cycle,
            lambda,
            desired_rate: desired,
            target_spend: plan.target_spend(cycle),
            cycle_spend: spend,
            cum_spend: cum,
            target_cum_spend: plan.target_cumulative(cycle),
            auctions: out.entered,
            wins: out.won,
        });
        controller.update(ControlInput::new(desired, spend));
    }
    Telemetry { records }
}

/// Runs `controller` against seeded auction traffic for `adline`.
pub fn simulate(
    adline: &AdLine,
    controller: &mut Controller,
    controller_kind: ControllerKind,
    plan: &SpendPlan,
    traffic: &TrafficModel,
    seed: u64,
) -> Result<ScenarioResult, Vec<ConfigError>> {
    let plant = AuctionPlant::new(adline.clone(), *traffic, seed)?;
    if plan.total_budget() != adline.budget_total {
        return Err(alloc::vec![ConfigError::new(
            "plan.total_budget",
            "must equal adline.budget_total"
        )]);
    }
    let telemetry = run_closed_loop(&plant, controller, plan);
    Ok(ScenarioResult {
        telemetry,
        seed,
        controller_kind,
    })
}
