//! Single-impression bidding, bid pacing and auction resolution.
//!
//! An ad bids `max_bid * p_event` for an impression, the pacing multiplier
//! scales that bid down, and the impression goes to the strictly highest
//! bid. Ties lose.

use alloc::string::String;

use crate::error::{ensure, ConfigError};

#[derive(Debug, Clone, PartialEq)]
pub struct AdLine {
    pub id: String,
    /// Currency per conversion event.
    pub max_bid: f64,
    pub budget_total: f64,
}

impl AdLine {
    pub fn new(
        id: impl Into<String>,
        max_bid: f64,
        budget_total: f64,
    ) -> Result<Self, ConfigError> {
        let line = Self {
            id: id.into(),
            max_bid,
            budget_total,
        };
        match line.validate().into_iter().next() {
            Some(e) => Err(e),
            None => Ok(line),
        }
    }

    pub fn validate(&self) -> alloc::vec::Vec<ConfigError> {
        let mut errs = alloc::vec::Vec::new();
        if !(self.max_bid.is_finite() && self.max_bid > 0.0) {
            errs.push(ConfigError::new("adline.max_bid", "must be finite and > 0"));
        }
        if !(self.budget_total.is_finite() && self.budget_total > 0.0) {
            errs.push(ConfigError::new(
                "adline.budget_total",
                "must be finite and > 0",
            ));
        }
        errs
    }
}

/// One impression opportunity as seen by the paced line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Opportunity {
    pub p_event: f64,
    /// Highest competing bid.
    pub competitor_bid: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuctionOutcome {
    pub won: bool,
    /// Zero when the auction is lost.
    pub price: f64,
}

impl AuctionOutcome {
    pub const LOST: Self = Self {
        won: false,
        price: 0.0,
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PricingRule {
    FirstPrice,
    SecondPrice,
}

/// Unpaced bid for one impression.
pub fn final_bid(max_bid: f64, p_event: f64) -> Result<f64, ConfigError> {
    ensure(
        max_bid.is_finite() && max_bid > 0.0,
        "max_bid",
        "must be finite and > 0",
    )?;
    ensure(
        (0.0..=1.0).contains(&p_event),
        "p_event",
        "must lie in [0, 1]",
    )?;
    Ok(max_bid * p_event)
}

/// Bid after applying the pacing multiplier.
pub fn paced_bid(lambda: f64, bid: f64) -> Result<f64, ConfigError> {
    ensure(
        lambda > 0.0 && lambda <= 1.0,
        "lambda",
        "must lie in (0, 1]",
    )?;
    ensure(bid >= 0.0, "bid", "must be >= 0")?;
    Ok(lambda * bid)
}

pub(crate) fn paced_bid_unchecked(lambda: f64, bid: f64) -> f64 {
    lambda * bid
}

pub fn run_auction(own_bid: f64, opp: Opportunity, rule: PricingRule) -> AuctionOutcome {
    if own_bid > opp.competitor_bid {
        let price = match rule {
            PricingRule::FirstPrice => own_bid,
            PricingRule::SecondPrice => opp.competitor_bid,
        };
        AuctionOutcome { won: true, price }
    } else {
        AuctionOutcome::LOST
    }
}
