//! Public-blockchain anchoring, simulated.
//!
//! Sealing a chain hands the new super block's hash to an anchoring
//! backend, which plays the role of a public blockchain: it accepts a
//! payload digest plus a gas price and, some tens of seconds later,
//! confirms it with a pseudo transaction hash. The simulator reproduces
//! the latency profile of real submissions — a lognormal body whose mean
//! shrinks slightly as the gas price rises, plus a rare heavy tail of
//! multi-minute stragglers — under a seeded RNG so that runs are exactly
//! reproducible.

use crate::hash::{compute_hash, Hash};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::Mutex;

/// Gas price in gwei offered for an anchoring transaction. At least 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u64")]
pub struct GasPrice(u64);

impl GasPrice {
    pub fn new(gwei: u64) -> Result<Self, AnchorError> {
        if gwei == 0 {
            return Err(AnchorError::BadGasPrice);
        }
        Ok(GasPrice(gwei))
    }

    pub fn gwei(&self) -> u64 {
        self.0
    }
}

impl TryFrom<u64> for GasPrice {
    type Error = AnchorError;
    fn try_from(v: u64) -> Result<Self, AnchorError> {
        GasPrice::new(v)
    }
}

impl From<GasPrice> for u64 {
    fn from(g: GasPrice) -> u64 {
        g.0
    }
}

/// Acknowledgement that a payload was handed to the anchoring backend.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnchorTicket {
    /// Unique per backend instance.
    pub ticket_id: String,
    /// The digest being anchored (for us: a super block's hash).
    pub payload_hash: Hash,
    pub gas_price: GasPrice,
    /// Submission time, Unix epoch milliseconds.
    pub submitted_at: i64,
}

/// Confirmation of an anchored payload.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnchorReceipt {
    pub ticket_id: String,
    /// `compute_hash(payload_hash ++ ticket_id)` — deterministic, so a
    /// receipt can be re-derived and checked from its ticket.
    pub pseudo_tx_hash: Hash,
    /// Confirmation time, Unix epoch milliseconds.
    pub confirmed_at: i64,
    /// `confirmed_at − submitted_at`; never negative.
    pub latency_ms: u64,
}

/// Poll outcome for a submitted ticket.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PollOutcome {
    /// Not confirmed yet at the polled instant.
    Pending,
    Confirmed(AnchorReceipt),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AnchorError {
    #[error("gas price must be at least 1 gwei")]
    BadGasPrice,
    #[error("unknown ticket {0}")]
    UnknownTicket(String),
    #[error("no calibrated latency tier for gas price {0} gwei (strict tier matching is on)")]
    UnknownGasTier(u64),
}

/// An anchoring backend: accepts payload digests, confirms them later.
pub trait AnchorBackend: Send + Sync {
    /// Registers `payload_hash` for anchoring at gas price `gas_price`,
    /// at time `now_ms`. Returns a ticket to poll with.
    fn submit(
        &self,
        payload_hash: &Hash,
        gas_price: GasPrice,
        now_ms: i64,
    ) -> Result<AnchorTicket, AnchorError>;

    /// Asks whether `ticket_id` has confirmed as of `now_ms`.
    fn poll(&self, ticket_id: &str, now_ms: i64) -> Result<PollOutcome, AnchorError>;
}

/// Latency parameters for one calibrated gas tier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TierParams {
    /// Mean of the underlying normal, in log-milliseconds.
    pub mu: f64,
    /// Standard deviation of the underlying normal, in log-milliseconds.
    pub sigma: f64,
}

/// One uniform band of the heavy tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailBand {
    /// Relative weight of this band within the tail.
    pub weight: f64,
    pub lo_ms: f64,
    pub hi_ms: f64,
}

/// Confirmation-latency model: per-gas-tier lognormal body plus a small
/// probability of a draw from a banded heavy tail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyModel {
    /// Calibrated tiers, keyed by gas price in gwei.
    pub tiers: Vec<(u64, TierParams)>,
    /// Probability that a draw comes from the tail instead of the body.
    /// Small: below 0.01.
    pub p_tail: f64,
    /// Tail bands; weights are normalized at draw time.
    pub tail_bands: Vec<TailBand>,
}

/// Lognormal spread shared by the default tiers, in log-milliseconds.
pub const DEFAULT_SIGMA: f64 = 0.25;
/// Default tail probability: about one submission in five hundred.
pub const DEFAULT_P_TAIL: f64 = 0.002;

/// Overall mean confirmation latency targeted by each default tier, in
/// milliseconds (tail included). Higher gas confirms slightly faster; the
/// 9-gwei tier centers on 23 seconds.
pub const DEFAULT_TIER_MEANS_MS: [(u64, f64); 3] =
    [(6, 23_800.0), (9, 23_000.0), (20, 22_250.0)];

/// Default heavy-tail bands: mostly three-to-five-minute stragglers, with
/// a rarer twenty-to-twenty-five-minute component.
pub const DEFAULT_TAIL_BANDS: [TailBand; 2] = [
    TailBand { weight: 0.85, lo_ms: 180_000.0, hi_ms: 300_000.0 },
    TailBand { weight: 0.15, lo_ms: 1_200_000.0, hi_ms: 1_500_000.0 },
];

impl LatencyModel {
    /// Builds a model from overall per-tier mean targets: the lognormal
    /// body mean is solved so that body and tail mix to the target.
    pub fn from_tier_means(
        tier_means_ms: &[(u64, f64)],
        sigma: f64,
        p_tail: f64,
        tail_bands: &[TailBand],
    ) -> Self {
        let tail_weight: f64 = tail_bands.iter().map(|b| b.weight).sum();
        let tail_mean: f64 = tail_bands
            .iter()
            .map(|b| b.weight / tail_weight * (b.lo_ms + b.hi_ms) / 2.0)
            .sum();
        let tiers = tier_means_ms
            .iter()
            .map(|&(gwei, target)| {
                let body_mean = (target - p_tail * tail_mean) / (1.0 - p_tail);
                // E[lognormal(mu, sigma)] = exp(mu + sigma²/2).
                let mu = body_mean.ln() - sigma * sigma / 2.0;
                (gwei, TierParams { mu, sigma })
            })
            .collect();
        LatencyModel { tiers, p_tail, tail_bands: tail_bands.to_vec() }
    }

    /// Finds the calibrated tier for `gas_price`: exact match, else the
    /// nearest tier by absolute gwei distance (lower wins ties), else an
    /// error when `strict` is set.
    pub fn tier_for(&self, gas_price: GasPrice, strict: bool) -> Result<TierParams, AnchorError> {
        let gwei = gas_price.gwei();
        if let Some((_, p)) = self.tiers.iter().find(|(g, _)| *g == gwei) {
            return Ok(*p);
        }
        if strict {
            return Err(AnchorError::UnknownGasTier(gwei));
        }
        self.tiers
            .iter()
            .min_by_key(|(g, _)| (g.abs_diff(gwei), *g))
            .map(|(_, p)| *p)
            .ok_or(AnchorError::UnknownGasTier(gwei))
    }

    /// Draws one confirmation latency in whole milliseconds (at least 1).
    pub fn draw<R: Rng>(&self, tier: TierParams, rng: &mut R) -> u64 {
        let ms = if rng.gen::<f64>() < self.p_tail {
            let tail_weight: f64 = self.tail_bands.iter().map(|b| b.weight).sum();
            let mut pick = rng.gen::<f64>() * tail_weight;
            let mut chosen = *self.tail_bands.last().expect("model has tail bands");
            for band in &self.tail_bands {
                if pick < band.weight {
                    chosen = *band;
                    break;
                }
                pick -= band.weight;
            }
            Uniform::new(chosen.lo_ms, chosen.hi_ms).sample(rng)
        } else {
            let normal = Normal::new(tier.mu, tier.sigma).expect("finite tier parameters");
            normal.sample(rng).exp()
        };
        (ms.round() as i64).max(1) as u64
    }
}

impl Default for LatencyModel {
    fn default() -> Self {
        LatencyModel::from_tier_means(
            &DEFAULT_TIER_MEANS_MS,
            DEFAULT_SIGMA,
            DEFAULT_P_TAIL,
            &DEFAULT_TAIL_BANDS,
        )
    }
}

struct PendingTicket {
    ticket: AnchorTicket,
    confirm_at_ms: i64,
}

struct SimulatedState {
    rng: ChaCha12Rng,
    next_ticket: u64,
    pending: HashMap<String, PendingTicket>,
    confirmed: HashMap<String, AnchorReceipt>,
}

/// In-process anchoring simulator.
///
/// Each submission draws its confirmation latency immediately (advancing
/// the seeded RNG in submission order, which is what makes a run
/// reproducible) and schedules the confirmation at `now + draw`. Polling
/// before that instant returns [`PollOutcome::Pending`].
pub struct SimulatedAnchor {
    model: LatencyModel,
    strict_tiers: bool,
    state: Mutex<SimulatedState>,
}

impl SimulatedAnchor {
    pub fn new(model: LatencyModel, seed: u64) -> Self {
        SimulatedAnchor {
            model,
            strict_tiers: false,
            state: Mutex::new(SimulatedState {
                rng: ChaCha12Rng::seed_from_u64(seed),
                next_ticket: 0,
                pending: HashMap::new(),
                confirmed: HashMap::new(),
            }),
        }
    }

    /// Makes submissions with a gas price outside the calibrated tiers an
    /// error instead of snapping to the nearest tier.
    pub fn with_strict_tiers(mut self) -> Self {
        self.strict_tiers = true;
        self
    }

    /// Starts ticket numbering at `start` instead of 0. A caller that
    /// persists tickets must pass a number past everything already on
    /// record, or a restarted backend would reissue ids that collide with
    /// the stored history.
    pub fn with_ticket_start(self, start: u64) -> Self {
        self.state.lock().expect("anchor state lock").next_ticket = start;
        self
    }

    pub fn model(&self) -> &LatencyModel {
        &self.model
    }
}

impl AnchorBackend for SimulatedAnchor {
    fn submit(
        &self,
        payload_hash: &Hash,
        gas_price: GasPrice,
        now_ms: i64,
    ) -> Result<AnchorTicket, AnchorError> {
        let tier = self.model.tier_for(gas_price, self.strict_tiers)?;
        let mut state = self.state.lock().expect("anchor state lock");
        let latency = self.model.draw(tier, &mut state.rng);
        let ticket_id = format!("tk-{:08}", state.next_ticket);
        state.next_ticket += 1;
        let ticket = AnchorTicket {
            ticket_id: ticket_id.clone(),
            payload_hash: payload_hash.clone(),
            gas_price,
            submitted_at: now_ms,
        };
        state.pending.insert(
            ticket_id,
            PendingTicket { ticket: ticket.clone(), confirm_at_ms: now_ms + latency as i64 },
        );
        Ok(ticket)
    }

    fn poll(&self, ticket_id: &str, now_ms: i64) -> Result<PollOutcome, AnchorError> {
        let mut state = self.state.lock().expect("anchor state lock");
        if let Some(receipt) = state.confirmed.get(ticket_id) {
            return Ok(PollOutcome::Confirmed(receipt.clone()));
        }
        let Some(p) = state.pending.get(ticket_id) else {
            return Err(AnchorError::UnknownTicket(ticket_id.to_string()));
        };
        if now_ms < p.confirm_at_ms {
            return Ok(PollOutcome::Pending);
        }
        let p = state.pending.remove(ticket_id).expect("checked above");
        let pseudo_tx_hash = compute_hash(
            format!("{}{}", p.ticket.payload_hash, p.ticket.ticket_id).as_bytes(),
        );
        let receipt = AnchorReceipt {
            ticket_id: p.ticket.ticket_id.clone(),
            pseudo_tx_hash,
            confirmed_at: p.confirm_at_ms,
            latency_ms: (p.confirm_at_ms - p.ticket.submitted_at) as u64,
        };
        state.confirmed.insert(p.ticket.ticket_id.clone(), receipt.clone());
        Ok(PollOutcome::Confirmed(receipt))
    }
}
