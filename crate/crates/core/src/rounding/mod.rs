//! Randomized rounding of bundle LP solutions, offline and online, plus the
//! greedy P-edge baseline.

mod offline;
mod online;

pub use offline::{round_offline, round_offline_budgeted};
pub use online::{check_prefix_feasibility, round_online, BundleRef, Decision, OnlineOutcome, Reason};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{AvaError, Result};
use crate::model::{Allocation, EdgeClass, Instance, ItemId};

/// Tolerance used when checking a supplied fractional solution.
pub const FRACTIONAL_TOLERANCE: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RoundingParams {
    pub alpha: f64,
    /// Only used for the reported gamma.
    pub beta: f64,
    pub seed: u64,
}

impl RoundingParams {
    pub fn new(alpha: f64, beta: f64, seed: u64) -> Result<RoundingParams> {
        let open = |x: f64| x > 0.0 && x < 1.0;
        if !open(alpha) || !open(beta) {
            return Err(AvaError::Domain(format!("alpha and beta must lie in (0,1), got {alpha}, {beta}")));
        }
        Ok(RoundingParams { alpha, beta, seed })
    }

    pub fn offline(seed: u64) -> RoundingParams {
        RoundingParams { alpha: 0.3, beta: 0.5, seed }
    }

    pub fn online(seed: u64) -> RoundingParams {
        RoundingParams { alpha: 0.64, beta: 0.1, seed }
    }

    pub fn with_seed(self, seed: u64) -> RoundingParams {
        RoundingParams { seed, ..self }
    }
}

/// `alpha (1 - alpha) (1 - alpha / (1 - beta))`
pub fn gamma_offline(alpha: f64, beta: f64) -> f64 {
    alpha * (1.0 - alpha) * (1.0 - alpha / (1.0 - beta))
}

/// `1 / min(1 - gamma/beta, gamma)`; infinite when the bound is vacuous.
pub fn offline_factor(alpha: f64, beta: f64) -> f64 {
    let g = gamma_offline(alpha, beta);
    factor(g.min(1.0 - g / beta))
}

/// `(alpha/2) (1 - alpha/2) (1 - alpha / (2 (1 - beta)))`
pub fn gamma_online(alpha: f64, beta: f64) -> f64 {
    alpha / 2.0 * (1.0 - alpha / 2.0) * (1.0 - alpha / (2.0 * (1.0 - beta)))
}

/// `2 / min(1/2 - gamma/(4 beta), gamma/4)` against the OPTon value.
pub fn online_factor(alpha: f64, beta: f64) -> f64 {
    let g = gamma_online(alpha, beta);
    2.0 * factor((0.5 - g / (4.0 * beta)).min(g / 4.0))
}

/// `alpha (1 - alpha) (1 - alpha/(1 - beta) - 2 K alpha / (1 - eps))` where
/// `eps` bounds every cost-to-budget ratio.
pub fn gamma_budgeted(alpha: f64, beta: f64, k: usize, eps: f64) -> f64 {
    alpha * (1.0 - alpha) * (1.0 - alpha / (1.0 - beta) - 2.0 * k as f64 * alpha / (1.0 - eps))
}

/// `1 / min(1 - gamma/beta, gamma)` with the budgeted gamma.
pub fn budgeted_factor(alpha: f64, beta: f64, k: usize, eps: f64) -> f64 {
    let g = gamma_budgeted(alpha, beta, k, eps);
    factor(g.min(1.0 - g / beta))
}

fn factor(m: f64) -> f64 {
    if m > 0.0 {
        1.0 / m
    } else {
        f64::INFINITY
    }
}

/// Grid search over `alpha` in `(0,1)` (step `1e-4`) minimizing a factor.
pub fn best_alpha(f: impl Fn(f64) -> f64) -> (f64, f64) {
    (1..10_000).map(|k| k as f64 * 1e-4).map(|a| (a, f(a))).fold((0.5, f64::INFINITY), |best, cur| {
        if cur.1 < best.1 {
            cur
        } else {
            best
        }
    })
}

/// Substream identifiers: a tag plus two indices, each index below 2^28.
pub(crate) fn stream_id(tag: u8, a: usize, b: usize) -> u64 {
    ((tag as u64) << 56) | ((a as u64 & 0x0FFF_FFFF) << 28) | (b as u64 & 0x0FFF_FFFF)
}

/// One uniform draw from substream `stream` of `seed`.
pub(crate) fn uniform(seed: u64, stream: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.gen()
}

/// Allocates each item, in `order` (default: declaration order), along its
/// highest-value P-edge; earlier buyers win ties. N-edges are never used.
pub fn greedy_p_only(inst: &Instance, order: Option<&[ItemId]>) -> Allocation {
    let all: Vec<ItemId> = inst.items().collect();
    let order = order.unwrap_or(&all);
    let mut alloc = Allocation::new();
    for &i in order {
        let best = inst.edges(i).iter().filter(|e| inst.class(i, e.buyer) == Some(EdgeClass::P)).fold(
            None,
            |best: Option<&crate::model::Edge>, e| match best {
                Some(b) if b.value >= e.value => Some(b),
                _ => Some(e),
            },
        );
        if let Some(e) = best {
            alloc.assign(i, e.buyer);
        }
    }
    alloc
}
