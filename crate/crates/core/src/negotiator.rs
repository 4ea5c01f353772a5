//! Resource negotiator: picks which provider offers to acquire.
//!
//! Offers are take-it-or-leave-it. The decision rule is pluggable through
//! [`AcquisitionStrategy`]; two strategies ship with the crate.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{Catalog, CatalogError};
use crate::domain::{ProviderOffer, ResourceKind};

/// Weights converting mixed resource kinds into one comparable capacity figure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub per_compute_unit: f64,
    pub per_storage_byte: f64,
    pub per_bps: f64,
}

impl Default for Normalization {
    fn default() -> Self {
        Self {
            per_compute_unit: 1.0,
            per_storage_byte: 1.0,
            per_bps: 1.0,
        }
    }
}

impl Normalization {
    pub fn offer_capacity(&self, offer: &ProviderOffer) -> f64 {
        offer
            .resources
            .iter()
            .map(|r| {
                let w = match r.kind {
                    ResourceKind::Processing => self.per_compute_unit,
                    ResourceKind::Storage => self.per_storage_byte,
                    ResourceKind::Communication => self.per_bps,
                };
                w * r.capacity
            })
            .fold(0.0, |a, b| a + b)
    }
}

/// What a strategy may look at besides the offers themselves.
#[derive(Debug, Clone, Copy)]
pub struct NegotiationContext<'a> {
    pub catalog: &'a Catalog,
    /// Price already committed by earlier negotiations.
    pub spent: f64,
}

pub trait AcquisitionStrategy: Send + Sync {
    fn name(&self) -> &str;

    /// Returns the ids of the offers to accept. Must be deterministic in its inputs.
    fn select(&self, offers: &[ProviderOffer], ctx: NegotiationContext<'_>) -> Vec<String>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct AcceptAll;

impl AcquisitionStrategy for AcceptAll {
    fn name(&self) -> &str {
        "accept-all"
    }

    fn select(&self, offers: &[ProviderOffer], _ctx: NegotiationContext<'_>) -> Vec<String> {
        offers.iter().map(|o| o.offer_id.clone()).collect()
    }
}

/// Accepts offers by descending capacity per unit price while the cumulative
/// price stays within the budget. Offers that would overshoot are skipped and
/// the scan continues.
#[derive(Debug, Clone, Copy)]
pub struct BudgetGreedy {
    pub budget: f64,
    pub normalization: Normalization,
}

impl BudgetGreedy {
    pub fn new(budget: f64) -> Self {
        Self {
            budget,
            normalization: Normalization::default(),
        }
    }

    fn value_per_price(&self, offer: &ProviderOffer) -> f64 {
        let capacity = self.normalization.offer_capacity(offer);
        if offer.price > 0.0 {
            capacity / offer.price
        } else if capacity > 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    }
}

impl AcquisitionStrategy for BudgetGreedy {
    fn name(&self) -> &str {
        "budget-greedy"
    }

    fn select(&self, offers: &[ProviderOffer], ctx: NegotiationContext<'_>) -> Vec<String> {
        let mut ranked: Vec<(&ProviderOffer, f64)> = offers
            .iter()
            .map(|o| (o, self.value_per_price(o)))
            .collect();
        ranked.sort_by(|(a, va), (b, vb)| {
            vb.partial_cmp(va)
                .unwrap_or(Ordering::Equal)
                .then_with(|| a.offer_id.cmp(&b.offer_id))
        });
        let remaining = self.budget - ctx.spent;
        let mut spent = 0.0;
        let mut accepted = Vec::new();
        for (offer, _) in ranked {
            if spent + offer.price <= remaining {
                spent += offer.price;
                accepted.push(offer.offer_id.clone());
            }
        }
        accepted
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NegotiationOutcome {
    pub accepted: Vec<String>,
    pub total_price: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NegotiationError {
    #[error("offer id `{0}` appears more than once")]
    DuplicateOffer(String),
    #[error("strategy selected unknown offer `{0}`")]
    UnknownSelection(String),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
}

/// Runs `strategy` over `offers` and deposits the accepted ones.
///
/// Deposits are all-or-nothing: if any accepted offer cannot enter the
/// catalog, the catalog is left as it was.
pub fn negotiate(
    offers: &[ProviderOffer],
    strategy: &dyn AcquisitionStrategy,
    catalog: &mut Catalog,
    spent: f64,
) -> Result<NegotiationOutcome, NegotiationError> {
    let mut ids = BTreeSet::new();
    for o in offers {
        if !ids.insert(o.offer_id.as_str()) {
            return Err(NegotiationError::DuplicateOffer(o.offer_id.clone()));
        }
    }
    let selected = strategy.select(offers, NegotiationContext { catalog, spent });
    let mut accepted_offers = Vec::with_capacity(selected.len());
    for id in &selected {
        let offer = offers
            .iter()
            .find(|o| &o.offer_id == id)
            .ok_or_else(|| NegotiationError::UnknownSelection(id.clone()))?;
        accepted_offers.push(offer);
    }

    let mut staged = catalog.clone();
    for offer in &accepted_offers {
        staged.deposit(offer)?;
    }
    *catalog = staged;

    Ok(NegotiationOutcome {
        total_price: accepted_offers
            .iter()
            .map(|o| o.price)
            .fold(0.0, |a, b| a + b),
        accepted: selected,
    })
}

/// Strategy plus the running total of what has been paid.
pub struct Negotiator {
    strategy: Box<dyn AcquisitionStrategy>,
    spent: f64,
}

impl Negotiator {
    pub fn new(strategy: Box<dyn AcquisitionStrategy>) -> Self {
        Self {
            strategy,
            spent: 0.0,
        }
    }

    pub fn strategy_name(&self) -> &str {
        self.strategy.name()
    }

    pub fn spent(&self) -> f64 {
        self.spent
    }

    pub fn negotiate(
        &mut self,
        offers: &[ProviderOffer],
        catalog: &mut Catalog,
    ) -> Result<NegotiationOutcome, NegotiationError> {
        let outcome = negotiate(offers, self.strategy.as_ref(), catalog, self.spent)?;
        self.spent += outcome.total_price;
        Ok(outcome)
    }
}

impl std::fmt::Debug for Negotiator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Negotiator")
            .field("strategy", &self.strategy.name())
            .field("spent", &self.spent)
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{ResourceDescriptor, GB};

    fn storage_offer(id: &str, gb: u64, price: f64) -> ProviderOffer {
        ProviderOffer {
            offer_id: id.into(),
            provider_id: "p".into(),
            resources: vec![ResourceDescriptor::storage(
                &format!("{id}-disk"),
                "p",
                gb * GB,
            )],
            price,
        }
    }

    #[test]
    fn accept_all_takes_everything() {
        let offers = vec![storage_offer("a", 1, 2.5), storage_offer("b", 2, 4.0)];
        let mut c = Catalog::new();
        let out = negotiate(&offers, &AcceptAll, &mut c, 0.0).unwrap();
        assert_eq!(out.accepted, vec!["a", "b"]);
        assert_eq!(out.total_price, 6.5);
        assert_eq!(c.free(ResourceKind::Storage, None), 3e9);
    }

    #[test]
    fn zero_budget_accepts_nothing() {
        let offers = vec![storage_offer("a", 1, 2.5), storage_offer("b", 2, 4.0)];
        let mut c = Catalog::new();
        let out = negotiate(&offers, &BudgetGreedy::new(0.0), &mut c, 0.0).unwrap();
        assert!(out.accepted.is_empty());
        assert_eq!(out.total_price, 0.0);
        assert!(c.is_empty());
    }

    #[test]
    fn budget_greedy_skips_overshooting_offer() {
        let offers = vec![
            storage_offer("a", 60, 6.0),
            storage_offer("b", 30, 6.0),
            storage_offer("c", 20, 3.0),
        ];
        let mut c = Catalog::new();
        let out = negotiate(&offers, &BudgetGreedy::new(10.0), &mut c, 0.0).unwrap();
        assert_eq!(out.accepted, vec!["a", "c"]);
        assert_eq!(out.total_price, 9.0);
        assert_eq!(c.free(ResourceKind::Storage, None), 80e9);
    }

    #[test]
    fn ties_break_on_offer_id() {
        let offers = vec![storage_offer("z", 10, 1.0), storage_offer("m", 10, 1.0)];
        let mut c = Catalog::new();
        let out = negotiate(&offers, &BudgetGreedy::new(1.0), &mut c, 0.0).unwrap();
        assert_eq!(out.accepted, vec!["m"]);
    }

    #[test]
    fn duplicate_offer_ids_rejected() {
        let offers = vec![storage_offer("a", 1, 1.0), storage_offer("a", 2, 1.0)];
        let mut c = Catalog::new();
        assert_eq!(
            negotiate(&offers, &AcceptAll, &mut c, 0.0),
            Err(NegotiationError::DuplicateOffer("a".into()))
        );
    }

    #[test]
    fn negotiator_tracks_budget_across_rounds() {
        let mut n = Negotiator::new(Box::new(BudgetGreedy::new(10.0)));
        let mut c = Catalog::new();
        let first = n.negotiate(&[storage_offer("a", 60, 6.0)], &mut c).unwrap();
        assert_eq!(first.accepted.len(), 1);
        let second = n.negotiate(&[storage_offer("b", 30, 6.0)], &mut c).unwrap();
        assert!(second.accepted.is_empty());
        assert_eq!(n.spent(), 6.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn offers() -> impl Strategy<Value = Vec<ProviderOffer>> {
            proptest::collection::vec((1u64..100, 0.0f64..20.0), 0..10).prop_map(|v| {
                v.into_iter()
                    .enumerate()
                    .map(|(i, (gb, price))| storage_offer(&format!("o{i}"), gb, price))
                    .collect()
            })
        }

        proptest! {
            #[test]
            fn greedy_respects_budget_and_conserves(offers in offers(), budget in 0.0f64..60.0) {
                let mut c = Catalog::new();
                let strat = BudgetGreedy::new(budget);
                let out = negotiate(&offers, &strat, &mut c, 0.0).unwrap();
                prop_assert!(out.total_price <= budget);
                let expected: f64 = offers
                    .iter()
                    .filter(|o| out.accepted.contains(&o.offer_id))
                    .map(|o| o.resources[0].capacity)
                    .sum();
                prop_assert_eq!(c.acquired(ResourceKind::Storage, None), expected);

                let mut again = Catalog::new();
                let out2 = negotiate(&offers, &strat, &mut again, 0.0).unwrap();
                prop_assert_eq!(out.accepted, out2.accepted);
            }
        }
    }
}
