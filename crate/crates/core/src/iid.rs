//! I.i.d. arrival models: item types, arrival probabilities and a horizon.

use std::collections::BTreeMap;
use std::path::Path;

use num_traits::{One, Zero};
use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{AvaError, Result};
use crate::model::json::{BuyerRecord, ItemRecord};
use crate::model::{Instance, InstanceBuilder, InstanceFile, ItemId, Num};
use crate::rational::{self, Rational};

/// Types are stored as the items of an [`Instance`] so edge classification
/// and excesses are shared with the offline code.
#[derive(Clone, Debug, PartialEq)]
pub struct IidModel {
    types: Instance,
    probs: Vec<Rational>,
    horizon: usize,
}

impl IidModel {
    pub fn new(types: Instance, probs: Vec<Rational>, horizon: usize) -> Result<IidModel> {
        if probs.len() != types.n_items() {
            return Err(AvaError::Validation("one probability per type required".into()));
        }
        if probs.iter().any(|q| *q < Rational::zero()) {
            return Err(AvaError::Validation("negative arrival probability".into()));
        }
        if probs.iter().sum::<Rational>() != Rational::one() {
            return Err(AvaError::Validation("arrival probabilities must sum to 1".into()));
        }
        if horizon < 2 {
            return Err(AvaError::Validation("horizon must be at least 2".into()));
        }
        if types.has_budgets() {
            return Err(AvaError::Validation("i.i.d. models carry no budgets".into()));
        }
        Ok(IidModel { types, probs, horizon })
    }

    pub fn types(&self) -> &Instance {
        &self.types
    }

    pub fn probs(&self) -> &[Rational] {
        &self.probs
    }

    pub fn prob(&self, i: ItemId) -> Rational {
        self.probs[i.0]
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Expected arrivals `q_i * T` of type `i`.
    pub fn expected_arrivals(&self, i: ItemId) -> Rational {
        self.probs[i.0] * Rational::from_integer(self.horizon as i128)
    }

    pub fn n_types(&self) -> usize {
        self.types.n_items()
    }

    /// Draws `T` i.i.d. types.
    pub fn sample_stream<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<ItemId> {
        let weights: Vec<f64> = self.probs.iter().map(rational::to_f64).collect();
        let dist = WeightedIndex::new(&weights).expect("probabilities sum to one");
        (0..self.horizon).map(|_| ItemId(dist.sample(rng))).collect()
    }

    /// One item per arrival, named `t<k>:<type>`, carrying the type's edges.
    pub fn realize(&self, stream: &[ItemId]) -> Result<Instance> {
        let mut b = InstanceBuilder::new();
        for buyer in self.types.buyers() {
            b.add_buyer(buyer.name.clone(), buyer.rho);
        }
        for (t, &ty) in stream.iter().enumerate() {
            if ty.0 >= self.n_types() {
                return Err(AvaError::StreamModelMismatch(format!("unknown type index {}", ty.0)));
            }
            let i = b.add_item(format!("t{}:{}", t + 1, self.types.item_name(ty)));
            for e in self.types.edges(ty) {
                b.set_value(i, e.buyer, e.value);
                if self.types.is_genava() {
                    b.set_cost(i, e.buyer, e.cost);
                }
            }
        }
        b.build()
    }

    pub fn from_json_str(s: &str) -> Result<IidModel> {
        let file: ModelFile = serde_json::from_str(s)?;
        let types = InstanceFile { buyers: file.buyers, items: file.types, notes: file.notes }.to_instance()?;
        let mut probs = vec![None; types.n_items()];
        for (name, q) in &file.probs {
            let i = types
                .item_by_name(name)
                .ok_or_else(|| AvaError::Validation(format!("probability for unknown type {name:?}")))?;
            probs[i.0] = Some(q.to_rational()?);
        }
        let probs = probs
            .into_iter()
            .enumerate()
            .map(|(k, q)| {
                q.ok_or_else(|| {
                    AvaError::Validation(format!("type {:?} has no probability", types.item_name(ItemId(k))))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        IidModel::new(types, probs, file.horizon)
    }

    pub fn to_json_string(&self) -> String {
        let f = InstanceFile::from_instance(&self.types);
        let file = ModelFile {
            buyers: f.buyers,
            types: f.items,
            probs: self
                .types
                .items()
                .map(|i| (self.types.item_name(i).to_string(), Num::from_rational(&self.probs[i.0])))
                .collect(),
            horizon: self.horizon,
            notes: f.notes,
        };
        serde_json::to_string_pretty(&file).expect("model serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<IidModel> {
        IidModel::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json_string() + "\n")?;
        Ok(())
    }
}

/// On-disk form of an [`IidModel`].
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub buyers: Vec<BuyerRecord>,
    pub types: Vec<ItemRecord>,
    pub probs: BTreeMap<String, Num>,
    pub horizon: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, q};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two_types() -> IidModel {
        let mut b = InstanceBuilder::new();
        let j = b.add_buyer("b", int(1));
        let p = b.add_item("p");
        let n = b.add_item("n");
        b.set_value(p, j, int(2)).set_value(n, j, q(1, 2));
        IidModel::new(b.build().unwrap(), vec![q(1, 4), q(3, 4)], 4).unwrap()
    }

    #[test]
    fn probabilities_must_sum_to_one() {
        let m = two_types();
        assert!(IidModel::new(m.types().clone(), vec![q(1, 4), q(1, 4)], 4).is_err());
        assert!(IidModel::new(m.types().clone(), vec![q(1, 4), q(3, 4)], 1).is_err());
    }

    #[test]
    fn json_round_trip() {
        let m = two_types();
        assert_eq!(IidModel::from_json_str(&m.to_json_string()).unwrap(), m);
    }

    #[test]
    fn sampling_is_seeded() {
        let m = two_types();
        let a = m.sample_stream(&mut ChaCha8Rng::seed_from_u64(3));
        let b = m.sample_stream(&mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(a, b);
        assert_eq!(a.len(), 4);
        let inst = m.realize(&a).unwrap();
        assert_eq!(inst.n_items(), 4);
    }
}
