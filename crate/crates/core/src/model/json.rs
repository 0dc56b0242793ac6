//! JSON instance files.
//!
//! Numbers may be JSON numbers or strings holding `"a/b"` or a decimal.
//! Writers emit a JSON number whenever the value survives the float round
//! trip exactly and a `"a/b"` string otherwise.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{BuyerId, Instance, InstanceBuilder};
use crate::error::{AvaError, Result};
use crate::rational::{self, Rational};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Num {
    Float(f64),
    Text(String),
}

impl Num {
    pub fn to_rational(&self) -> Result<Rational> {
        match self {
            Num::Float(x) => rational::from_f64(*x),
            Num::Text(s) => rational::parse(s),
        }
    }

    pub fn from_rational(r: &Rational) -> Num {
        let x = rational::to_f64(r);
        match rational::from_f64(x) {
            Ok(back) if back == *r => Num::Float(x),
            _ => Num::Text(format!("{}/{}", r.numer(), r.denom())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuyerRecord {
    pub id: String,
    pub rho: Num,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budgets: Option<BTreeMap<String, Num>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ItemRecord {
    pub id: String,
    pub values: BTreeMap<String, Num>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub costs: Option<BTreeMap<String, Num>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resource_costs: Option<BTreeMap<String, BTreeMap<String, Num>>>,
}

/// On-disk form of an [`Instance`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub buyers: Vec<BuyerRecord>,
    pub items: Vec<ItemRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl InstanceFile {
    pub fn to_instance(&self) -> Result<Instance> {
        let mut b = InstanceBuilder::new();
        let mut buyer_ids: BTreeMap<&str, BuyerId> = BTreeMap::new();
        for rec in &self.buyers {
            let j = b.add_buyer(rec.id.clone(), rec.rho.to_rational()?);
            if buyer_ids.insert(rec.id.as_str(), j).is_some() {
                return Err(AvaError::Validation(format!("duplicate buyer id {:?}", rec.id)));
            }
        }
        let lookup = |name: &str| {
            buyer_ids.get(name).copied().ok_or_else(|| AvaError::Validation(format!("unknown buyer id {name:?}")))
        };

        let mut resource_names = BTreeSet::new();
        for rec in &self.buyers {
            resource_names.extend(rec.budgets.iter().flat_map(|m| m.keys().cloned()));
        }
        for rec in &self.items {
            resource_names.extend(rec.resource_costs.iter().flat_map(|m| m.keys().cloned()));
        }
        let resources: BTreeMap<String, usize> =
            resource_names.into_iter().map(|name| (name.clone(), b.add_resource(name))).collect();

        for rec in &self.buyers {
            for (res, budget) in rec.budgets.iter().flatten() {
                b.set_budget(resources[res], lookup(&rec.id)?, budget.to_rational()?);
            }
        }
        for rec in &self.items {
            let i = b.add_item(rec.id.clone());
            for (buyer, v) in &rec.values {
                b.set_value(i, lookup(buyer)?, v.to_rational()?);
            }
            for (buyer, c) in rec.costs.iter().flatten() {
                b.set_cost(i, lookup(buyer)?, c.to_rational()?);
            }
            for (res, costs) in rec.resource_costs.iter().flatten() {
                for (buyer, c) in costs {
                    b.set_resource_cost(resources[res], i, lookup(buyer)?, c.to_rational()?);
                }
            }
        }
        for n in &self.notes {
            b.note(n.clone());
        }
        b.build()
    }

    pub fn from_instance(inst: &Instance) -> InstanceFile {
        let buyers = inst
            .buyer_ids()
            .map(|j| {
                let budgets: BTreeMap<String, Num> = inst
                    .resources()
                    .iter()
                    .filter_map(|r| r.budget(j).map(|b| (r.name.clone(), Num::from_rational(b))))
                    .collect();
                BuyerRecord {
                    id: inst.buyer(j).name.clone(),
                    rho: Num::from_rational(&inst.rho(j)),
                    budgets: (!budgets.is_empty()).then_some(budgets),
                }
            })
            .collect();
        let items = inst
            .items()
            .map(|i| {
                let name_of = |j: BuyerId| inst.buyer(j).name.clone();
                let values = inst.edges(i).iter().map(|e| (name_of(e.buyer), Num::from_rational(&e.value))).collect();
                let costs = inst
                    .is_genava()
                    .then(|| inst.edges(i).iter().map(|e| (name_of(e.buyer), Num::from_rational(&e.cost))).collect());
                let resource_costs: BTreeMap<String, BTreeMap<String, Num>> = inst
                    .resources()
                    .iter()
                    .filter(|r| !r.costs[i.0].is_empty())
                    .map(|r| {
                        let m = r.costs[i.0].iter().map(|(j, c)| (name_of(*j), Num::from_rational(c))).collect();
                        (r.name.clone(), m)
                    })
                    .collect();
                ItemRecord {
                    id: inst.item_name(i).to_string(),
                    values,
                    costs,
                    resource_costs: (!resource_costs.is_empty()).then_some(resource_costs),
                }
            })
            .collect();
        InstanceFile { buyers, items, notes: inst.notes().to_vec() }
    }
}

impl Instance {
    pub fn from_json_str(s: &str) -> Result<Instance> {
        let file: InstanceFile = serde_json::from_str(s)?;
        file.to_instance()
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&InstanceFile::from_instance(self)).expect("instance serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Instance> {
        Instance::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json_string() + "\n")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    const SAMPLE: &str = r#"{
        "buyers": [{"id": "a", "rho": 1, "budgets": {"storage": 4}}, {"id": "b", "rho": "4/3"}],
        "items": [
            {"id": "p", "values": {"a": 1.3, "b": 2}},
            {"id": "n", "values": {"a": 0.9}, "resource_costs": {"storage": {"a": 1}}}
        ]
    }"#;

    #[test]
    fn parses_sample() {
        let inst = Instance::from_json_str(SAMPLE).unwrap();
        assert_eq!(inst.n_items(), 2);
        assert_eq!(inst.rho(BuyerId(1)), q(4, 3));
        assert_eq!(inst.value(super::super::ItemId(0), BuyerId(0)), q(13, 10));
        assert_eq!(inst.resources().len(), 1);
        assert_eq!(inst.resources()[0].budget(BuyerId(0)), Some(&q(4, 1)));
        assert_eq!(inst.resources()[0].budget(BuyerId(1)), None);
    }

    #[test]
    fn round_trips() {
        let inst = Instance::from_json_str(SAMPLE).unwrap();
        let again = Instance::from_json_str(&inst.to_json_string()).unwrap();
        assert_eq!(inst, again);
    }

    #[test]
    fn rejects_unknown_fields_and_buyers() {
        let bad = r#"{"buyers": [{"id": "a", "rho": 1, "colour": "red"}], "items": []}"#;
        assert!(Instance::from_json_str(bad).is_err());
        let bad = r#"{"buyers": [{"id": "a", "rho": 1}], "items": [{"id": "x", "values": {"z": 1}}]}"#;
        assert!(Instance::from_json_str(bad).is_err());
    }

    #[test]
    fn non_terminating_values_are_written_as_fractions() {
        assert_eq!(Num::from_rational(&q(1, 3)), Num::Text("1/3".into()));
        assert_eq!(Num::from_rational(&q(11, 10)), Num::Float(1.1));
    }
}
