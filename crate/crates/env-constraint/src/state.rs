//! Accumulated itinerary decisions.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{effective_cost, Money, OptionRef, Sandbox, Slot, TransportMode, TripSpec};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selection {
    pub slot: Slot,
    pub option_id: String,
    pub cost: Money,
}

/// Selections only ever get appended. `running_total_cost` always equals the
/// cost recomputed from the sandbox.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItineraryState {
    pub selections: Vec<Selection>,
    pub running_total_cost: Money,
    pub used_names: BTreeSet<String>,
    pub collected_cuisines: BTreeSet<String>,
    pub modes_used: BTreeSet<TransportMode>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StateError {
    #[error("slot {0:?} is already filled")]
    SlotFilled(Slot),
    #[error("option `{id}` does not exist for slot {slot:?}")]
    UnknownOption { slot: Slot, id: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("running total {running} differs from recomputed cost {recomputed}")]
pub struct CostInvariantBreach {
    pub running: Money,
    pub recomputed: Money,
}

/// Looks an option up in the table that serves `slot`.
pub fn resolve<'a>(sandbox: &'a Sandbox, slot: &Slot, id: &str) -> Option<OptionRef<'a>> {
    match slot {
        Slot::Outbound | Slot::InterCity { .. } | Slot::Return => sandbox.transport(id).map(OptionRef::Transport),
        Slot::Accommodation { .. } => sandbox.hotels.get(id).map(OptionRef::Hotel),
        Slot::Meal { .. } => sandbox.restaurants.get(id).map(OptionRef::Restaurant),
        Slot::Attraction { .. } => sandbox.attractions.get(id).map(OptionRef::Attraction),
    }
}

impl ItineraryState {
    pub fn filled(&self, slot: &Slot) -> Option<&Selection> {
        self.selections.iter().find(|s| &s.slot == slot)
    }

    pub fn apply(&mut self, slot: Slot, option: OptionRef<'_>, spec: &TripSpec) -> Result<(), StateError> {
        if self.filled(&slot).is_some() {
            return Err(StateError::SlotFilled(slot));
        }
        let cost = effective_cost(option, &slot, spec);
        match option {
            OptionRef::Transport(t) => {
                self.modes_used.insert(t.mode);
            }
            OptionRef::Restaurant(r) => {
                self.used_names.insert(r.name.clone());
                self.collected_cuisines.extend(r.cuisines.iter().cloned());
            }
            OptionRef::Attraction(a) => {
                self.used_names.insert(a.name.clone());
            }
            OptionRef::Hotel(_) => {}
        }
        self.running_total_cost += cost;
        self.selections.push(Selection {
            slot,
            option_id: option.id().to_string(),
            cost,
        });
        Ok(())
    }

    /// Applies a selection by id after resolving it in the sandbox.
    pub fn apply_id(&mut self, slot: Slot, id: &str, sandbox: &Sandbox, spec: &TripSpec) -> Result<(), StateError> {
        let option = resolve(sandbox, &slot, id).ok_or_else(|| StateError::UnknownOption {
            slot: slot.clone(),
            id: id.to_string(),
        })?;
        self.apply(slot, option, spec)
    }

    /// Total cost derived from scratch by re-resolving every selection.
    pub fn recompute_cost(&self, sandbox: &Sandbox, spec: &TripSpec) -> Result<Money, StateError> {
        self.selections.iter().try_fold(0, |acc, s| {
            let option = resolve(sandbox, &s.slot, &s.option_id).ok_or_else(|| StateError::UnknownOption {
                slot: s.slot.clone(),
                id: s.option_id.clone(),
            })?;
            Ok(acc + effective_cost(option, &s.slot, spec))
        })
    }

    pub fn check_cost_invariant(&self, sandbox: &Sandbox, spec: &TripSpec) -> Result<(), CostInvariantBreach> {
        let recomputed = self.recompute_cost(sandbox, spec).unwrap_or(Money::MIN);
        if recomputed != self.running_total_cost {
            return Err(CostInvariantBreach {
                running: self.running_total_cost,
                recomputed,
            });
        }
        Ok(())
    }

    pub fn remaining_budget(&self, spec: &TripSpec) -> Money {
        spec.budget - self.running_total_cost
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AttractionOption, LocalConstraints};

    fn fixture() -> (Sandbox, TripSpec) {
        let mut sb = Sandbox::default();
        sb.attractions.insert(
            "a1".into(),
            AttractionOption {
                id: "a1".into(),
                name: "Tower".into(),
                city: "c".into(),
                cost: 7,
            },
        );
        let spec = TripSpec {
            id: "t".into(),
            origin: "o".into(),
            city_sequence: vec!["c".into()],
            days: 1,
            travelers: 3,
            budget: 100,
            local_constraints: LocalConstraints::default(),
            required_cuisines: Default::default(),
        };
        (sb, spec)
    }

    #[test]
    fn apply_tracks_cost_and_names() {
        let (sb, spec) = fixture();
        let mut s = ItineraryState::default();
        s.apply_id(Slot::Attraction { day: 1 }, "a1", &sb, &spec).unwrap();
        assert_eq!(s.running_total_cost, 21);
        assert!(s.used_names.contains("Tower"));
        assert_eq!(s.recompute_cost(&sb, &spec).unwrap(), 21);
        assert!(s.check_cost_invariant(&sb, &spec).is_ok());
    }

    #[test]
    fn filled_slot_cannot_be_overwritten() {
        let (sb, spec) = fixture();
        let mut s = ItineraryState::default();
        s.apply_id(Slot::Attraction { day: 1 }, "a1", &sb, &spec).unwrap();
        assert!(matches!(
            s.apply_id(Slot::Attraction { day: 1 }, "a1", &sb, &spec),
            Err(StateError::SlotFilled(_))
        ));
        assert_eq!(s.selections.len(), 1);
    }

    #[test]
    fn tampered_total_breaks_invariant() {
        let (sb, spec) = fixture();
        let mut s = ItineraryState::default();
        s.apply_id(Slot::Attraction { day: 1 }, "a1", &sb, &spec).unwrap();
        s.running_total_cost -= 1;
        assert_eq!(
            s.check_cost_invariant(&sb, &spec),
            Err(CostInvariantBreach {
                running: 20,
                recomputed: 21
            })
        );
    }
}
