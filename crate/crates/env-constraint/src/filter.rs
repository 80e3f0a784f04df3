//! Constraint-upfront option filtering.
//!
//! Five stages run in order and each narrows the survivors of the previous:
//! sandbox membership, local constraints, transport-mode consistency,
//! trip-wide uniqueness, affordability.

use serde::{Deserialize, Serialize};
use sdp_core::Predicate;
use thiserror::Error;

use crate::model::{effective_cost, Money, OptionRef, Sandbox, Slot, TripSpec};
use crate::plan::PlanStep;
use crate::state::ItineraryState;

pub const MAX_OPTIONS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterStage {
    Membership,
    LocalConstraints,
    ModeConsistency,
    Uniqueness,
    Affordability,
}

impl FilterStage {
    pub const ALL: [FilterStage; 5] = [
        FilterStage::Membership,
        FilterStage::LocalConstraints,
        FilterStage::ModeConsistency,
        FilterStage::Uniqueness,
        FilterStage::Affordability,
    ];
}

/// Surviving candidate count after each stage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageCount {
    pub stage: FilterStage,
    pub surviving: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub id: String,
    pub label: String,
    pub cost: Money,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterOutcome {
    pub slot: Slot,
    /// Cheapest first, ties by id, at most `MAX_OPTIONS`.
    pub options: Vec<Candidate>,
    pub diagnostics: Vec<StageCount>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[error("no options left for {slot:?} after the {stage:?} stage")]
pub struct EmptyOptionSet {
    pub slot: Slot,
    pub stage: FilterStage,
    pub diagnostics: Vec<StageCount>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FilterError {
    #[error(transparent)]
    Empty(#[from] EmptyOptionSet),
    #[error("predicate `{0}` is not a selection predicate")]
    NotSelection(String),
    #[error("every slot of predicate `{0}` is already filled")]
    AlreadyFilled(String),
}

/// Every option in the table serving `slot`, in id order.
pub fn table_for<'a>(sandbox: &'a Sandbox, slot: &Slot) -> Vec<OptionRef<'a>> {
    match slot {
        Slot::Outbound | Slot::InterCity { .. } | Slot::Return => sandbox
            .flights
            .values()
            .chain(sandbox.ground_transport.values())
            .map(OptionRef::Transport)
            .collect(),
        Slot::Accommodation { .. } => sandbox.hotels.values().map(OptionRef::Hotel).collect(),
        Slot::Meal { .. } => sandbox.restaurants.values().map(OptionRef::Restaurant).collect(),
        Slot::Attraction { .. } => sandbox.attractions.values().map(OptionRef::Attraction).collect(),
    }
}

/// Route a transport slot covers.
pub fn route<'a>(slot: &Slot, spec: &'a TripSpec) -> Option<(&'a str, &'a str)> {
    let c = &spec.city_sequence;
    match *slot {
        Slot::Outbound => Some((&spec.origin, &c[0])),
        Slot::InterCity { leg } => Some((&c[leg], &c[leg + 1])),
        Slot::Return => Some((&c[c.len() - 1], &spec.origin)),
        _ => None,
    }
}

/// City a non-transport slot is served in.
pub fn slot_city<'a>(slot: &Slot, spec: &'a TripSpec) -> Option<&'a str> {
    match *slot {
        Slot::Accommodation { city_index } => Some(&spec.city_sequence[city_index]),
        Slot::Meal { day, .. } | Slot::Attraction { day } => Some(spec.city_of_day(day)),
        _ => None,
    }
}

fn passes(stage: FilterStage, option: OptionRef<'_>, slot: &Slot, state: &ItineraryState, spec: &TripSpec) -> bool {
    let lc = &spec.local_constraints;
    match stage {
        FilterStage::Membership => match option {
            OptionRef::Transport(t) => route(slot, spec) == Some((t.from.as_str(), t.to.as_str())),
            OptionRef::Hotel(h) => slot_city(slot, spec) == Some(h.city.as_str()),
            OptionRef::Restaurant(r) => slot_city(slot, spec) == Some(r.city.as_str()),
            OptionRef::Attraction(a) => slot_city(slot, spec) == Some(a.city.as_str()),
        },
        FilterStage::LocalConstraints => match option {
            OptionRef::Transport(t) => !lc.forbidden_modes.contains(&t.mode),
            OptionRef::Hotel(h) => {
                lc.room_type.is_none_or(|r| r.admits(h.room_type)) && lc.house_rules.is_disjoint(&h.forbids)
            }
            _ => true,
        },
        FilterStage::ModeConsistency => match option {
            OptionRef::Transport(t) => !state.modes_used.iter().any(|m| m.conflicts_with(t.mode)),
            _ => true,
        },
        FilterStage::Uniqueness => match option {
            OptionRef::Restaurant(r) => !state.used_names.contains(&r.name),
            OptionRef::Attraction(a) => !state.used_names.contains(&a.name),
            _ => true,
        },
        FilterStage::Affordability => {
            state.running_total_cost + effective_cost(option, slot, spec) <= spec.budget
        }
    }
}

/// Whether one option satisfies all five stages for `slot`.
pub fn admissible(option: OptionRef<'_>, slot: &Slot, state: &ItineraryState, spec: &TripSpec) -> Result<(), FilterStage> {
    match FilterStage::ALL.into_iter().find(|&st| !passes(st, option, slot, state, spec)) {
        Some(stage) => Err(stage),
        None => Ok(()),
    }
}

pub fn filter_slot(
    state: &ItineraryState,
    spec: &TripSpec,
    slot: &Slot,
    sandbox: &Sandbox,
) -> Result<FilterOutcome, EmptyOptionSet> {
    let mut survivors = table_for(sandbox, slot);
    let mut diagnostics = Vec::with_capacity(FilterStage::ALL.len());
    for stage in FilterStage::ALL {
        survivors.retain(|o| passes(stage, *o, slot, state, spec));
        diagnostics.push(StageCount {
            stage,
            surviving: survivors.len(),
        });
        if survivors.is_empty() {
            return Err(EmptyOptionSet {
                slot: slot.clone(),
                stage,
                diagnostics,
            });
        }
    }
    let mut options: Vec<Candidate> = survivors
        .into_iter()
        .map(|o| Candidate {
            id: o.id().to_string(),
            label: o.label(),
            cost: effective_cost(o, slot, spec),
        })
        .collect();
    options.sort_by(|a, b| a.cost.cmp(&b.cost).then_with(|| a.id.cmp(&b.id)));
    options.truncate(MAX_OPTIONS);
    Ok(FilterOutcome {
        slot: slot.clone(),
        options,
        diagnostics,
    })
}

/// Filters for the first unfilled slot of a selection predicate.
pub fn filter_options(
    state: &ItineraryState,
    spec: &TripSpec,
    predicate: &Predicate,
    sandbox: &Sandbox,
) -> Result<FilterOutcome, FilterError> {
    let step = PlanStep::of(predicate)
        .filter(PlanStep::is_selection)
        .ok_or_else(|| FilterError::NotSelection(predicate.id.0.clone()))?;
    let slot = step
        .slots()
        .into_iter()
        .find(|s| state.filled(s).is_none())
        .ok_or_else(|| FilterError::AlreadyFilled(predicate.id.0.clone()))?;
    Ok(filter_slot(state, spec, &slot, sandbox)?)
}
