//! The aggregate budget check and itinerary rendering.

use sdp_core::ValidationVerdict;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Money, OptionRef, Sandbox, Slot, TripSpec, MEALS};
use crate::plan::plan_steps;
use crate::state::{resolve, CostInvariantBreach, ItineraryState};

/// Every slot the plan fills, in plan order.
pub fn required_slots(spec: &TripSpec) -> Vec<Slot> {
    plan_steps(spec).iter().flat_map(|s| s.slots()).collect()
}

/// k = 1 iff the itinerary is structurally complete, within budget and covers
/// the required cuisines. A cost mismatch is an invariant breach, not a
/// verdict.
pub fn validate_budget_check(
    state: &ItineraryState,
    spec: &TripSpec,
    sandbox: &Sandbox,
) -> Result<ValidationVerdict, CostInvariantBreach> {
    state.check_cost_invariant(sandbox, spec)?;
    if let Some(missing) = required_slots(spec).into_iter().find(|s| state.filled(s).is_none()) {
        return Ok(ValidationVerdict::reject(format!(
            "structural completeness: slot {missing:?} is empty"
        )));
    }
    if state.running_total_cost > spec.budget {
        return Ok(ValidationVerdict::reject(format!(
            "total cost: {} exceeds budget {}",
            state.running_total_cost, spec.budget
        )));
    }
    let missing: Vec<&String> = spec.required_cuisines.difference(&state.collected_cuisines).collect();
    if !missing.is_empty() {
        return Ok(ValidationVerdict::reject(format!("cuisine coverage: missing {missing:?}")));
    }
    Ok(ValidationVerdict::new(
        1,
        format!(
            "complete itinerary costing {} of {} with required cuisines covered",
            state.running_total_cost, spec.budget
        ),
    ))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransportEntry {
    pub option_id: String,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DayEntry {
    pub day: usize,
    pub city: String,
    pub transport: Option<TransportEntry>,
    pub breakfast: String,
    pub lunch: String,
    pub dinner: String,
    pub attractions: Vec<String>,
    pub accommodation: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Itinerary {
    pub trip_id: String,
    pub origin: String,
    pub travelers: u32,
    pub total_cost: Money,
    pub days: Vec<DayEntry>,
    pub return_transport: TransportEntry,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RenderError {
    #[error("cannot render: slot {0:?} is empty")]
    Incomplete(Slot),
    #[error("cannot render: option `{0}` is not in the sandbox")]
    UnknownOption(String),
}

pub fn render_itinerary(state: &ItineraryState, spec: &TripSpec, sandbox: &Sandbox) -> Result<Itinerary, RenderError> {
    let name = |slot: Slot| -> Result<(String, String), RenderError> {
        let sel = state.filled(&slot).ok_or_else(|| RenderError::Incomplete(slot.clone()))?;
        let option = resolve(sandbox, &slot, &sel.option_id)
            .ok_or_else(|| RenderError::UnknownOption(sel.option_id.clone()))?;
        let label = match option {
            OptionRef::Transport(t) => format!("{}, from {} to {}", t.mode.label(), t.from, t.to),
            other => other.label(),
        };
        Ok((sel.option_id.clone(), label))
    };
    let transport = |slot: Slot| -> Result<TransportEntry, RenderError> {
        let (option_id, description) = name(slot)?;
        Ok(TransportEntry { option_id, description })
    };
    let day_cities = spec.day_cities();
    let mut days = Vec::with_capacity(spec.days);
    for day in 1..=spec.days {
        let ci = day_cities[day - 1];
        let arriving = day == 1 || day_cities[day - 2] != ci;
        let leg = match (day, arriving) {
            (1, _) => Some(transport(Slot::Outbound)?),
            (_, true) => Some(transport(Slot::InterCity { leg: ci - 1 })?),
            _ => None,
        };
        let meals: Vec<String> = (0..MEALS.len())
            .map(|meal| name(Slot::Meal { day, meal }).map(|n| n.1))
            .collect::<Result<_, _>>()?;
        days.push(DayEntry {
            day,
            city: spec.city_sequence[ci].clone(),
            transport: leg,
            breakfast: meals[0].clone(),
            lunch: meals[1].clone(),
            dinner: meals[2].clone(),
            attractions: vec![name(Slot::Attraction { day })?.1],
            accommodation: name(Slot::Accommodation { city_index: ci })?.1,
        });
    }
    Ok(Itinerary {
        trip_id: spec.id.clone(),
        origin: spec.origin.clone(),
        travelers: spec.travelers,
        total_cost: state.running_total_cost,
        days,
        return_transport: transport(Slot::Return)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate_sandbox, SizeParams};
    use crate::plan::{plan_steps, PlanStep};
    use crate::select::{select_and_certify, CheapestChooser};

    fn completed() -> (Sandbox, TripSpec, ItineraryState) {
        let g = generate_sandbox(11, &SizeParams { specs: 1, ..SizeParams::default() }).unwrap();
        let spec = g.specs.into_iter().find(|s| s.city_sequence.len() == 1).unwrap_or_else(|| {
            panic!("seed 11 yields a one-city spec")
        });
        let mut state = ItineraryState::default();
        for step in plan_steps(&spec).into_iter().filter(PlanStep::is_selection) {
            let p = step.predicate(&spec);
            let (_, v, next) = select_and_certify(&state, &spec, &p, &g.sandbox, &CheapestChooser).unwrap();
            assert_eq!(v.k, 1, "{}", p.id);
            state = next;
        }
        (g.sandbox, spec, state)
    }

    #[test]
    fn budget_boundary_is_inclusive() {
        let (sb, mut spec, state) = completed();
        spec.budget = state.running_total_cost;
        assert_eq!(validate_budget_check(&state, &spec, &sb).unwrap().k, 1);
        spec.budget -= 1;
        let v = validate_budget_check(&state, &spec, &sb).unwrap();
        assert_eq!(v.k, 0);
        assert!(v.reason.starts_with("total cost"));
    }

    #[test]
    fn missing_attraction_names_completeness() {
        let (sb, spec, mut state) = completed();
        state.selections.retain(|s| !matches!(s.slot, Slot::Attraction { day: 2 }));
        state.running_total_cost = state.recompute_cost(&sb, &spec).unwrap();
        let v = validate_budget_check(&state, &spec, &sb).unwrap();
        assert_eq!(v.k, 0);
        assert!(v.reason.starts_with("structural completeness"));
        assert!(matches!(render_itinerary(&state, &spec, &sb), Err(RenderError::Incomplete(_))));
    }

    #[test]
    fn cost_mismatch_is_a_breach() {
        let (sb, spec, mut state) = completed();
        state.running_total_cost += 1;
        assert!(validate_budget_check(&state, &spec, &sb).is_err());
    }

    #[test]
    fn uncovered_cuisine_rejected() {
        let (sb, mut spec, state) = completed();
        spec.required_cuisines.insert("nonexistent".into());
        let v = validate_budget_check(&state, &spec, &sb).unwrap();
        assert!(v.reason.starts_with("cuisine coverage"));
    }

    #[test]
    fn render_shape_and_round_trip() {
        let (sb, spec, state) = completed();
        let it = render_itinerary(&state, &spec, &sb).unwrap();
        assert_eq!(it.days.len(), spec.days);
        assert!(it.days.iter().all(|d| !d.attractions.is_empty() && !d.dinner.is_empty()));
        let text = serde_json::to_string(&it).unwrap();
        let back: Itinerary = serde_json::from_str(&text).unwrap();
        assert_eq!(serde_json::to_string(&back).unwrap(), text);
    }
}
