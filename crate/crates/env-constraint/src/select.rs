//! Typed selections: choosing among filtered options and checking the choice.

use sdp_core::{Action, AttemptRecord, OperatorError, Predicate, ValidationVerdict};
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::filter::{admissible, filter_slot, Candidate, EmptyOptionSet, FilterError};
use crate::model::{Money, Sandbox, Slot, TripSpec};
use crate::plan::PlanStep;
use crate::state::{resolve, ItineraryState};

/// Picks an index into a non-empty, cheapest-first option list.
pub trait Chooser {
    fn choose(
        &self,
        predicate: &Predicate,
        slot: &Slot,
        options: &[Candidate],
        failed: &[AttemptRecord],
    ) -> Result<usize, OperatorError>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CheapestChooser;

impl Chooser for CheapestChooser {
    fn choose(&self, _: &Predicate, _: &Slot, _: &[Candidate], _: &[AttemptRecord]) -> Result<usize, OperatorError> {
        Ok(0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pick {
    pub slot: Slot,
    pub option_id: String,
    pub cost: Money,
}

/// Action payload for the constraint environment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TripAction {
    Select { picks: Vec<Pick> },
    /// Filtering emptied out; `picks` holds slots decided before that.
    Infeasible { picks: Vec<Pick>, empty: EmptyOptionSet },
    InvalidChoice { slot: Slot, index: usize, available: usize },
    CheckBudget,
    Render,
}

impl TripAction {
    pub fn to_action(&self) -> Result<Action, OperatorError> {
        let rendered = match self {
            TripAction::Select { picks } => {
                let parts: Vec<String> = picks.iter().map(|p| format!("{} ({})", p.option_id, p.cost)).collect();
                format!("select {}", parts.join(", "))
            }
            TripAction::Infeasible { empty, .. } => {
                format!("no feasible option: emptied at {:?}", empty.stage)
            }
            TripAction::InvalidChoice { index, available, .. } => {
                format!("invalid choice {index} of {available} options")
            }
            TripAction::CheckBudget => "check budget".into(),
            TripAction::Render => "render itinerary".into(),
        };
        let payload = serde_json::to_value(self).map_err(|e| OperatorError::adapter(e.to_string()))?;
        Action::new(payload, rendered)
    }

    pub fn from_action(action: &Action) -> Result<Self, OperatorError> {
        serde_json::from_value(action.payload.clone())
            .map_err(|e| OperatorError::adapter(format!("not a trip action: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SelectError {
    #[error(transparent)]
    Filter(FilterError),
    #[error("chooser picked index {index} of {len} options")]
    ChoiceOutOfRange { index: usize, len: usize },
    #[error("chooser failed: {0}")]
    Chooser(OperatorError),
}

/// Decides every unfilled slot of a selection predicate in order, refiltering
/// after each pick against a scratch copy of the state.
pub fn realize_selection(
    state: &ItineraryState,
    spec: &TripSpec,
    predicate: &Predicate,
    sandbox: &Sandbox,
    chooser: &dyn Chooser,
    failed: &[AttemptRecord],
) -> Result<TripAction, SelectError> {
    let step = PlanStep::of(predicate)
        .filter(PlanStep::is_selection)
        .ok_or_else(|| SelectError::Filter(FilterError::NotSelection(predicate.id.0.clone())))?;
    let slots: Vec<Slot> = step.slots().into_iter().filter(|s| state.filled(s).is_none()).collect();
    if slots.is_empty() {
        return Err(SelectError::Filter(FilterError::AlreadyFilled(predicate.id.0.clone())));
    }
    let mut scratch = state.clone();
    let mut picks = Vec::new();
    for slot in slots {
        let outcome = match filter_slot(&scratch, spec, &slot, sandbox) {
            Ok(o) => o,
            Err(empty) => return Ok(TripAction::Infeasible { picks, empty }),
        };
        let index = chooser
            .choose(predicate, &slot, &outcome.options, failed)
            .map_err(SelectError::Chooser)?;
        let Some(chosen) = outcome.options.get(index) else {
            return Err(SelectError::ChoiceOutOfRange {
                index,
                len: outcome.options.len(),
            });
        };
        // Filtered ids always resolve.
        scratch
            .apply_id(slot.clone(), &chosen.id, sandbox, spec)
            .expect("filtered option resolves");
        picks.push(Pick {
            slot,
            option_id: chosen.id.clone(),
            cost: chosen.cost,
        });
    }
    Ok(TripAction::Select { picks })
}

/// Checks a selection against the state it was made from. On success returns
/// the state with every pick applied.
pub fn check_selection(
    state: &ItineraryState,
    spec: &TripSpec,
    predicate: &Predicate,
    sandbox: &Sandbox,
    picks: &[Pick],
) -> Result<ItineraryState, String> {
    let step = PlanStep::of(predicate)
        .filter(PlanStep::is_selection)
        .ok_or_else(|| format!("{} is not a selection predicate", predicate.id))?;
    let expected: Vec<Slot> = step.slots().into_iter().filter(|s| state.filled(s).is_none()).collect();
    let got: Vec<Slot> = picks.iter().map(|p| p.slot.clone()).collect();
    if got != expected {
        return Err(format!("selection covers {got:?}, predicate needs {expected:?}"));
    }
    let mut next = state.clone();
    for p in picks {
        let option = resolve(sandbox, &p.slot, &p.option_id)
            .ok_or_else(|| format!("{} is not in the sandbox", p.option_id))?;
        admissible(option, &p.slot, &next, spec)
            .map_err(|stage| format!("{} violates the {stage:?} constraint", p.option_id))?;
        next.apply(p.slot.clone(), option, spec).map_err(|e| e.to_string())?;
    }
    Ok(next)
}

pub fn validate_selection(
    state: &ItineraryState,
    spec: &TripSpec,
    predicate: &Predicate,
    sandbox: &Sandbox,
    action: &TripAction,
) -> ValidationVerdict {
    match action {
        TripAction::Select { picks } => match check_selection(state, spec, predicate, sandbox, picks) {
            Ok(_) => ValidationVerdict::new(1, format!("{} satisfied by a valid selection", predicate.id)),
            Err(why) => ValidationVerdict::reject(why),
        },
        TripAction::Infeasible { empty, .. } => ValidationVerdict::reject(format!(
            "no feasible option for {:?}: the {:?} filter eliminated all candidates",
            empty.slot, empty.stage
        ))
        .with_detail(json!({ "empty_option_set": empty })),
        TripAction::InvalidChoice { index, available, .. } => {
            ValidationVerdict::reject(format!("choice {index} is outside the {available} options shown"))
        }
        TripAction::CheckBudget | TripAction::Render => {
            ValidationVerdict::reject(format!("{} needs a selection", predicate.id))
        }
    }
}

/// Realize, validate and apply in one call. The returned state is unchanged
/// when the verdict is a rejection.
pub fn select_and_certify(
    state: &ItineraryState,
    spec: &TripSpec,
    predicate: &Predicate,
    sandbox: &Sandbox,
    chooser: &dyn Chooser,
) -> Result<(Action, ValidationVerdict, ItineraryState), SelectError> {
    let trip_action = realize_selection(state, spec, predicate, sandbox, chooser, &[])?;
    let verdict = validate_selection(state, spec, predicate, sandbox, &trip_action);
    let next = match &trip_action {
        TripAction::Select { picks } if verdict.is_success() => {
            check_selection(state, spec, predicate, sandbox, picks).expect("validated selection applies")
        }
        _ => state.clone(),
    };
    let action = trip_action.to_action().map_err(SelectError::Chooser)?;
    Ok((action, verdict, next))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::FilterStage;
    use crate::model::{LocalConstraints, RestaurantOption};

    struct Fixed(usize);

    impl Chooser for Fixed {
        fn choose(&self, _: &Predicate, _: &Slot, _: &[Candidate], _: &[AttemptRecord]) -> Result<usize, OperatorError> {
            Ok(self.0)
        }
    }

    /// Four restaurants at 10, 20, 30, 40 per person; one traveler.
    fn fixture(budget: Money) -> (Sandbox, TripSpec, Predicate) {
        let mut sb = Sandbox::default();
        for (i, cost) in [10, 20, 30, 40].into_iter().enumerate() {
            let id = format!("r{i}");
            sb.restaurants.insert(
                id.clone(),
                RestaurantOption {
                    id,
                    name: format!("Place {i}"),
                    city: "c".into(),
                    cost,
                    cuisines: [format!("cuisine{i}")].into(),
                },
            );
        }
        let spec = TripSpec {
            id: "t".into(),
            origin: "o".into(),
            city_sequence: vec!["c".into()],
            days: 1,
            travelers: 1,
            budget,
            local_constraints: LocalConstraints::default(),
            required_cuisines: Default::default(),
        };
        let pred = PlanStep::DayMeals { day: 1 }.predicate(&spec);
        (sb, spec, pred)
    }

    #[test]
    fn meals_pick_three_distinct_cheapest() {
        let (sb, spec, pred) = fixture(1000);
        let (_, v, next) = select_and_certify(&ItineraryState::default(), &spec, &pred, &sb, &CheapestChooser).unwrap();
        assert_eq!(v.k, 1);
        let ids: Vec<_> = next.selections.iter().map(|s| s.option_id.as_str()).collect();
        assert_eq!(ids, ["r0", "r1", "r2"]);
        assert_eq!(next.running_total_cost, 60);
    }

    #[test]
    fn budget_for_two_slots_empties_third() {
        // 10 + 20 = 30 spent, the cheapest remaining costs 30 and 30 + 30 > 50.
        let (sb, spec, pred) = fixture(50);
        let state = ItineraryState::default();
        let action = realize_selection(&state, &spec, &pred, &sb, &CheapestChooser, &[]).unwrap();
        let TripAction::Infeasible { picks, empty } = &action else {
            panic!("expected infeasible, got {action:?}");
        };
        assert_eq!(picks.len(), 2);
        assert_eq!(empty.slot, Slot::Meal { day: 1, meal: 2 });
        assert_eq!(empty.stage, FilterStage::Affordability);
        let v = validate_selection(&state, &spec, &pred, &sb, &action);
        assert_eq!(v.k, 0);
        assert!(v.reason.contains("Affordability"));
    }

    #[test]
    fn any_in_range_choice_certifies() {
        for i in 0..2 {
            let (sb, spec, pred) = fixture(1000);
            let (_, v, _) = select_and_certify(&ItineraryState::default(), &spec, &pred, &sb, &Fixed(i)).unwrap();
            assert_eq!(v.k, 1, "index {i}");
        }
    }

    #[test]
    fn out_of_range_choice_is_an_error() {
        let (sb, spec, pred) = fixture(1000);
        let err = select_and_certify(&ItineraryState::default(), &spec, &pred, &sb, &Fixed(9)).unwrap_err();
        assert_eq!(err, SelectError::ChoiceOutOfRange { index: 9, len: 4 });
    }

    #[test]
    fn forged_selection_rejected() {
        let (sb, spec, pred) = fixture(1000);
        let picks = vec![
            Pick { slot: Slot::Meal { day: 1, meal: 0 }, option_id: "r0".into(), cost: 10 },
            Pick { slot: Slot::Meal { day: 1, meal: 1 }, option_id: "r0".into(), cost: 10 },
            Pick { slot: Slot::Meal { day: 1, meal: 2 }, option_id: "r1".into(), cost: 20 },
        ];
        let v = validate_selection(&ItineraryState::default(), &spec, &pred, &sb, &TripAction::Select { picks });
        assert_eq!(v.k, 0);
        assert!(v.reason.contains("Uniqueness"));
    }

    #[test]
    fn action_payload_round_trips() {
        let a = TripAction::Select {
            picks: vec![Pick { slot: Slot::Outbound, option_id: "f1".into(), cost: 5 }],
        };
        assert_eq!(TripAction::from_action(&a.to_action().unwrap()).unwrap(), a);
    }
}
