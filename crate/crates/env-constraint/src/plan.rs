//! Deterministic predicate plan derived from the trip shape.

use sdp_core::{Predicate, PlanError, PlanTail, Provenance};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::model::{Slot, TripSpec};

/// What a plan predicate asks for. Stored in the predicate's `attrs`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "step", rename_all = "snake_case")]
pub enum PlanStep {
    Outbound,
    Accommodation { city_index: usize },
    InterCity { leg: usize },
    DayMeals { day: usize },
    DayAttraction { day: usize },
    Return,
    BudgetCheck,
    Render,
}

impl PlanStep {
    pub fn kind(&self) -> &'static str {
        match self {
            PlanStep::Outbound => "outbound_transport",
            PlanStep::Accommodation { .. } => "accommodation",
            PlanStep::InterCity { .. } => "intercity_transport",
            PlanStep::DayMeals { .. } => "day_meals",
            PlanStep::DayAttraction { .. } => "day_attraction",
            PlanStep::Return => "return_transport",
            PlanStep::BudgetCheck => "budget_check",
            PlanStep::Render => "render",
        }
    }

    pub fn is_selection(&self) -> bool {
        !matches!(self, PlanStep::BudgetCheck | PlanStep::Render)
    }

    /// Slots filled by this step, in decision order.
    pub fn slots(&self) -> Vec<Slot> {
        match *self {
            PlanStep::Outbound => vec![Slot::Outbound],
            PlanStep::Accommodation { city_index } => vec![Slot::Accommodation { city_index }],
            PlanStep::InterCity { leg } => vec![Slot::InterCity { leg }],
            PlanStep::DayMeals { day } => (0..3).map(|meal| Slot::Meal { day, meal }).collect(),
            PlanStep::DayAttraction { day } => vec![Slot::Attraction { day }],
            PlanStep::Return => vec![Slot::Return],
            PlanStep::BudgetCheck | PlanStep::Render => Vec::new(),
        }
    }

    pub fn of(predicate: &Predicate) -> Option<PlanStep> {
        serde_json::from_value(predicate.attrs.clone()).ok()
    }

    pub fn id(&self) -> String {
        match self {
            PlanStep::Outbound => "outbound".into(),
            PlanStep::Accommodation { city_index } => format!("stay_{}", city_index + 1),
            PlanStep::InterCity { leg } => format!("transit_{}", leg + 1),
            PlanStep::DayMeals { day } => format!("meals_day{day}"),
            PlanStep::DayAttraction { day } => format!("attraction_day{day}"),
            PlanStep::Return => "return".into(),
            PlanStep::BudgetCheck => "budget_check".into(),
            PlanStep::Render => "render".into(),
        }
    }

    fn text(&self, spec: &TripSpec) -> String {
        let cities = &spec.city_sequence;
        match *self {
            PlanStep::Outbound => format!("transport booked from {} to {}", spec.origin, cities[0]),
            PlanStep::Accommodation { city_index } => {
                format!("accommodation booked in {}", cities[city_index])
            }
            PlanStep::InterCity { leg } => {
                format!("transport booked from {} to {}", cities[leg], cities[leg + 1])
            }
            PlanStep::DayMeals { day } => {
                format!("breakfast, lunch and dinner chosen for day {day} in {}", spec.city_of_day(day))
            }
            PlanStep::DayAttraction { day } => {
                format!("attraction chosen for day {day} in {}", spec.city_of_day(day))
            }
            PlanStep::Return => format!(
                "transport booked from {} back to {}",
                cities[cities.len() - 1],
                spec.origin
            ),
            PlanStep::BudgetCheck => {
                "itinerary complete, within budget and covering required cuisines".into()
            }
            PlanStep::Render => "itinerary rendered".into(),
        }
    }

    pub fn predicate(&self, spec: &TripSpec) -> Predicate {
        let attrs = serde_json::to_value(self).unwrap_or(Value::Null);
        let mut p = Predicate::new(self.id(), self.text(spec), self.kind());
        p.is_goal = *self == PlanStep::Render;
        p.with_attrs(attrs)
    }
}

/// Steps in plan order: outbound, one stay per city, one transit per
/// consecutive pair, then meals and attraction for each day, return, budget
/// check, render.
pub fn plan_steps(spec: &TripSpec) -> Vec<PlanStep> {
    let n = spec.city_sequence.len();
    let mut steps = vec![PlanStep::Outbound];
    steps.extend((0..n).map(|city_index| PlanStep::Accommodation { city_index }));
    steps.extend((0..n.saturating_sub(1)).map(|leg| PlanStep::InterCity { leg }));
    for day in 1..=spec.days {
        steps.push(PlanStep::DayMeals { day });
        steps.push(PlanStep::DayAttraction { day });
    }
    steps.extend([PlanStep::Return, PlanStep::BudgetCheck, PlanStep::Render]);
    steps
}

pub fn build_constraint_plan(spec: &TripSpec) -> Result<PlanTail, PlanError> {
    let preds = plan_steps(spec).iter().map(|s| s.predicate(spec)).collect();
    PlanTail::new(preds, Provenance::Initial, &[])
}
