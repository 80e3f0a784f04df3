//! Synthetic travel-itinerary environment.
//!
//! Plans are a fixed function of the trip shape, every option shown to a
//! chooser has already passed all five filters, and validators are plain
//! constraint checks over typed selections. The running cost always equals
//! the cost recomputed from the sandbox.

pub mod adapter;
pub mod check;
pub mod filter;
pub mod generate;
pub mod model;
pub mod plan;
pub mod select;
pub mod state;

pub use adapter::{
    run_trip, ConstraintEnvironment, ConstraintOperators, LlmChooser, TripContext, TripObservation, TripRunError,
};
pub use check::{render_itinerary, required_slots, validate_budget_check, DayEntry, Itinerary, RenderError};
pub use filter::{
    admissible, filter_options, filter_slot, Candidate, EmptyOptionSet, FilterError, FilterOutcome, FilterStage,
    StageCount, MAX_OPTIONS,
};
pub use generate::{assess_spec, generate_sandbox, Assessment, GenerationInfeasible, Generated, SizeParams, Solvability};
pub use model::*;
pub use plan::{build_constraint_plan, plan_steps, PlanStep};
pub use select::{
    check_selection, realize_selection, select_and_certify, validate_selection, CheapestChooser, Chooser, Pick,
    SelectError, TripAction,
};
pub use state::{resolve, CostInvariantBreach, ItineraryState, Selection, StateError};
