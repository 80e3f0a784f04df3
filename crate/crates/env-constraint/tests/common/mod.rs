//! Brute-force reference checks written without the crate's filter code.
#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use sdp_constraint::{
    check_selection, plan_steps, realize_selection, required_slots, Candidate, Chooser, ItineraryState, Money,
    PlanStep, RoomRequirement, RoomType, Sandbox, Slot, TransportMode, TripSpec,
};
use sdp_core::{AttemptRecord, OperatorError, Predicate};

/// Cost recomputed by hand from the declared arithmetic.
pub fn hand_cost(sandbox: &Sandbox, spec: &TripSpec, slot: &Slot, id: &str) -> Option<Money> {
    let t = spec.travelers as i64;
    let cars = |seats: i64| (t + seats - 1) / seats;
    if let Some(o) = sandbox.flights.get(id).or_else(|| sandbox.ground_transport.get(id)) {
        return Some(match o.mode {
            TransportMode::Flight => o.cost * t,
            TransportMode::SelfDriving => o.cost * cars(5),
            TransportMode::Taxi => o.cost * cars(4),
        });
    }
    if let Some(h) = sandbox.hotels.get(id) {
        let Slot::Accommodation { city_index } = slot else { return None };
        let n = spec.city_sequence.len();
        let nights = (spec.days / n + usize::from(*city_index < spec.days % n)) as i64;
        return Some(h.cost * nights * cars(h.max_occupancy as i64));
    }
    if let Some(r) = sandbox.restaurants.get(id) {
        return Some(r.cost * t);
    }
    sandbox.attractions.get(id).map(|a| a.cost * t)
}

fn city_for_day(spec: &TripSpec, day: usize) -> &str {
    let n = spec.city_sequence.len();
    let mut d = 0;
    for i in 0..n {
        d += spec.days / n + usize::from(i < spec.days % n);
        if day <= d {
            return &spec.city_sequence[i];
        }
    }
    unreachable!("day within trip")
}

fn room_ok(req: Option<RoomRequirement>, room: RoomType) -> bool {
    match req {
        None => true,
        Some(RoomRequirement::EntireRoom) => room == RoomType::EntireRoom,
        Some(RoomRequirement::PrivateRoom) => room == RoomType::PrivateRoom,
        Some(RoomRequirement::SharedRoom) => room == RoomType::SharedRoom,
        Some(RoomRequirement::NotSharedRoom) => room != RoomType::SharedRoom,
    }
}

/// Which of the five constraints an option satisfies, checked independently.
pub fn constraint_flags(sandbox: &Sandbox, spec: &TripSpec, state: &ItineraryState, slot: &Slot, id: &str) -> [bool; 5] {
    let lc = &spec.local_constraints;
    let afford = hand_cost(sandbox, spec, slot, id).is_some_and(|c| state.running_total_cost + c <= spec.budget);
    let cities = &spec.city_sequence;
    match slot {
        Slot::Outbound | Slot::InterCity { .. } | Slot::Return => {
            let Some(o) = sandbox.flights.get(id).or_else(|| sandbox.ground_transport.get(id)) else {
                return [false; 5];
            };
            let (from, to) = match slot {
                Slot::Outbound => (spec.origin.as_str(), cities[0].as_str()),
                Slot::InterCity { leg } => (cities[*leg].as_str(), cities[*leg + 1].as_str()),
                _ => (cities[cities.len() - 1].as_str(), spec.origin.as_str()),
            };
            let driving = o.mode == TransportMode::SelfDriving;
            let consistent = if driving {
                !state.modes_used.contains(&TransportMode::Flight) && !state.modes_used.contains(&TransportMode::Taxi)
            } else {
                !state.modes_used.contains(&TransportMode::SelfDriving)
            };
            [o.from == from && o.to == to, !lc.forbidden_modes.contains(&o.mode), consistent, true, afford]
        }
        Slot::Accommodation { city_index } => {
            let Some(h) = sandbox.hotels.get(id) else { return [false; 5] };
            let rules_ok = lc.house_rules.iter().all(|r| !h.forbids.contains(r));
            [h.city == cities[*city_index], room_ok(lc.room_type, h.room_type) && rules_ok, true, true, afford]
        }
        Slot::Meal { day, .. } => {
            let Some(r) = sandbox.restaurants.get(id) else { return [false; 5] };
            [r.city == city_for_day(spec, *day), true, true, !state.used_names.contains(&r.name), afford]
        }
        Slot::Attraction { day } => {
            let Some(a) = sandbox.attractions.get(id) else { return [false; 5] };
            [a.city == city_for_day(spec, *day), true, true, !state.used_names.contains(&a.name), afford]
        }
    }
}

fn all_ids(sandbox: &Sandbox) -> Vec<&String> {
    sandbox
        .flights
        .keys()
        .chain(sandbox.ground_transport.keys())
        .chain(sandbox.hotels.keys())
        .chain(sandbox.restaurants.keys())
        .chain(sandbox.attractions.keys())
        .collect()
}

/// Ids passing all five checks, cheapest first, ties by id, capped at 30.
pub fn brute_force_filter(sandbox: &Sandbox, spec: &TripSpec, state: &ItineraryState, slot: &Slot) -> Vec<String> {
    let mut ok: Vec<(Money, String)> = all_ids(sandbox)
        .into_iter()
        .filter(|id| constraint_flags(sandbox, spec, state, slot, id).iter().all(|&f| f))
        .map(|id| (hand_cost(sandbox, spec, slot, id).unwrap(), id.clone()))
        .collect();
    ok.sort();
    ok.into_iter().take(30).map(|(_, id)| id).collect()
}

/// Every violation in a finished itinerary, checked from scratch.
pub fn itinerary_violations(sandbox: &Sandbox, spec: &TripSpec, state: &ItineraryState) -> Vec<String> {
    let mut out = Vec::new();
    let mut replay = ItineraryState::default();
    let mut names = BTreeSet::new();
    let mut modes = BTreeSet::new();
    let mut total = 0;
    for sel in &state.selections {
        let flags = constraint_flags(sandbox, spec, &replay, &sel.slot, &sel.option_id);
        let labels = ["membership", "local", "mode", "uniqueness", "affordability"];
        for (f, l) in flags.iter().zip(labels) {
            if !f {
                out.push(format!("{} violates {l}", sel.option_id));
            }
        }
        let cost = hand_cost(sandbox, spec, &sel.slot, &sel.option_id).unwrap_or(0);
        total += cost;
        replay.running_total_cost = total;
        if let Some(r) = sandbox.restaurants.get(&sel.option_id) {
            names.insert(r.name.clone());
        }
        if let Some(a) = sandbox.attractions.get(&sel.option_id) {
            names.insert(a.name.clone());
        }
        if let Some(t) = sandbox.flights.get(&sel.option_id).or_else(|| sandbox.ground_transport.get(&sel.option_id)) {
            modes.insert(t.mode);
        }
        replay.used_names = names.clone();
        replay.modes_used = modes.clone();
    }
    if total != state.running_total_cost {
        out.push(format!("running total {} != recomputed {total}", state.running_total_cost));
    }
    if total > spec.budget {
        out.push(format!("total {total} over budget {}", spec.budget));
    }
    let expected = spec.city_sequence.len() * 2 + 1 + spec.days * 4;
    if state.selections.len() != expected {
        out.push(format!("{} selections, expected {expected}", state.selections.len()));
    }
    out
}

/// Picks a uniformly random in-range index.
pub struct RandomChooser(pub std::cell::RefCell<rand_chacha::ChaCha8Rng>);

impl Chooser for RandomChooser {
    fn choose(&self, _: &Predicate, _: &Slot, options: &[Candidate], _: &[AttemptRecord]) -> Result<usize, OperatorError> {
        Ok(self.0.borrow_mut().gen_range(0..options.len()))
    }
}

/// A (spec, state, slot) triple: a random certified prefix with random
/// perturbations to budget, used names and modes.
pub fn random_case<R: Rng>(rng: &mut R, sandbox: &Sandbox, specs: &[TripSpec]) -> (TripSpec, ItineraryState, Slot) {
    let mut spec = specs.choose(rng).unwrap().clone();
    if rng.gen_bool(0.3) {
        spec.budget = spec.budget * rng.gen_range(20..=100) / 100;
    }
    let chooser = RandomChooser(std::cell::RefCell::new(rand::SeedableRng::seed_from_u64(rng.gen())));
    let steps: Vec<PlanStep> = plan_steps(&spec).into_iter().filter(PlanStep::is_selection).collect();
    let prefix = rng.gen_range(0..=steps.len());
    let mut state = ItineraryState::default();
    for step in &steps[..prefix] {
        let p = step.predicate(&spec);
        match realize_selection(&state, &spec, &p, sandbox, &chooser, &[]) {
            Ok(sdp_constraint::TripAction::Select { picks }) => {
                state = check_selection(&state, &spec, &p, sandbox, &picks).unwrap();
            }
            _ => break,
        }
    }
    if rng.gen_bool(0.3) {
        let names: Vec<&String> = sandbox.restaurants.values().map(|r| &r.name).collect();
        for _ in 0..rng.gen_range(1..=10) {
            state.used_names.insert((*names.choose(rng).unwrap()).clone());
        }
    }
    if rng.gen_bool(0.2) {
        let modes = [TransportMode::Flight, TransportMode::SelfDriving, TransportMode::Taxi];
        state.modes_used.insert(*modes.choose(rng).unwrap());
    }
    if rng.gen_bool(0.2) {
        state.running_total_cost += rng.gen_range(0..=spec.budget.max(1));
    }
    let slot = required_slots(&spec).choose(rng).unwrap().clone();
    (spec, state, slot)
}
