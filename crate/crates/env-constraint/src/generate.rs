//! Seeded synthetic sandboxes and trip specs.
//!
//! Every emitted spec has passed the cheapest-assignment oracle: for each
//! transport-mode class the minimum-cost complete itinerary is computed slot by
//! slot, and the spec is kept only if its budget covers every feasible class
//! and the cheapest restaurants cover its required cuisines.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    effective_cost, AttractionOption, HotelOption, LocalConstraints, Money, OptionRef, RestaurantOption,
    RoomRequirement, RoomType, Sandbox, Slot, TransportMode, TransportOption, TripSpec,
};

const CITY_NAMES: [&str; 10] = [
    "Ashford", "Brightwater", "Cedar Falls", "Dunmore", "Elmstead", "Fairhaven", "Glenrock", "Harborview",
    "Ironbridge", "Juniper",
];
const ORIGIN_NAMES: [&str; 4] = ["Kingsport", "Lakeshore", "Millbrook", "Northgate"];
pub const CUISINES: [&str; 8] = [
    "American", "Chinese", "French", "Indian", "Italian", "Japanese", "Mediterranean", "Mexican",
];
pub const HOUSE_RULES: [&str; 5] = ["smoking", "parties", "children under 10", "visitors", "pets"];
const SHAPES: [(usize, usize); 3] = [(3, 1), (5, 2), (7, 3)];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SizeParams {
    pub cities: usize,
    pub origins: usize,
    /// Hotels, restaurants and attractions per city.
    pub options_per_table: usize,
    pub flights_per_route: usize,
    /// Split evenly between self-driving and taxi.
    pub ground_per_route: usize,
    pub specs: usize,
    pub attempts_per_spec: usize,
}

impl Default for SizeParams {
    fn default() -> Self {
        Self {
            cities: 6,
            origins: 3,
            options_per_table: 20,
            flights_per_route: 20,
            ground_per_route: 20,
            specs: 50,
            attempts_per_spec: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("size parameters admit no solvable spec: {0}")]
pub struct GenerationInfeasible(pub String);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeClass {
    SelfDriving,
    FlightOrTaxi,
}

impl ModeClass {
    fn admits(self, mode: TransportMode) -> bool {
        (mode == TransportMode::SelfDriving) == (self == ModeClass::SelfDriving)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Solvability {
    Solvable,
    Unsolvable { reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assessment {
    /// Minimum complete-itinerary cost per feasible mode class.
    pub class_costs: BTreeMap<ModeClass, Money>,
    /// Cuisines collected by the cheapest restaurant assignment.
    pub cheapest_cuisines: BTreeSet<String>,
    pub solvability: Solvability,
}

impl Assessment {
    pub fn min_cost(&self) -> Option<Money> {
        self.class_costs.values().copied().min()
    }

    pub fn max_cost(&self) -> Option<Money> {
        self.class_costs.values().copied().max()
    }

    pub fn is_solvable(&self) -> bool {
        self.solvability == Solvability::Solvable
    }
}

/// `count` cheapest costs among `costs`, ties by id, or `None` if too few.
fn cheapest_n<'a>(mut costs: Vec<(Money, &'a str)>, count: usize) -> Option<Vec<(Money, &'a str)>> {
    if costs.len() < count {
        return None;
    }
    costs.sort();
    costs.truncate(count);
    Some(costs)
}

/// Exhaustive per-slot minimum over the sandbox. With the mode class fixed
/// every slot is independent except that meals and attractions in one city
/// must be distinct, which the n-cheapest pick handles.
pub fn assess_spec(spec: &TripSpec, sandbox: &Sandbox) -> Assessment {
    let lc = &spec.local_constraints;
    let unsolvable = |reason: String, class_costs, cheapest_cuisines| Assessment {
        class_costs,
        cheapest_cuisines,
        solvability: Solvability::Unsolvable { reason },
    };
    let per_city = spec.days_per_city();
    let mut fixed: Money = 0;
    let mut cuisines = BTreeSet::new();
    for (ci, city) in spec.city_sequence.iter().enumerate() {
        let slot = Slot::Accommodation { city_index: ci };
        let hotel = sandbox
            .hotels
            .values()
            .filter(|h| &h.city == city)
            .filter(|h| lc.room_type.is_none_or(|r| r.admits(h.room_type)))
            .filter(|h| lc.house_rules.is_disjoint(&h.forbids))
            .map(|h| effective_cost(OptionRef::Hotel(h), &slot, spec))
            .min();
        let Some(hotel) = hotel else {
            return unsolvable(format!("no admissible hotel in {city}"), BTreeMap::new(), cuisines);
        };
        fixed += hotel;
        let meal_slot = Slot::Meal { day: 1, meal: 0 };
        let restaurants: Vec<(Money, &str)> = sandbox
            .restaurants
            .values()
            .filter(|r| &r.city == city)
            .map(|r| (effective_cost(OptionRef::Restaurant(r), &meal_slot, spec), r.id.as_str()))
            .collect();
        let Some(meals) = cheapest_n(restaurants, 3 * per_city[ci]) else {
            return unsolvable(format!("too few restaurants in {city}"), BTreeMap::new(), cuisines);
        };
        for (cost, id) in meals {
            fixed += cost;
            cuisines.extend(sandbox.restaurants[id].cuisines.iter().cloned());
        }
        let att_slot = Slot::Attraction { day: 1 };
        let attractions: Vec<(Money, &str)> = sandbox
            .attractions
            .values()
            .filter(|a| &a.city == city)
            .map(|a| (effective_cost(OptionRef::Attraction(a), &att_slot, spec), a.id.as_str()))
            .collect();
        let Some(atts) = cheapest_n(attractions, per_city[ci]) else {
            return unsolvable(format!("too few attractions in {city}"), BTreeMap::new(), cuisines);
        };
        fixed += atts.iter().map(|a| a.0).sum::<Money>();
    }
    let n = spec.city_sequence.len();
    let mut routes = vec![(Slot::Outbound, spec.origin.as_str(), spec.city_sequence[0].as_str())];
    for leg in 0..n - 1 {
        routes.push((
            Slot::InterCity { leg },
            spec.city_sequence[leg].as_str(),
            spec.city_sequence[leg + 1].as_str(),
        ));
    }
    routes.push((Slot::Return, spec.city_sequence[n - 1].as_str(), spec.origin.as_str()));
    let mut class_costs = BTreeMap::new();
    let mut dead_end = None;
    for class in [ModeClass::SelfDriving, ModeClass::FlightOrTaxi] {
        let mut total = Some(fixed);
        let mut first_leg = false;
        for (slot, from, to) in &routes {
            let best = sandbox
                .flights
                .values()
                .chain(sandbox.ground_transport.values())
                .filter(|t| t.from == *from && t.to == *to)
                .filter(|t| class.admits(t.mode) && !lc.forbidden_modes.contains(&t.mode))
                .map(|t| effective_cost(OptionRef::Transport(t), slot, spec))
                .min();
            if matches!(slot, Slot::Outbound) {
                first_leg = best.is_some();
            }
            total = total.zip(best).map(|(a, b)| a + b);
        }
        match total {
            Some(total) => {
                class_costs.insert(class, total);
            }
            // A class that can start the trip but not finish it would trap
            // a chooser that commits to it on the first leg.
            None if first_leg => dead_end = Some(class),
            None => {}
        }
    }
    if let Some(class) = dead_end {
        return unsolvable(format!("{class:?} transport starts the trip but cannot finish it"), class_costs, cuisines);
    }
    let Some(&max_cost) = class_costs.values().max() else {
        return unsolvable("no transport mode class covers every route".into(), class_costs, cuisines);
    };
    let min_cost = *class_costs.values().min().expect("non-empty");
    if spec.budget < min_cost {
        return unsolvable(
            format!("budget {} is below the cheapest feasible assignment {min_cost}", spec.budget),
            class_costs,
            cuisines,
        );
    }
    if spec.budget < max_cost {
        return unsolvable(
            format!(
                "budget {} covers only some mode classes (cheapest {min_cost}, dearest {max_cost})",
                spec.budget
            ),
            class_costs,
            cuisines,
        );
    }
    if !spec.required_cuisines.is_subset(&cuisines) {
        return unsolvable("cheapest restaurants miss a required cuisine".into(), class_costs, cuisines);
    }
    Assessment {
        class_costs,
        cheapest_cuisines: cuisines,
        solvability: Solvability::Solvable,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generated {
    pub seed: u64,
    pub sandbox: Sandbox,
    pub specs: Vec<TripSpec>,
    /// Candidate specs the oracle rejected, with the reason.
    pub excluded: Vec<(String, String)>,
}

fn city_names(params: &SizeParams) -> (Vec<String>, Vec<String>) {
    let name = |pool: &[&str], i: usize, prefix: &str| {
        pool.get(i).map_or_else(|| format!("{prefix} {}", i + 1), |s| s.to_string())
    };
    (
        (0..params.cities).map(|i| name(&CITY_NAMES, i, "City")).collect(),
        (0..params.origins).map(|i| name(&ORIGIN_NAMES, i, "Origin")).collect(),
    )
}

fn build_sandbox(rng: &mut ChaCha8Rng, params: &SizeParams, cities: &[String], origins: &[String]) -> Sandbox {
    let mut sb = Sandbox::default();
    let places: Vec<&String> = origins.iter().chain(cities).collect();
    let (mut f, mut g) = (0, 0);
    for from in &places {
        for to in &places {
            if from == to || (origins.contains(from) && origins.contains(to)) {
                continue;
            }
            for _ in 0..params.flights_per_route {
                f += 1;
                let id = format!("F{f:05}");
                sb.flights.insert(
                    id.clone(),
                    TransportOption {
                        id,
                        mode: TransportMode::Flight,
                        from: from.to_string(),
                        to: to.to_string(),
                        cost: rng.gen_range(40..=400) * 100,
                    },
                );
            }
            for i in 0..params.ground_per_route {
                g += 1;
                let id = format!("G{g:05}");
                let (mode, cost) = if i % 2 == 0 {
                    (TransportMode::SelfDriving, rng.gen_range(30..=200) * 100)
                } else {
                    (TransportMode::Taxi, rng.gen_range(40..=250) * 100)
                };
                sb.ground_transport.insert(
                    id.clone(),
                    TransportOption {
                        id,
                        mode,
                        from: from.to_string(),
                        to: to.to_string(),
                        cost,
                    },
                );
            }
        }
    }
    let rooms = [RoomType::EntireRoom, RoomType::PrivateRoom, RoomType::SharedRoom];
    let (mut h, mut r, mut a) = (0, 0, 0);
    for city in cities {
        for j in 0..params.options_per_table {
            h += 1;
            let id = format!("H{h:04}");
            let forbids = HOUSE_RULES.iter().filter(|_| rng.gen_bool(0.3)).map(|s| s.to_string()).collect();
            sb.hotels.insert(
                id.clone(),
                HotelOption {
                    id,
                    name: format!("{city} Lodge {}", j + 1),
                    city: city.clone(),
                    cost: rng.gen_range(50..=400) * 100,
                    room_type: *rooms.choose(rng).expect("non-empty"),
                    max_occupancy: rng.gen_range(1..=4),
                    forbids,
                },
            );
            r += 1;
            let id = format!("R{r:04}");
            let k = rng.gen_range(1..=2);
            let cuisines = CUISINES.choose_multiple(rng, k).map(|s| s.to_string()).collect();
            sb.restaurants.insert(
                id.clone(),
                RestaurantOption {
                    id,
                    name: format!("{city} Eatery {}", j + 1),
                    city: city.clone(),
                    cost: rng.gen_range(8..=60) * 100,
                    cuisines,
                },
            );
            a += 1;
            let id = format!("A{a:04}");
            sb.attractions.insert(
                id.clone(),
                AttractionOption {
                    id,
                    name: format!("{city} Sight {}", j + 1),
                    city: city.clone(),
                    cost: rng.gen_range(0..=30) * 100,
                },
            );
        }
    }
    sb
}

fn sample_constraints(rng: &mut ChaCha8Rng) -> LocalConstraints {
    let forbidden_modes = match rng.gen_range(0..10) {
        0 | 1 => [TransportMode::Flight].into(),
        2 | 3 => [TransportMode::SelfDriving].into(),
        _ => BTreeSet::new(),
    };
    let room_type = rng.gen_bool(0.3).then(|| {
        *[
            RoomRequirement::EntireRoom,
            RoomRequirement::PrivateRoom,
            RoomRequirement::SharedRoom,
            RoomRequirement::NotSharedRoom,
        ]
        .choose(rng)
        .expect("non-empty")
    });
    let house_rules = HOUSE_RULES.iter().filter(|_| rng.gen_bool(0.15)).map(|s| s.to_string()).collect();
    LocalConstraints {
        forbidden_modes,
        room_type,
        house_rules,
    }
}

/// Deterministic in `seed`. Spec `i` has shape 3d/1c, 5d/2c or 7d/3c by
/// `i mod 3`.
pub fn generate_sandbox(seed: u64, params: &SizeParams) -> Result<Generated, GenerationInfeasible> {
    if params.origins == 0 {
        return Err(GenerationInfeasible("no origin cities".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (cities, origins) = city_names(params);
    let sandbox = build_sandbox(&mut rng, params, &cities, &origins);
    let mut specs = Vec::new();
    let mut excluded = Vec::new();
    for i in 0..params.specs {
        let (days, n) = SHAPES[i % SHAPES.len()];
        if n > cities.len() {
            excluded.push((format!("trip-{seed}-{i:03}"), format!("needs {n} cities, sandbox has {}", cities.len())));
            continue;
        }
        for attempt in 0..params.attempts_per_spec {
            let id = format!("trip-{seed}-{i:03}");
            let mut spec = TripSpec {
                id: id.clone(),
                origin: origins.choose(&mut rng).expect("non-empty").clone(),
                city_sequence: cities.choose_multiple(&mut rng, n).cloned().collect(),
                days,
                travelers: rng.gen_range(1..=6),
                budget: 1,
                local_constraints: sample_constraints(&mut rng),
                required_cuisines: BTreeSet::new(),
            };
            let probe = assess_spec(&spec, &sandbox);
            let Some(max_cost) = probe.max_cost() else {
                excluded.push((format!("{id}#{attempt}"), format!("{:?}", probe.solvability)));
                continue;
            };
            // Some budgets land below the dearest class on purpose so the
            // oracle's exclusion path is exercised.
            let factor = rng.gen_range(85..=135);
            spec.budget = (max_cost * factor / 100 + 99) / 100 * 100;
            let pool: Vec<&String> = probe.cheapest_cuisines.iter().collect();
            let k = rng.gen_range(0..=2.min(pool.len()));
            spec.required_cuisines = pool.choose_multiple(&mut rng, k).map(|s| s.to_string()).collect();
            match assess_spec(&spec, &sandbox).solvability {
                Solvability::Solvable => {
                    specs.push(spec);
                    break;
                }
                Solvability::Unsolvable { reason } => excluded.push((format!("{id}#{attempt}"), reason)),
            }
        }
    }
    if specs.is_empty() && params.specs > 0 {
        return Err(GenerationInfeasible(
            excluded.last().map_or_else(|| "no candidates".into(), |e| e.1.clone()),
        ));
    }
    Ok(Generated {
        seed,
        sandbox,
        specs,
        excluded,
    })
}
