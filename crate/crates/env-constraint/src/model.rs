//! Trip specifications, sandbox tables and the declared cost arithmetic.
//!
//! Money is integer minor units throughout.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Money = i64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransportMode {
    Flight,
    SelfDriving,
    Taxi,
}

impl TransportMode {
    pub fn label(self) -> &'static str {
        match self {
            TransportMode::Flight => "flight",
            TransportMode::SelfDriving => "self-driving",
            TransportMode::Taxi => "taxi",
        }
    }

    /// Self-driving cannot share a trip with flights or taxis.
    pub fn conflicts_with(self, other: TransportMode) -> bool {
        (self == TransportMode::SelfDriving) != (other == TransportMode::SelfDriving)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoomType {
    EntireRoom,
    PrivateRoom,
    SharedRoom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoomRequirement {
    EntireRoom,
    PrivateRoom,
    SharedRoom,
    NotSharedRoom,
}

impl RoomRequirement {
    pub fn admits(self, room: RoomType) -> bool {
        match self {
            RoomRequirement::EntireRoom => room == RoomType::EntireRoom,
            RoomRequirement::PrivateRoom => room == RoomType::PrivateRoom,
            RoomRequirement::SharedRoom => room == RoomType::SharedRoom,
            RoomRequirement::NotSharedRoom => room != RoomType::SharedRoom,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalConstraints {
    #[serde(default)]
    pub forbidden_modes: BTreeSet<TransportMode>,
    #[serde(default)]
    pub room_type: Option<RoomRequirement>,
    /// Activities the party needs allowed, e.g. `pets`; a hotel forbidding any
    /// of them is excluded.
    #[serde(default)]
    pub house_rules: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TripSpec {
    pub id: String,
    pub origin: String,
    pub city_sequence: Vec<String>,
    pub days: usize,
    pub travelers: u32,
    pub budget: Money,
    #[serde(default)]
    pub local_constraints: LocalConstraints,
    #[serde(default)]
    pub required_cuisines: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpecError {
    #[error("trip must visit at least one city")]
    NoCities,
    #[error("{days} days cannot cover {cities} cities")]
    TooFewDays { days: usize, cities: usize },
    #[error("travelers must be positive")]
    NoTravelers,
    #[error("budget must be positive")]
    NonPositiveBudget,
}

impl TripSpec {
    pub fn check(&self) -> Result<(), SpecError> {
        if self.city_sequence.is_empty() {
            return Err(SpecError::NoCities);
        }
        if self.days < self.city_sequence.len() {
            return Err(SpecError::TooFewDays {
                days: self.days,
                cities: self.city_sequence.len(),
            });
        }
        if self.travelers == 0 {
            return Err(SpecError::NoTravelers);
        }
        if self.budget <= 0 {
            return Err(SpecError::NonPositiveBudget);
        }
        Ok(())
    }

    /// Days per city: an even split with the remainder going to earlier cities.
    pub fn days_per_city(&self) -> Vec<usize> {
        let n = self.city_sequence.len();
        let (base, extra) = (self.days / n, self.days % n);
        (0..n).map(|i| base + usize::from(i < extra)).collect()
    }

    /// City index for each 1-based day, as a 0-based vector.
    pub fn day_cities(&self) -> Vec<usize> {
        self.days_per_city()
            .iter()
            .enumerate()
            .flat_map(|(i, &d)| std::iter::repeat(i).take(d))
            .collect()
    }

    pub fn city_of_day(&self, day: usize) -> &str {
        &self.city_sequence[self.day_cities()[day - 1]]
    }

    /// Nights booked in a city equal the days spent there.
    pub fn nights_in(&self, city_index: usize) -> usize {
        self.days_per_city()[city_index]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransportOption {
    pub id: String,
    pub mode: TransportMode,
    pub from: String,
    pub to: String,
    /// Per person for flights, per vehicle otherwise.
    pub cost: Money,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HotelOption {
    pub id: String,
    pub name: String,
    pub city: String,
    /// Per room per night.
    pub cost: Money,
    pub room_type: RoomType,
    pub max_occupancy: u32,
    #[serde(default)]
    pub forbids: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RestaurantOption {
    pub id: String,
    pub name: String,
    pub city: String,
    /// Per person.
    pub cost: Money,
    pub cuisines: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttractionOption {
    pub id: String,
    pub name: String,
    pub city: String,
    /// Per person.
    pub cost: Money,
}

/// Reference data. Each table is keyed by option id.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sandbox {
    pub flights: BTreeMap<String, TransportOption>,
    pub ground_transport: BTreeMap<String, TransportOption>,
    pub hotels: BTreeMap<String, HotelOption>,
    pub restaurants: BTreeMap<String, RestaurantOption>,
    pub attractions: BTreeMap<String, AttractionOption>,
}

impl Sandbox {
    pub fn transport(&self, id: &str) -> Option<&TransportOption> {
        self.flights.get(id).or_else(|| self.ground_transport.get(id))
    }
}

/// Which slot of the itinerary a selection fills.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "slot", rename_all = "snake_case")]
pub enum Slot {
    Outbound,
    Accommodation { city_index: usize },
    InterCity { leg: usize },
    Meal { day: usize, meal: usize },
    Attraction { day: usize },
    Return,
}

pub const MEALS: [&str; 3] = ["breakfast", "lunch", "dinner"];

/// Option reference resolved against the sandbox.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptionRef<'a> {
    Transport(&'a TransportOption),
    Hotel(&'a HotelOption),
    Restaurant(&'a RestaurantOption),
    Attraction(&'a AttractionOption),
}

impl OptionRef<'_> {
    pub fn id(&self) -> &str {
        match self {
            OptionRef::Transport(o) => &o.id,
            OptionRef::Hotel(o) => &o.id,
            OptionRef::Restaurant(o) => &o.id,
            OptionRef::Attraction(o) => &o.id,
        }
    }

    pub fn label(&self) -> String {
        match self {
            OptionRef::Transport(o) => format!("{} {} -> {}", o.mode.label(), o.from, o.to),
            OptionRef::Hotel(o) => o.name.clone(),
            OptionRef::Restaurant(o) => o.name.clone(),
            OptionRef::Attraction(o) => o.name.clone(),
        }
    }
}

fn div_ceil(a: u32, b: u32) -> i64 {
    i64::from(a.div_ceil(b.max(1)))
}

/// Cost an option adds to the trip when it fills `slot`.
///
/// Flights and meals and attractions are per person, self-driving is per car
/// of five, taxis per car of four, hotels per room per night.
pub fn effective_cost(option: OptionRef<'_>, slot: &Slot, spec: &TripSpec) -> Money {
    let t = spec.travelers;
    match option {
        OptionRef::Transport(o) => match o.mode {
            TransportMode::Flight => o.cost * i64::from(t),
            TransportMode::SelfDriving => o.cost * div_ceil(t, 5),
            TransportMode::Taxi => o.cost * div_ceil(t, 4),
        },
        OptionRef::Hotel(o) => {
            let nights = match slot {
                Slot::Accommodation { city_index } => spec.nights_in(*city_index) as i64,
                _ => 0,
            };
            o.cost * nights * div_ceil(t, o.max_occupancy)
        }
        OptionRef::Restaurant(o) => o.cost * i64::from(t),
        OptionRef::Attraction(o) => o.cost * i64::from(t),
    }
}
