//! Declarative world definitions: rooms, objects, milestones and rules.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::{Location, WorldState};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoomDef {
    pub name: String,
    #[serde(default)]
    pub description: String,
}

/// Where an object starts. Exactly one of `room` / `container` is set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Placement {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub room: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub container: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectDef {
    pub name: String,
    pub at: Placement,
    #[serde(default)]
    pub container: bool,
    /// Initial openness; only meaningful for containers.
    #[serde(default)]
    pub open: bool,
    #[serde(default)]
    pub portable: bool,
    #[serde(default)]
    pub activatable: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<String>,
}

/// A condition over world state, used by milestones, rules, the goal and
/// the deterministic validator's condition table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Condition {
    AgentIn { room: String },
    Visited { room: String },
    Holding { object: String },
    /// Directly inside the container.
    Inside { object: String, container: String },
    /// Somewhere in the room, possibly nested in containers, not carried.
    InRoom { object: String, room: String },
    IsOpen { object: String },
    IsActive { object: String },
    HasState { object: String, state: String },
    Focused { object: String },
    All { all: Vec<Condition> },
    Any { any: Vec<Condition> },
    Not { not: Box<Condition> },
}

impl Condition {
    pub fn holds(&self, state: &WorldState) -> bool {
        let obj = |name: &str| state.objects.get(name);
        match self {
            Condition::AgentIn { room } => state.agent_room == *room,
            Condition::Visited { room } => state.visited_rooms.contains(room),
            Condition::Holding { object } => obj(object).is_some_and(|o| o.location == Location::Inventory),
            Condition::Inside { object, container } => {
                obj(object).is_some_and(|o| o.location == Location::In(container.clone()))
            }
            Condition::InRoom { object, room } => state.room_of(object).is_some_and(|r| r == room),
            Condition::IsOpen { object } => obj(object).is_some_and(|o| o.open),
            Condition::IsActive { object } => obj(object).is_some_and(|o| o.active),
            Condition::HasState { object, state: s } => obj(object).is_some_and(|o| o.state.as_deref() == Some(s)),
            Condition::Focused { object } => state.focused.contains(object),
            Condition::All { all } => all.iter().all(|c| c.holds(state)),
            Condition::Any { any } => any.iter().any(|c| c.holds(state)),
            Condition::Not { not } => !not.holds(state),
        }
    }

    fn names(&self, rooms: &mut Vec<String>, objects: &mut Vec<String>) {
        match self {
            Condition::AgentIn { room } | Condition::Visited { room } => rooms.push(room.clone()),
            Condition::Holding { object }
            | Condition::IsOpen { object }
            | Condition::IsActive { object }
            | Condition::HasState { object, .. }
            | Condition::Focused { object } => objects.push(object.clone()),
            Condition::Inside { object, container } => objects.extend([object.clone(), container.clone()]),
            Condition::InRoom { object, room } => {
                objects.push(object.clone());
                rooms.push(room.clone());
            }
            Condition::All { all: cs } | Condition::Any { any: cs } => cs.iter().for_each(|c| c.names(rooms, objects)),
            Condition::Not { not } => not.names(rooms, objects),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Milestone {
    pub id: String,
    pub condition: Condition,
    pub delta: u32,
}

/// Fires after every accepted action while `when` holds and the object is
/// not already in state `becomes`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rule {
    pub when: Condition,
    pub object: String,
    pub becomes: String,
    #[serde(default)]
    pub message: String,
}

/// One entry of a world's bundled plan. `condition` is what the
/// deterministic validator checks; `kind` "exploration" enables
/// new-room credit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanEntry {
    pub id: String,
    pub text: String,
    #[serde(default = "default_kind")]
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub condition: Option<Condition>,
}

fn default_kind() -> String {
    "condition".into()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorldDef {
    pub name: String,
    #[serde(default)]
    pub task: String,
    pub start_room: String,
    pub rooms: Vec<RoomDef>,
    /// Room name to neighbours. Must be symmetric.
    pub adjacency: BTreeMap<String, Vec<String>>,
    pub objects: Vec<ObjectDef>,
    #[serde(default)]
    pub rules: Vec<Rule>,
    pub milestones: Vec<Milestone>,
    pub goal: Condition,
    #[serde(default)]
    pub plan: Vec<PlanEntry>,
}

#[derive(Debug, Error)]
pub enum WorldError {
    #[error("cannot read world file: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed world file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid world `{world}`: {reason}")]
    Invalid { world: String, reason: String },
}

impl WorldDef {
    pub fn from_json(text: &str) -> Result<Self, WorldError> {
        let w: WorldDef = serde_json::from_str(text)?;
        w.check()?;
        Ok(w)
    }

    pub fn load(path: &Path) -> Result<Self, WorldError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn room(&self, name: &str) -> Option<&RoomDef> {
        self.rooms.iter().find(|r| r.name == name)
    }

    pub fn object(&self, name: &str) -> Option<&ObjectDef> {
        self.objects.iter().find(|o| o.name == name)
    }

    pub fn neighbours(&self, room: &str) -> &[String] {
        self.adjacency.get(room).map_or(&[], Vec::as_slice)
    }

    /// Structural checks: known names, symmetric adjacency, deltas summing
    /// to 100, no containment cycles.
    pub fn check(&self) -> Result<(), WorldError> {
        let fail = |reason: String| Err(WorldError::Invalid { world: self.name.clone(), reason });
        let rooms: BTreeSet<&str> = self.rooms.iter().map(|r| r.name.as_str()).collect();
        if rooms.len() != self.rooms.len() {
            return fail("duplicate room name".into());
        }
        if !rooms.contains(self.start_room.as_str()) {
            return fail(format!("start room `{}` is not a room", self.start_room));
        }
        for (a, ns) in &self.adjacency {
            if !rooms.contains(a.as_str()) {
                return fail(format!("adjacency names unknown room `{a}`"));
            }
            for b in ns {
                if !rooms.contains(b.as_str()) {
                    return fail(format!("adjacency names unknown room `{b}`"));
                }
                if !self.neighbours(b).contains(a) {
                    return fail(format!("adjacency is not symmetric: {a} -> {b} without {b} -> {a}"));
                }
            }
        }
        let objects: BTreeMap<&str, &ObjectDef> = self.objects.iter().map(|o| (o.name.as_str(), o)).collect();
        if objects.len() != self.objects.len() {
            return fail("duplicate object name".into());
        }
        if let Some(clash) = objects.keys().find(|o| rooms.contains(*o)) {
            return fail(format!("`{clash}` names both a room and an object"));
        }
        for o in &self.objects {
            match (&o.at.room, &o.at.container) {
                (Some(r), None) if rooms.contains(r.as_str()) => {}
                (None, Some(c)) if objects.get(c.as_str()).is_some_and(|c| c.container) => {}
                _ => return fail(format!("object `{}` needs exactly one known room or container", o.name)),
            }
            // Walk up the containment chain; a cycle never reaches a room.
            let mut cur = o;
            for _ in 0..=self.objects.len() {
                match &cur.at.container {
                    Some(c) => cur = objects[c.as_str()],
                    None => break,
                }
            }
            if cur.at.container.is_some() {
                return fail(format!("object `{}` sits in a containment cycle", o.name));
            }
        }
        let total: u32 = self.milestones.iter().map(|m| m.delta).sum();
        if total != 100 {
            return fail(format!("milestone deltas sum to {total}, not 100"));
        }
        let mut cond_rooms = Vec::new();
        let mut cond_objects = Vec::new();
        let mut conditions: Vec<&Condition> = self.milestones.iter().map(|m| &m.condition).collect();
        conditions.push(&self.goal);
        conditions.extend(self.rules.iter().map(|r| &r.when));
        conditions.extend(self.plan.iter().filter_map(|p| p.condition.as_ref()));
        for c in conditions {
            c.names(&mut cond_rooms, &mut cond_objects);
        }
        cond_objects.extend(self.rules.iter().map(|r| r.object.clone()));
        if let Some(r) = cond_rooms.iter().find(|r| !rooms.contains(r.as_str())) {
            return fail(format!("condition names unknown room `{r}`"));
        }
        if let Some(o) = cond_objects.iter().find(|o| !objects.contains_key(o.as_str())) {
            return fail(format!("condition names unknown object `{o}`"));
        }
        let ids: BTreeSet<&str> = self.plan.iter().map(|p| p.id.as_str()).collect();
        if ids.len() != self.plan.len() {
            return fail("duplicate plan entry id".into());
        }
        Ok(())
    }
}

/// Rooms reachable from the start room, start first, then breadth-first.
pub fn grounding_rooms(world: &WorldDef) -> Vec<String> {
    let mut seen = BTreeSet::from([world.start_room.clone()]);
    let mut order = vec![world.start_room.clone()];
    let mut queue = VecDeque::from([world.start_room.clone()]);
    while let Some(room) = queue.pop_front() {
        for n in world.neighbours(&room) {
            if seen.insert(n.clone()) {
                order.push(n.clone());
                queue.push_back(n.clone());
            }
        }
    }
    order
}

pub const BOIL_WATER: &str = include_str!("../worlds/boil_water.json");
pub const GROW_PLANT: &str = include_str!("../worlds/grow_plant.json");

/// The two bundled example worlds.
pub fn bundled_worlds() -> Vec<WorldDef> {
    [BOIL_WATER, GROW_PLANT]
        .iter()
        .map(|t| WorldDef::from_json(t).expect("bundled world is valid"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear(n: usize) -> WorldDef {
        let rooms: Vec<RoomDef> = (0..n).map(|i| RoomDef { name: format!("r{i}"), description: String::new() }).collect();
        let mut adjacency = BTreeMap::new();
        for i in 0..n.saturating_sub(1) {
            adjacency.entry(format!("r{i}")).or_insert_with(Vec::new).push(format!("r{}", i + 1));
            adjacency.entry(format!("r{}", i + 1)).or_insert_with(Vec::new).push(format!("r{i}"));
        }
        WorldDef {
            name: "linear".into(),
            task: String::new(),
            start_room: "r0".into(),
            rooms,
            adjacency,
            objects: vec![],
            rules: vec![],
            milestones: vec![Milestone { id: "m".into(), condition: Condition::AgentIn { room: "r0".into() }, delta: 100 }],
            goal: Condition::AgentIn { room: "r0".into() },
            plan: vec![],
        }
    }

    #[test]
    fn grounding_linear_world_lists_every_room() {
        let w = linear(3);
        w.check().unwrap();
        assert_eq!(grounding_rooms(&w), ["r0", "r1", "r2"]);
    }

    #[test]
    fn grounding_skips_unreachable_room() {
        let mut w = linear(3);
        w.rooms.push(RoomDef { name: "island".into(), description: String::new() });
        w.check().unwrap();
        assert!(!grounding_rooms(&w).contains(&"island".to_string()));
    }

    #[test]
    fn grounding_without_adjacency_is_start_only() {
        let mut w = linear(3);
        w.adjacency.clear();
        assert_eq!(grounding_rooms(&w), ["r0"]);
    }

    #[test]
    fn asymmetric_adjacency_rejected() {
        let mut w = linear(3);
        w.adjacency.get_mut("r1").unwrap().retain(|r| r != "r0");
        assert!(matches!(w.check(), Err(WorldError::Invalid { .. })));
    }

    #[test]
    fn deltas_must_sum_to_100() {
        let mut w = linear(2);
        w.milestones[0].delta = 90;
        let err = w.check().unwrap_err().to_string();
        assert!(err.contains("sum to 90"), "{err}");
    }

    #[test]
    fn bundled_worlds_load() {
        let ws = bundled_worlds();
        assert_eq!(ws.len(), 2);
        assert!(ws.iter().all(|w| !w.plan.is_empty()));
    }
}
