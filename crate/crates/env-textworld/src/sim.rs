//! World state, the verb grammar and the step function.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::world::WorldDef;

/// Fixed observation for any input that is not a currently valid action.
pub const REJECTION: &str = "No known action matches that input.";

/// Actions kept in the rolling history.
pub const HISTORY_LEN: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Location {
    Room(String),
    In(String),
    Inventory,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectState {
    pub location: Location,
    #[serde(default)]
    pub open: bool,
    #[serde(default)]
    pub active: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorldState {
    pub agent_room: String,
    pub objects: BTreeMap<String, ObjectState>,
    pub focused: BTreeSet<String>,
    pub score: u32,
    /// Only grows.
    pub visited_rooms: BTreeSet<String>,
    pub last_observation: String,
    pub done: bool,
    pub history: VecDeque<String>,
}

impl WorldState {
    pub fn initial(world: &WorldDef) -> Self {
        let objects = world
            .objects
            .iter()
            .map(|o| {
                let location = match (&o.at.room, &o.at.container) {
                    (Some(r), _) => Location::Room(r.clone()),
                    (None, Some(c)) => Location::In(c.clone()),
                    (None, None) => Location::Room(world.start_room.clone()),
                };
                let st = ObjectState { location, open: o.container && o.open, active: false, state: o.state.clone() };
                (o.name.clone(), st)
            })
            .collect();
        let mut s = Self {
            agent_room: world.start_room.clone(),
            objects,
            focused: BTreeSet::new(),
            score: 0,
            visited_rooms: BTreeSet::from([world.start_room.clone()]),
            last_observation: String::new(),
            done: false,
            history: VecDeque::new(),
        };
        s.score = compute_score(world, &s);
        s.done = world.goal.holds(&s) || s.score >= 100;
        s.last_observation = describe_room(world, &s);
        s
    }

    pub fn inventory(&self) -> Vec<&str> {
        self.objects
            .iter()
            .filter(|(_, o)| o.location == Location::Inventory)
            .map(|(n, _)| n.as_str())
            .collect()
    }

    /// The room an object is in, through any nesting; `None` when carried.
    pub fn room_of(&self, object: &str) -> Option<&str> {
        let mut cur = object;
        for _ in 0..=self.objects.len() {
            match &self.objects.get(cur)?.location {
                Location::Room(r) => return Some(r),
                Location::Inventory => return None,
                Location::In(c) => cur = c,
            }
        }
        None
    }

    /// Reachable by the agent: in the current room or carried, with every
    /// enclosing container open.
    pub fn accessible(&self, object: &str) -> bool {
        let mut cur = object;
        for _ in 0..=self.objects.len() {
            let Some(o) = self.objects.get(cur) else { return false };
            match &o.location {
                Location::Room(r) => return *r == self.agent_room,
                Location::Inventory => return true,
                Location::In(c) => {
                    if !self.objects.get(c).is_some_and(|c| c.open) {
                        return false;
                    }
                    cur = c;
                }
            }
        }
        false
    }

    /// True when `inner` is `outer` or nested anywhere inside it.
    fn within(&self, inner: &str, outer: &str) -> bool {
        let mut cur = inner;
        for _ in 0..=self.objects.len() {
            if cur == outer {
                return true;
            }
            match self.objects.get(cur).map(|o| &o.location) {
                Some(Location::In(c)) => cur = c,
                _ => return false,
            }
        }
        false
    }
}

pub fn compute_score(world: &WorldDef, state: &WorldState) -> u32 {
    world.milestones.iter().filter(|m| m.condition.holds(state)).map(|m| m.delta).sum()
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "verb", rename_all = "snake_case")]
pub enum Command {
    Look,
    Inventory,
    Go { room: String },
    Open { object: String },
    Take { object: String },
    Put { object: String, container: String },
    Activate { object: String },
    Deactivate { object: String },
    Focus { object: String },
}

impl Command {
    pub fn render(&self) -> String {
        match self {
            Command::Look => "look around".into(),
            Command::Inventory => "inventory".into(),
            Command::Go { room } => format!("go to {room}"),
            Command::Open { object } => format!("open {object}"),
            Command::Take { object } => format!("take {object}"),
            Command::Put { object, container } => format!("put {object} in {container}"),
            Command::Activate { object } => format!("activate {object}"),
            Command::Deactivate { object } => format!("deactivate {object}"),
            Command::Focus { object } => format!("focus on {object}"),
        }
    }

    /// The referenced names, as cached when the engine rejects the command.
    pub fn target(&self) -> Option<String> {
        match self {
            Command::Look | Command::Inventory => None,
            Command::Go { room } => Some(room.clone()),
            Command::Put { object, container } => Some(format!("{object} in {container}")),
            Command::Open { object }
            | Command::Take { object }
            | Command::Activate { object }
            | Command::Deactivate { object }
            | Command::Focus { object } => Some(object.clone()),
        }
    }
}

/// Lowercased tokens with articles and trailing punctuation removed.
fn tokens(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|t| t.trim_matches(|c: char| matches!(c, '.' | ',' | '!' | '?' | '"' | '\'')).to_lowercase())
        .filter(|t| !t.is_empty() && !matches!(t.as_str(), "the" | "a" | "an"))
        .collect()
}

/// Parses free text against the verb grammar. Names are the remaining
/// tokens joined by single spaces.
pub fn parse_command(text: &str) -> Option<Command> {
    let t = tokens(text);
    let words: Vec<&str> = t.iter().map(String::as_str).collect();
    let name = |ws: &[&str]| (!ws.is_empty()).then(|| ws.join(" "));
    let split_on = |ws: &[&str], seps: &[&str]| -> Option<(String, String)> {
        let i = ws.iter().position(|w| seps.contains(w))?;
        Some((name(&ws[..i])?, name(&ws[i + 1..])?))
    };
    match words.as_slice() {
        ["look"] | ["look", "around"] => Some(Command::Look),
        ["inventory"] | ["i"] => Some(Command::Inventory),
        ["go", "to", rest @ ..] | ["move", "to", rest @ ..] | ["go", rest @ ..] | ["enter", rest @ ..] => {
            name(rest).map(|room| Command::Go { room })
        }
        ["open", rest @ ..] => name(rest).map(|object| Command::Open { object }),
        ["pick", "up", rest @ ..] | ["take", rest @ ..] | ["get", rest @ ..] => name(rest).map(|object| Command::Take { object }),
        ["put", rest @ ..] => split_on(rest, &["in", "into", "on"]).map(|(object, container)| Command::Put { object, container }),
        ["move", rest @ ..] => split_on(rest, &["to"]).map(|(object, container)| Command::Put { object, container }),
        ["turn", "on", rest @ ..] | ["activate", rest @ ..] => name(rest).map(|object| Command::Activate { object }),
        ["turn", "off", rest @ ..] | ["deactivate", rest @ ..] => name(rest).map(|object| Command::Deactivate { object }),
        ["focus", "on", rest @ ..] => name(rest).map(|object| Command::Focus { object }),
        _ => None,
    }
}

/// Whether the command is in the current valid-action set.
pub fn is_valid(world: &WorldDef, state: &WorldState, cmd: &Command) -> bool {
    let def = |o: &str| world.object(o);
    let st = |o: &str| state.objects.get(o);
    match cmd {
        Command::Look | Command::Inventory => true,
        Command::Go { room } => world.neighbours(&state.agent_room).contains(room),
        Command::Open { object } => {
            def(object).is_some_and(|d| d.container) && state.accessible(object) && st(object).is_some_and(|s| !s.open)
        }
        Command::Take { object } => {
            def(object).is_some_and(|d| d.portable)
                && state.accessible(object)
                && st(object).is_some_and(|s| s.location != Location::Inventory)
        }
        Command::Put { object, container } => {
            st(object).is_some_and(|s| s.location == Location::Inventory)
                && def(container).is_some_and(|d| d.container)
                && st(container).is_some_and(|s| s.open)
                && state.accessible(container)
                && !state.within(container, object)
        }
        Command::Activate { object } => {
            def(object).is_some_and(|d| d.activatable) && state.accessible(object) && st(object).is_some_and(|s| !s.active)
        }
        Command::Deactivate { object } => {
            def(object).is_some_and(|d| d.activatable) && state.accessible(object) && st(object).is_some_and(|s| s.active)
        }
        Command::Focus { object } => state.accessible(object),
    }
}

/// Every currently valid command, in a fixed order.
pub fn valid_commands(world: &WorldDef, state: &WorldState) -> Vec<Command> {
    let mut out = vec![Command::Look, Command::Inventory];
    out.extend(world.neighbours(&state.agent_room).iter().map(|r| Command::Go { room: r.clone() }));
    for o in state.objects.keys() {
        let object = o.clone();
        out.push(Command::Open { object: object.clone() });
        out.push(Command::Take { object: object.clone() });
        out.push(Command::Activate { object: object.clone() });
        out.push(Command::Deactivate { object: object.clone() });
        out.push(Command::Focus { object: object.clone() });
        for c in state.objects.keys() {
            out.push(Command::Put { object: object.clone(), container: c.clone() });
        }
    }
    out.retain(|c| is_valid(world, state, c));
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StepSignal {
    pub done: bool,
    pub rejected: bool,
    pub score_delta: i64,
    pub entered_new_room: bool,
    /// Names referenced by a rejected input, or the whole input when it did
    /// not parse.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rejected_target: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub observation: String,
    pub state: WorldState,
    pub signal: StepSignal,
}

fn describe_object(state: &WorldState, name: &str, world: &WorldDef, depth: usize) -> String {
    let Some(o) = state.objects.get(name) else { return name.to_string() };
    let def = world.object(name);
    let mut notes = Vec::new();
    if let Some(s) = &o.state {
        notes.push(s.clone());
    }
    if def.is_some_and(|d| d.activatable) {
        notes.push(if o.active { "on" } else { "off" }.to_string());
    }
    if def.is_some_and(|d| d.container) {
        if !o.open {
            notes.push("closed".into());
        } else {
            let inner = contents(state, name);
            if inner.is_empty() || depth > 4 {
                notes.push("empty".into());
            } else {
                let parts: Vec<String> = inner.iter().map(|i| describe_object(state, i, world, depth + 1)).collect();
                notes.push(format!("containing {}", parts.join(", ")));
            }
        }
    }
    if notes.is_empty() {
        name.to_string()
    } else {
        format!("{name} ({})", notes.join("; "))
    }
}

fn contents<'a>(state: &'a WorldState, container: &str) -> Vec<&'a str> {
    state
        .objects
        .iter()
        .filter(|(_, o)| matches!(&o.location, Location::In(c) if c == container))
        .map(|(n, _)| n.as_str())
        .collect()
}

/// Full description of the agent's room; persists regardless of the last action.
pub fn describe_room(world: &WorldDef, state: &WorldState) -> String {
    let room = &state.agent_room;
    let desc = world.room(room).map_or("", |r| r.description.as_str());
    let here: Vec<String> = state
        .objects
        .iter()
        .filter(|(_, o)| matches!(&o.location, Location::Room(r) if r == room))
        .map(|(n, _)| describe_object(state, n, world, 0))
        .collect();
    let mut text = format!("This room is called the {room}.");
    if !desc.is_empty() {
        text.push(' ');
        text.push_str(desc);
    }
    if here.is_empty() {
        text.push_str("\nThe room is empty.");
    } else {
        text.push_str(&format!("\nYou see: {}.", here.join(", ")));
    }
    let exits = world.neighbours(room);
    if exits.is_empty() {
        text.push_str("\nThere are no exits.");
    } else {
        text.push_str(&format!("\nExits: {}.", exits.join(", ")));
    }
    text
}

fn describe_inventory(world: &WorldDef, state: &WorldState) -> String {
    let items: Vec<String> = state.inventory().iter().map(|i| describe_object(state, i, world, 0)).collect();
    if items.is_empty() {
        "Your inventory is empty.".into()
    } else {
        format!("In your inventory: {}.", items.join(", "))
    }
}

/// Applies rules until none fires; returns their messages in firing order.
fn settle(world: &WorldDef, state: &mut WorldState) -> Vec<String> {
    let mut messages = Vec::new();
    // Each rule only moves its object to a fixed state, so |rules| + 1
    // rounds reach a fixpoint unless rules fight; the cap bounds that case.
    for _ in 0..=world.rules.len() {
        let mut fired = false;
        for rule in &world.rules {
            let current = state.objects.get(&rule.object).and_then(|o| o.state.clone());
            if current.as_deref() != Some(rule.becomes.as_str()) && rule.when.holds(state) {
                if let Some(o) = state.objects.get_mut(&rule.object) {
                    o.state = Some(rule.becomes.clone());
                    fired = true;
                    if !rule.message.is_empty() {
                        messages.push(rule.message.clone());
                    }
                }
            }
        }
        if !fired {
            break;
        }
    }
    messages
}

/// One environment step. Anything outside the valid-action set is rejected
/// with [`REJECTION`] and leaves the state untouched.
pub fn step_world(world: &WorldDef, state: &WorldState, action_text: &str) -> StepOutcome {
    let cmd = parse_command(action_text);
    let Some(cmd) = cmd.filter(|c| is_valid(world, state, c)) else {
        let target = parse_command(action_text)
            .and_then(|c| c.target())
            .unwrap_or_else(|| tokens(action_text).join(" "));
        return StepOutcome {
            observation: REJECTION.into(),
            state: state.clone(),
            signal: StepSignal {
                done: state.done,
                rejected: true,
                score_delta: 0,
                entered_new_room: false,
                rejected_target: Some(target),
            },
        };
    };
    let mut next = state.clone();
    let mut entered_new_room = false;
    let set = |s: &mut WorldState, o: &str, f: &dyn Fn(&mut ObjectState)| {
        if let Some(obj) = s.objects.get_mut(o) {
            f(obj);
        }
    };
    let mut text = match &cmd {
        Command::Look => describe_room(world, &next),
        Command::Inventory => describe_inventory(world, &next),
        Command::Go { room } => {
            next.agent_room = room.clone();
            entered_new_room = next.visited_rooms.insert(room.clone());
            format!("You move to the {room}.\n{}", describe_room(world, &next))
        }
        Command::Open { object } => {
            set(&mut next, object, &|o| o.open = true);
            let inner = contents(&next, object);
            if inner.is_empty() {
                format!("The {object} is now open. It is empty.")
            } else {
                format!("The {object} is now open. It contains: {}.", inner.join(", "))
            }
        }
        Command::Take { object } => {
            set(&mut next, object, &|o| o.location = Location::Inventory);
            format!("You take the {object}.")
        }
        Command::Put { object, container } => {
            let c = container.clone();
            set(&mut next, object, &move |o| o.location = Location::In(c.clone()));
            format!("You put the {object} in the {container}.")
        }
        Command::Activate { object } => {
            set(&mut next, object, &|o| o.active = true);
            format!("The {object} is now on.")
        }
        Command::Deactivate { object } => {
            set(&mut next, object, &|o| o.active = false);
            format!("The {object} is now off.")
        }
        Command::Focus { object } => {
            next.focused.insert(object.clone());
            format!("You focus on the {object}.")
        }
    };
    for m in settle(world, &mut next) {
        text.push('\n');
        text.push_str(&m);
    }
    next.score = compute_score(world, &next);
    next.done = state.done || world.goal.holds(&next) || next.score >= 100;
    next.last_observation = text.clone();
    next.history.push_back(cmd.render());
    while next.history.len() > HISTORY_LEN {
        next.history.pop_front();
    }
    StepOutcome {
        observation: text,
        signal: StepSignal {
            done: next.done,
            rejected: false,
            score_delta: i64::from(next.score) - i64::from(state.score),
            entered_new_room,
            rejected_target: None,
        },
        state: next,
    }
}
