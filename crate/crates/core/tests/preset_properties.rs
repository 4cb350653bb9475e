use beamradio_core::preset::{parse_command, ActionEffect, Command, PresetStore, ProtocolError, Slot, NUM_SLOTS};
use proptest::prelude::*;

fn slot() -> impl Strategy<Value = Slot> {
    (0..NUM_SLOTS).prop_map(|i| Slot::new(i).unwrap())
}

fn station_url() -> impl Strategy<Value = String> {
    (
        prop::sample::select(vec!["http", "https"]),
        "[a-z][a-z0-9]{0,8}(\\.[a-z]{2,4})?",
        prop::option::of(1u16..65535),
        "(/[A-Za-z0-9._~%+ -]{0,10}){0,3}",
        prop::option::of("[a-z0-9=&+]{1,8}"),
    )
        .prop_map(|(scheme, host, port, path, query)| {
            let mut u = format!("{scheme}://{host}");
            if let Some(p) = port {
                u += &format!(":{p}");
            }
            u += &path;
            if let Some(q) = query {
                u += &format!("?{q}");
            }
            u
        })
}

fn command() -> impl Strategy<Value = Command> {
    prop_oneof![
        Just(Command::List),
        Just(Command::Prev),
        Just(Command::Next),
        slot().prop_map(Command::Select),
        (slot(), station_url()).prop_map(|(d, u)| Command::Set(d, u)),
        (slot(), prop::option::of(station_url())).prop_map(|(d, u)| Command::Remove(d, u)),
    ]
}

/// Straight-line model of the store: a vector of slots and a cursor.
#[derive(Debug, Default, Clone)]
struct Model {
    slots: Vec<Option<String>>,
    current: usize,
}

impl Model {
    fn new() -> Self {
        Self { slots: vec![None; NUM_SLOTS], current: 0 }
    }

    fn filled(&self) -> Vec<usize> {
        (0..NUM_SLOTS).filter(|&i| self.slots[i].is_some()).collect()
    }

    fn after(&self, from: usize) -> Option<usize> {
        let f = self.filled();
        f.iter().copied().find(|&i| i > from).or_else(|| f.first().copied())
    }

    fn before(&self, from: usize) -> Option<usize> {
        let f = self.filled();
        f.iter().rev().copied().find(|&i| i < from).or_else(|| f.last().copied())
    }

    fn apply(&mut self, cmd: &Command) -> Result<ActionEffect, ()> {
        let slot = |i: usize| Slot::new(i).unwrap();
        Ok(match cmd {
            Command::List => ActionEffect::None,
            Command::Select(d) => {
                if self.slots[d.index()].is_none() {
                    return Err(());
                }
                self.current = d.index();
                ActionEffect::StationChanged(*d)
            }
            Command::Next | Command::Prev => {
                let to = if *cmd == Command::Next { self.after(self.current) } else { self.before(self.current) };
                let to = to.ok_or(())?;
                self.current = to;
                ActionEffect::StationChanged(slot(to))
            }
            Command::Set(d, url) => {
                let empty = self.filled().is_empty();
                let old = self.slots[d.index()].replace(url.clone());
                if empty {
                    self.current = d.index();
                    ActionEffect::StationChanged(*d)
                } else if d.index() == self.current && old.as_ref() != Some(url) {
                    ActionEffect::StationChanged(*d)
                } else {
                    ActionEffect::None
                }
            }
            Command::Remove(d, _) => {
                let had = self.slots[d.index()].take().is_some();
                if had && d.index() == self.current {
                    match self.after(self.current) {
                        Some(n) => {
                            self.current = n;
                            ActionEffect::StationChanged(slot(n))
                        }
                        None => ActionEffect::Stopped,
                    }
                } else {
                    ActionEffect::None
                }
            }
        })
    }

    fn listing(&self) -> String {
        self.filled()
            .into_iter()
            .map(|i| format!("{} {} {}\n", if i == self.current { '*' } else { ' ' }, i, self.slots[i].as_ref().unwrap()))
            .collect()
    }
}

proptest! {
    #[test]
    fn render_parse_round_trip(cmd in command()) {
        prop_assert_eq!(parse_command(&cmd.to_path()), Ok(cmd));
    }

    #[test]
    fn store_tracks_model(cmds in prop::collection::vec(command(), 0..60)) {
        let mut store = PresetStore::new();
        let mut model = Model::new();
        for cmd in &cmds {
            let before = store.clone();
            match (store.apply(cmd), model.apply(cmd)) {
                (Ok(resp), Ok(effect)) => {
                    prop_assert_eq!(resp.effect, effect);
                    prop_assert_eq!(resp.body, model.listing());
                }
                (Err(e), Err(())) => {
                    prop_assert!(matches!(e, ProtocolError::EmptySlot(_) | ProtocolError::NoStations));
                    prop_assert_eq!(&store, &before);
                }
                (a, b) => prop_assert!(false, "{:?}: store {:?} model {:?}", cmd, a, b),
            }
            // invariant: a non-empty store always points at a filled slot
            if !store.is_empty() {
                prop_assert!(store.current_url().is_some());
            }
            for d in Slot::all() {
                prop_assert_eq!(store.get(d), model.slots[d.index()].as_deref());
            }
        }
    }

    #[test]
    fn persistence_round_trip(cmds in prop::collection::vec(command(), 0..40)) {
        let mut store = PresetStore::new();
        for cmd in &cmds {
            let _ = store.apply(cmd);
        }
        let loaded = PresetStore::load(&store.save()).unwrap();
        prop_assert_eq!(&loaded, &store);
        prop_assert_eq!(loaded.listing(), store.listing());
    }

    #[test]
    fn next_then_prev_restores(cmds in prop::collection::vec(command(), 0..30)) {
        let mut store = PresetStore::new();
        for cmd in &cmds {
            let _ = store.apply(cmd);
        }
        prop_assume!(!store.is_empty());
        let start = store.current();
        store.apply(&Command::Next).unwrap();
        store.apply(&Command::Prev).unwrap();
        prop_assert_eq!(store.current(), start);
        store.apply(&Command::Prev).unwrap();
        store.apply(&Command::Next).unwrap();
        prop_assert_eq!(store.current(), start);
    }

    #[test]
    fn set_is_idempotent_and_remove_twice_is_noop(
        cmds in prop::collection::vec(command(), 0..30), d in slot(), url in station_url(),
    ) {
        let mut store = PresetStore::new();
        for cmd in &cmds {
            let _ = store.apply(cmd);
        }
        let set = Command::Set(d, url);
        store.apply(&set).unwrap();
        let once = store.clone();
        let again = store.apply(&set).unwrap();
        prop_assert_eq!(&store, &once);
        prop_assert_eq!(again.effect, ActionEffect::None);

        let rm = Command::Remove(d, None);
        store.apply(&rm).unwrap();
        let once = store.clone();
        let again = store.apply(&rm).unwrap();
        prop_assert_eq!(&store, &once);
        prop_assert_eq!(again.effect, ActionEffect::None);
    }

    #[test]
    fn arbitrary_paths_never_panic(path in "/[ -~]{0,40}") {
        if let Ok(cmd) = parse_command(&path) {
            // anything accepted renders to a path that parses to the same command
            prop_assert_eq!(parse_command(&cmd.to_path()), Ok(cmd));
        }
    }

    #[test]
    fn control_characters_are_rejected(d in slot(), url in station_url(), c in prop::sample::select(vec!["%0A", "%0D", "%09", "%00"])) {
        let path = format!("{}{c}x", Command::Set(d, url).to_path());
        prop_assert!(matches!(parse_command(&path), Err(ProtocolError::BadUrl(_))));
    }
}

#[test]
fn file_format_is_line_based() {
    let mut store = PresetStore::new();
    store.apply(&Command::Set(Slot::new(3).unwrap(), "http://a.example/3".into())).unwrap();
    store.apply(&Command::Set(Slot::new(1).unwrap(), "http://a.example/1".into())).unwrap();
    assert_eq!(store.to_file_string(), "1\thttp://a.example/1\n3\thttp://a.example/3\ncurrent\t3\n");
    assert!(PresetStore::load(b"1\thttp://a.example/1\n").is_err());
    assert!(PresetStore::load(b"11\thttp://a.example/1\ncurrent\t1\n").is_err());
    let repaired = PresetStore::load(b"4\thttp://a.example/4\ncurrent\t7\n").unwrap();
    assert_eq!(repaired.current(), Slot::new(4).unwrap());
}
