//! Virtual GPIO port and label-to-pin action bindings.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{label_to_letter, letter_to_label};
use crate::error::DispatchError;

/// Header pin driving the indicator LED in the default bindings.
pub const DEFAULT_LED_PIN: u8 = 17;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Level {
    High,
    Low,
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Level::High => "HIGH",
            Level::Low => "LOW",
        })
    }
}

impl FromStr for Level {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "HIGH" | "1" => Ok(Level::High),
            "LOW" | "0" => Ok(Level::Low),
            _ => Err(format!("bad level {s:?}")),
        }
    }
}

/// Output pin abstraction. [`VirtualGpio`] is the in-memory implementation;
/// a board adapter would implement the same trait.
pub trait GpioPort {
    fn write(&mut self, pin: u8, level: Level);

    fn read(&self, pin: u8) -> Option<Level>;

    /// Every driven pin and its level, ordered by pin.
    fn snapshot(&self) -> BTreeMap<u8, Level>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GpioEvent {
    pub seq: u64,
    pub pin: u8,
    pub level: Level,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VirtualGpio {
    pins: BTreeMap<u8, Level>,
    log: Vec<GpioEvent>,
}

impl VirtualGpio {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn event_log(&self) -> &[GpioEvent] {
        &self.log
    }

    /// Rebuilds a pin map by applying `log` to an empty port.
    pub fn replay(log: &[GpioEvent]) -> BTreeMap<u8, Level> {
        let mut pins = BTreeMap::new();
        for e in log {
            pins.insert(e.pin, e.level);
        }
        pins
    }

    /// `seq,pin,level` CSV with a header line.
    pub fn log_csv(&self) -> String {
        let mut out = String::from("seq,pin,level\n");
        for e in &self.log {
            out.push_str(&format!("{},{},{}\n", e.seq, e.pin, e.level));
        }
        out
    }
}

impl GpioPort for VirtualGpio {
    fn write(&mut self, pin: u8, level: Level) {
        let seq = self.log.len() as u64 + 1;
        self.log.push(GpioEvent { seq, pin, level });
        self.pins.insert(pin, level);
    }

    fn read(&self, pin: u8) -> Option<Level> {
        self.pins.get(&pin).copied()
    }

    fn snapshot(&self) -> BTreeMap<u8, Level> {
        self.pins.clone()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PinAction {
    pub pin: u8,
    pub level: Level,
}

/// One action per letter label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bindings {
    actions: BTreeMap<u8, PinAction>,
}

impl Default for Bindings {
    /// 'A' drives pin 17 high, 'C' drives it low.
    fn default() -> Self {
        let mut b = Bindings::empty();
        b.bind(0, PinAction { pin: DEFAULT_LED_PIN, level: Level::High });
        b.bind(2, PinAction { pin: DEFAULT_LED_PIN, level: Level::Low });
        b
    }
}

impl Bindings {
    pub fn empty() -> Self {
        Bindings { actions: BTreeMap::new() }
    }

    /// Replaces any earlier binding for `label`.
    pub fn bind(&mut self, label: u8, action: PinAction) {
        self.actions.insert(label, action);
    }

    pub fn action(&self, label: u8) -> Option<PinAction> {
        self.actions.get(&label).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u8, PinAction)> + '_ {
        self.actions.iter().map(|(&l, &a)| (l, a))
    }

    /// Parses `LETTER PIN LEVEL` lines; blank lines and `#` comments are skipped.
    /// A letter bound twice is an error.
    pub fn parse(text: &str) -> Result<Self, DispatchError> {
        let mut b = Bindings::empty();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| DispatchError::Bindings { line: i + 1, message };
            let fields: Vec<&str> = line.split_whitespace().collect();
            let [letter, pin, level] = fields[..] else {
                return Err(err(format!("expected `LETTER PIN LEVEL`, got {line:?}")));
            };
            let mut chars = letter.chars();
            let label = match (chars.next(), chars.next()) {
                (Some(c), None) => letter_to_label(c),
                _ => None,
            }
            .ok_or_else(|| err(format!("bad letter {letter:?}")))?;
            let pin: u8 = pin.parse().map_err(|_| err(format!("bad pin {pin:?}")))?;
            let level: Level = level.parse().map_err(err)?;
            if b.actions.contains_key(&label) {
                return Err(err(format!("letter {letter} bound twice")));
            }
            b.bind(label, PinAction { pin, level });
        }
        Ok(b)
    }

    pub fn load(path: &Path) -> Result<Self, DispatchError> {
        let text = fs::read_to_string(path).map_err(|source| DispatchError::Io { path: path.to_owned(), source })?;
        Self::parse(&text)
    }

    pub fn to_text(&self) -> String {
        self.iter()
            .map(|(label, a)| format!("{} {} {}\n", label_to_letter(label).unwrap_or('?'), a.pin, a.level))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DispatchReport {
    pub label: u8,
    pub action: Option<PinAction>,
    pub warning: Option<String>,
}

/// Applies the action bound to `label`; an unbound label only yields a warning.
pub fn dispatch<P: GpioPort + ?Sized>(label: u8, bindings: &Bindings, gpio: &mut P) -> DispatchReport {
    match bindings.action(label) {
        Some(action) => {
            gpio.write(action.pin, action.level);
            DispatchReport { label, action: Some(action), warning: None }
        }
        None => {
            let letter = label_to_letter(label).map(String::from).unwrap_or_else(|| label.to_string());
            DispatchReport { label, action: None, warning: Some(format!("no action bound to {letter}")) }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn default_bindings_drive_led() {
        let b = Bindings::default();
        let mut gpio = VirtualGpio::new();
        let r = dispatch(0, &b, &mut gpio);
        assert_eq!(r.action, Some(PinAction { pin: 17, level: Level::High }));
        assert_eq!(gpio.read(17), Some(Level::High));
        dispatch(2, &b, &mut gpio);
        assert_eq!(gpio.read(17), Some(Level::Low));
    }

    #[test]
    fn unbound_label_warns() {
        let mut gpio = VirtualGpio::new();
        dispatch(0, &Bindings::default(), &mut gpio);
        let before = gpio.snapshot();
        let r = dispatch(1, &Bindings::default(), &mut gpio);
        assert_eq!(r.action, None);
        assert!(r.warning.unwrap().contains('B'));
        assert_eq!(gpio.snapshot(), before);
        assert_eq!(gpio.event_log().len(), 1);
    }

    #[test]
    fn bindings_file_format() {
        let b = Bindings::parse("# led\nA 17 HIGH\nc 17 low\n\nZ 4 HIGH # buzzer\n").unwrap();
        assert_eq!(b.action(25), Some(PinAction { pin: 4, level: Level::High }));
        assert_eq!(b.action(2), Some(PinAction { pin: 17, level: Level::Low }));
        assert_eq!(Bindings::parse(&b.to_text()).unwrap(), b);
        assert_eq!(Bindings::parse(&Bindings::default().to_text()).unwrap(), Bindings::default());

        for bad in ["A 17", "AB 17 HIGH", "A x HIGH", "A 17 MAYBE", "A 300 HIGH", "A 1 HIGH\nA 2 LOW"] {
            assert!(Bindings::parse(bad).is_err(), "{bad}");
        }
        match Bindings::parse("A 17 HIGH\nB 17 ON") {
            Err(DispatchError::Bindings { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn log_csv_export() {
        let mut gpio = VirtualGpio::new();
        dispatch(0, &Bindings::default(), &mut gpio);
        dispatch(2, &Bindings::default(), &mut gpio);
        assert_eq!(gpio.log_csv(), "seq,pin,level\n1,17,HIGH\n2,17,LOW\n");
    }

    proptest! {
        #[test]
        fn replay_reconstructs_pins(labels in proptest::collection::vec(0u8..26, 0..50)) {
            let mut b = Bindings::default();
            b.bind(5, PinAction { pin: 4, level: Level::High });
            b.bind(6, PinAction { pin: 4, level: Level::Low });
            let mut gpio = VirtualGpio::new();
            for l in labels {
                dispatch(l, &b, &mut gpio);
            }
            prop_assert_eq!(VirtualGpio::replay(gpio.event_log()), gpio.snapshot());
        }

        #[test]
        fn repeated_dispatch_is_idempotent(label in 0u8..26, prefix in proptest::collection::vec(0u8..26, 0..10)) {
            let b = Bindings::default();
            let mut gpio = VirtualGpio::new();
            for l in prefix {
                dispatch(l, &b, &mut gpio);
            }
            dispatch(label, &b, &mut gpio);
            let once = gpio.snapshot();
            dispatch(label, &b, &mut gpio);
            prop_assert_eq!(gpio.snapshot(), once);
        }
    }
}
