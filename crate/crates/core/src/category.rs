//! Foundational-layer edge categories.

use alloc::string::{String, ToString};
use core::fmt;
use core::str::FromStr;

use thiserror::Error;

/// Label of an edge in the foundational layer.
///
/// `T` is not a semantic category: it attaches a pre-terminal wrapper to a
/// unit spanning several tokens and is never scored. `Other` only appears
/// when a reader runs in extension-label mode.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Category {
    P,
    S,
    A,
    D,
    C,
    E,
    N,
    R,
    F,
    L,
    H,
    G,
    U,
    T,
    Other(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown edge category `{0}`")]
pub struct UnknownCategory(pub String);

impl Category {
    /// The 13 scored categories followed by `T`.
    pub const ALL: [Category; 14] = [
        Category::P,
        Category::S,
        Category::A,
        Category::D,
        Category::C,
        Category::E,
        Category::N,
        Category::R,
        Category::F,
        Category::L,
        Category::H,
        Category::G,
        Category::U,
        Category::T,
    ];

    /// Scene elements: States, Processes, Participants, Adverbials.
    pub const SCENE: [Category; 4] = [Category::S, Category::P, Category::A, Category::D];
    /// Non-scene elements: Elaborators, Connectors, Centers.
    pub const NON_SCENE: [Category; 3] = [Category::E, Category::N, Category::C];
    /// Inter-scene linkage: Parallel Scenes, Linkers, Ground.
    pub const LINKAGE: [Category; 3] = [Category::H, Category::L, Category::G];

    pub fn as_str(&self) -> &str {
        match self {
            Category::P => "P",
            Category::S => "S",
            Category::A => "A",
            Category::D => "D",
            Category::C => "C",
            Category::E => "E",
            Category::N => "N",
            Category::R => "R",
            Category::F => "F",
            Category::L => "L",
            Category::H => "H",
            Category::G => "G",
            Category::U => "U",
            Category::T => "T",
            Category::Other(raw) => raw,
        }
    }

    pub fn description(&self) -> &'static str {
        match self {
            Category::P => "Process",
            Category::S => "State",
            Category::A => "Participant",
            Category::D => "Adverbial",
            Category::C => "Center",
            Category::E => "Elaborator",
            Category::N => "Connector",
            Category::R => "Relator",
            Category::F => "Function",
            Category::L => "Linker",
            Category::H => "Parallel Scene",
            Category::G => "Ground",
            Category::U => "Punctuation",
            Category::T => "pre-terminal attachment",
            Category::Other(_) => "extension label",
        }
    }

    /// Parses a label, keeping unknown labels as `Other` instead of failing.
    pub fn parse_extended(label: &str) -> Category {
        label
            .parse()
            .unwrap_or_else(|_| Category::Other(label.to_string()))
    }

    /// Whether edges with this label take part in scoring at all.
    pub fn is_scored(&self) -> bool {
        !matches!(self, Category::T)
    }

    pub fn is_main_relation(&self) -> bool {
        matches!(self, Category::P | Category::S)
    }
}

impl FromStr for Category {
    type Err = UnknownCategory;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Category::ALL
            .iter()
            .find(|c| c.as_str() == s)
            .cloned()
            .ok_or_else(|| UnknownCategory(s.to_string()))
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}
