use std::fmt;

use serde::{Deserialize, Serialize};

/// Label value with a third state for targets whose event fell inside the
/// feature window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum Ternary {
    #[default]
    Negative,
    Positive,
    Masked,
}

impl Ternary {
    pub fn from_bool(b: bool) -> Self {
        if b {
            Ternary::Positive
        } else {
            Ternary::Negative
        }
    }

    pub fn is_masked(self) -> bool {
        self == Ternary::Masked
    }

    pub fn is_positive(self) -> bool {
        self == Ternary::Positive
    }

    /// `None` for masked entries.
    pub fn value(self) -> Option<bool> {
        match self {
            Ternary::Negative => Some(false),
            Ternary::Positive => Some(true),
            Ternary::Masked => None,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Ternary::Negative => "0",
            Ternary::Positive => "1",
            Ternary::Masked => "M",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "0" => Some(Ternary::Negative),
            "1" => Some(Ternary::Positive),
            "M" | "m" => Some(Ternary::Masked),
            _ => None,
        }
    }
}

impl fmt::Display for Ternary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}
