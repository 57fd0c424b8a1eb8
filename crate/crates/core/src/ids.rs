use std::fmt;

use serde::{Deserialize, Serialize};

/// Leg index, ordered R1, R2, R3, L1, L2, L3 (front to hind per side).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LegId {
    R1,
    R2,
    R3,
    L1,
    L2,
    L3,
}

impl LegId {
    pub const ALL: [LegId; 6] = [
        LegId::R1,
        LegId::R2,
        LegId::R3,
        LegId::L1,
        LegId::L2,
        LegId::L3,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<LegId> {
        Self::ALL.get(i).copied()
    }

    /// Segment position along the body: 0 front, 1 middle, 2 hind.
    pub fn segment(self) -> usize {
        self.index() % 3
    }

    pub fn is_front(self) -> bool {
        self.segment() == 0
    }

    /// The contralateral leg of the same segment.
    pub fn mirror(self) -> LegId {
        LegId::ALL[(self.index() + 3) % 6]
    }

    pub fn name(self) -> &'static str {
        match self {
            LegId::R1 => "R1",
            LegId::R2 => "R2",
            LegId::R3 => "R3",
            LegId::L1 => "L1",
            LegId::L2 => "L2",
            LegId::L3 => "L3",
        }
    }
}

impl fmt::Display for LegId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Walking gait; also the readout column a forward model trains or predicts with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GaitId {
    Wave,
    Tetrapod,
    Caterpillar,
}

impl GaitId {
    pub const ALL: [GaitId; 3] = [GaitId::Wave, GaitId::Tetrapod, GaitId::Caterpillar];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<GaitId> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            GaitId::Wave => "wave",
            GaitId::Tetrapod => "tetrapod",
            GaitId::Caterpillar => "caterpillar",
        }
    }

    pub fn parse(s: &str) -> Option<GaitId> {
        Self::ALL.into_iter().find(|g| g.name() == s)
    }
}

impl fmt::Display for GaitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Stance,
    Swing,
}

impl Phase {
    /// Stance is signalled by a negative CTr command.
    pub fn from_ctr(ctr: f64) -> Phase {
        if ctr < 0.0 {
            Phase::Stance
        } else {
            Phase::Swing
        }
    }
}
