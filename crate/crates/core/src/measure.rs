use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// The four diabetic screening measures tracked by the simulator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    #[serde(rename = "hba1c")]
    HbA1c,
    Ldl,
    EyeExam,
    Nephropathy,
}

impl Measure {
    pub const ALL: [Measure; 4] = [
        Measure::HbA1c,
        Measure::Ldl,
        Measure::EyeExam,
        Measure::Nephropathy,
    ];

    pub const fn index(self) -> usize {
        match self {
            Measure::HbA1c => 0,
            Measure::Ldl => 1,
            Measure::EyeExam => 2,
            Measure::Nephropathy => 3,
        }
    }

    pub const fn key(self) -> &'static str {
        match self {
            Measure::HbA1c => "hba1c",
            Measure::Ldl => "ldl",
            Measure::EyeExam => "eye_exam",
            Measure::Nephropathy => "nephropathy",
        }
    }

    pub fn from_index(i: usize) -> Option<Measure> {
        Measure::ALL.get(i).copied()
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for Measure {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Measure::ALL
            .into_iter()
            .find(|m| m.key() == s)
            .ok_or_else(|| format!("unknown measure `{s}`"))
    }
}

/// Per-measure values, indexed by [`Measure::index`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PerMeasure<T>(pub [T; 4]);

impl<T> PerMeasure<T> {
    pub fn get(&self, m: Measure) -> &T {
        &self.0[m.index()]
    }

    pub fn get_mut(&mut self, m: Measure) -> &mut T {
        &mut self.0[m.index()]
    }

    pub fn iter(&self) -> impl Iterator<Item = (Measure, &T)> {
        Measure::ALL.into_iter().zip(self.0.iter())
    }
}

impl<T: Copy> PerMeasure<T> {
    pub fn splat(v: T) -> Self {
        PerMeasure([v; 4])
    }
}
