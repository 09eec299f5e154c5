use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sources::{Potential, PotentialJet};

/// A symbolic sign `±`, used for `r`, `s` and the separation branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub const BOTH: [Sign; 2] = [Sign::Plus, Sign::Minus];

    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    pub fn from_value(v: i32) -> Result<Sign> {
        match v {
            1 => Ok(Sign::Plus),
            -1 => Ok(Sign::Minus),
            _ => Err(Error::InvalidParams(format!("sign must be +1 or -1, got {v}"))),
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
        }
    }
}

/// Mass, the sign pair `(r, s)` and the external electromagnetic covector.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub m: f64,
    pub r: Sign,
    pub s: Sign,
    pub potential: Potential,
}

impl ModelParams {
    pub fn new(m: f64, r: Sign, s: Sign, potential: Potential) -> Result<Self> {
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::InvalidParams(format!("mass must be positive, got {m}")));
        }
        Ok(Self { m, r, s, potential })
    }

    /// `m` with `A = 0` and `r = s = +`.
    pub fn free(m: f64) -> Result<Self> {
        Self::new(m, Sign::Plus, Sign::Plus, Potential::zero())
    }

    pub fn with_signs(&self, r: Sign, s: Sign) -> Self {
        Self { r, s, ..self.clone() }
    }

    pub fn with_potential(&self, potential: Potential) -> Self {
        Self { potential, ..self.clone() }
    }

    pub fn potential_at(&self, x: &[f64; 4]) -> PotentialJet {
        self.potential.jet(x)
    }
}
