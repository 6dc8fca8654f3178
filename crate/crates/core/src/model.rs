//! Structural model choices.

use std::fmt;
use std::str::FromStr;

use crate::error::{MegError, Result};

/// How many past events an excitation sum retains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Memory {
    /// r = 0: constant baseline only.
    Poisson,
    /// r = 1: only the most recent event excites.
    Markov,
    /// r = infinity: every past event excites.
    Hawkes,
}

impl Memory {
    pub fn is_self_exciting(self) -> bool {
        !matches!(self, Memory::Poisson)
    }
}

/// Changepoint policy for the edge start times.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TauStrategy {
    /// First observed event on the edge, infinity for silent edges.
    Mle,
    /// Every edge observable from time zero.
    Zero,
    /// Zero on edges observed in training, infinity elsewhere.
    Adjacency,
}

/// Which intensity components are present and their memory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModelSpec {
    pub main: Option<Memory>,
    pub interaction: Option<Memory>,
    pub dim: usize,
    pub tau: TauStrategy,
}

impl ModelSpec {
    pub fn new(main: Option<Memory>, interaction: Option<Memory>, dim: usize, tau: TauStrategy) -> Result<Self> {
        let spec = Self {
            main,
            interaction,
            dim: if interaction.is_some() { dim } else { 0 },
            tau,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn main_only(memory: Memory, tau: TauStrategy) -> Self {
        Self {
            main: Some(memory),
            interaction: None,
            dim: 0,
            tau,
        }
    }

    pub fn interaction_only(memory: Memory, dim: usize, tau: TauStrategy) -> Self {
        Self {
            main: None,
            interaction: Some(memory),
            dim,
            tau,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.main.is_none() && self.interaction.is_none() {
            return Err(MegError::InvalidSpec(
                "main effects and interactions cannot both be absent".into(),
            ));
        }
        if self.interaction.is_some() && self.dim == 0 {
            return Err(MegError::InvalidSpec("interaction dimension must be >= 1".into()));
        }
        Ok(())
    }

    /// Same structure with every Hawkes component replaced by Markov.
    pub fn markov_relaxation(&self) -> Self {
        let relax = |m: Option<Memory>| {
            m.map(|m| match m {
                Memory::Hawkes => Memory::Markov,
                other => other,
            })
        };
        Self {
            main: relax(self.main),
            interaction: relax(self.interaction),
            ..*self
        }
    }

    pub fn has_hawkes(&self) -> bool {
        self.main == Some(Memory::Hawkes) || self.interaction == Some(Memory::Hawkes)
    }

    pub fn main_excites(&self) -> bool {
        self.main.is_some_and(Memory::is_self_exciting)
    }

    pub fn interaction_excites(&self) -> bool {
        self.interaction.is_some_and(Memory::is_self_exciting)
    }
}

impl fmt::Display for Memory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Memory::Poisson => "poisson",
            Memory::Markov => "markov",
            Memory::Hawkes => "hawkes",
        })
    }
}

impl FromStr for Memory {
    type Err = MegError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "poisson" | "0" => Ok(Memory::Poisson),
            "markov" | "1" => Ok(Memory::Markov),
            "hawkes" | "inf" => Ok(Memory::Hawkes),
            other => Err(MegError::InvalidSpec(format!("unknown memory kind '{other}'"))),
        }
    }
}

/// Parses `absent` as `None`, anything else as a [`Memory`].
pub fn parse_component(s: &str) -> Result<Option<Memory>> {
    if s.eq_ignore_ascii_case("absent") || s.eq_ignore_ascii_case("none") {
        Ok(None)
    } else {
        s.parse().map(Some)
    }
}

pub fn component_name(c: Option<Memory>) -> String {
    c.map_or_else(|| "absent".to_string(), |m| m.to_string())
}

impl fmt::Display for TauStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TauStrategy::Mle => "mle",
            TauStrategy::Zero => "zero",
            TauStrategy::Adjacency => "adjacency",
        })
    }
}

impl FromStr for TauStrategy {
    type Err = MegError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mle" => Ok(TauStrategy::Mle),
            "zero" => Ok(TauStrategy::Zero),
            "adjacency" => Ok(TauStrategy::Adjacency),
            other => Err(MegError::InvalidSpec(format!("unknown tau strategy '{other}'"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_absent_is_rejected() {
        assert!(ModelSpec::new(None, None, 1, TauStrategy::Zero).is_err());
        assert!(ModelSpec::new(None, Some(Memory::Markov), 0, TauStrategy::Zero).is_err());
        let spec = ModelSpec::new(Some(Memory::Hawkes), None, 5, TauStrategy::Zero).unwrap();
        assert_eq!(spec.dim, 0);
    }

    #[test]
    fn parsing_round_trips() {
        for m in [Memory::Poisson, Memory::Markov, Memory::Hawkes] {
            assert_eq!(m.to_string().parse::<Memory>().unwrap(), m);
        }
        assert_eq!(parse_component("absent").unwrap(), None);
        assert_eq!("adjacency".parse::<TauStrategy>().unwrap(), TauStrategy::Adjacency);
    }

    #[test]
    fn markov_relaxation_keeps_poisson() {
        let spec = ModelSpec::new(Some(Memory::Hawkes), Some(Memory::Poisson), 2, TauStrategy::Mle).unwrap();
        let relaxed = spec.markov_relaxation();
        assert_eq!(relaxed.main, Some(Memory::Markov));
        assert_eq!(relaxed.interaction, Some(Memory::Poisson));
    }
}
