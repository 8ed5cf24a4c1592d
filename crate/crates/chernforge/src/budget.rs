//! Resource budget guards.
//!
//! Grids and matrix ranks are checked against a [`Budget`] before any large
//! allocation happens.  The default budget suits a small workstation; the
//! `CHERNFORGE_BUDGET` environment variable overrides it, either as a bare
//! integer (maximum grid points) or as `key=value` pairs separated by commas
//! with keys `points`, `rank` and `secs`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Budget {
    /// Maximum number of grid nodes n^m for a single torus grid.
    pub max_points: usize,
    /// Maximum symplectic rank k for dense matrix-valued forms.
    pub max_rank: usize,
    /// Wall-clock limit in seconds for a single solver run (0 = unlimited).
    pub max_secs: u64,
}

pub const DEFAULT_MAX_POINTS: usize = 1 << 22;
pub const DEFAULT_MAX_RANK: usize = 8;

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_points: DEFAULT_MAX_POINTS,
            max_rank: DEFAULT_MAX_RANK,
            max_secs: 0,
        }
    }
}

impl Budget {
    /// Default budget adjusted by the `CHERNFORGE_BUDGET` environment variable.
    pub fn from_env() -> Budget {
        match std::env::var("CHERNFORGE_BUDGET") {
            Ok(s) => Budget::parse(&s).unwrap_or_default(),
            Err(_) => Budget::default(),
        }
    }

    /// Parse a budget string: either a bare integer (max points) or
    /// comma-separated `key=value` pairs.
    pub fn parse(s: &str) -> Result<Budget> {
        let mut b = Budget::default();
        let s = s.trim();
        if s.is_empty() {
            return Ok(b);
        }
        if let Ok(points) = s.parse::<usize>() {
            b.max_points = points;
            return Ok(b);
        }
        for part in s.split(',') {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::Validation(format!("bad budget clause {part:?}")))?;
            let value: u64 = value
                .trim()
                .parse()
                .map_err(|_| Error::Validation(format!("bad budget value {value:?}")))?;
            match key.trim() {
                "points" => b.max_points = value as usize,
                "rank" => b.max_rank = value as usize,
                "secs" => b.max_secs = value,
                other => {
                    return Err(Error::Validation(format!("unknown budget key {other:?}")));
                }
            }
        }
        Ok(b)
    }

    pub fn check_points(&self, points: usize) -> Result<()> {
        if points > self.max_points {
            return Err(Error::BudgetExceeded(format!(
                "grid has {points} nodes; budget allows {}",
                self.max_points
            )));
        }
        Ok(())
    }

    pub fn check_rank(&self, k: usize) -> Result<()> {
        if k > self.max_rank {
            return Err(Error::BudgetExceeded(format!(
                "rank k = {k}; budget allows {}",
                self.max_rank
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_bare_integer_as_points() {
        let b = Budget::parse("65536").unwrap();
        assert_eq!(b.max_points, 65536);
        assert_eq!(b.max_rank, DEFAULT_MAX_RANK);
    }

    #[test]
    fn parses_key_value_pairs() {
        let b = Budget::parse("points=1000, rank=12, secs=600").unwrap();
        assert_eq!(b.max_points, 1000);
        assert_eq!(b.max_rank, 12);
        assert_eq!(b.max_secs, 600);
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(Budget::parse("frobnicate=1").is_err());
    }

    #[test]
    fn enforces_caps() {
        let b = Budget::parse("points=10,rank=2").unwrap();
        assert!(b.check_points(11).is_err());
        assert!(b.check_points(10).is_ok());
        assert!(b.check_rank(3).is_err());
    }
}
