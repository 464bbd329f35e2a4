//! Run configuration: truncation orders, the ħ ladder and the seed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Total-degree cap `N_tot`.
    pub truncation: u32,
    /// Highest ħ power `N_ħ`.
    pub hbar_order: u32,
    /// Highest time power `N_t`.
    pub t_order: u32,
    /// ħ values for numeric sweeps, largest first.
    pub ladder: Vec<f64>,
    pub seed: u64,
    /// Phase-space dimension for commands that read bare expressions.
    pub dim: usize,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            truncation: 6,
            hbar_order: 3,
            t_order: 4,
            ladder: vec![0.2, 0.1, 0.05, 0.025],
            seed: 20240917,
            dim: 1,
        }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Config> {
        let cfg: Config = toml::from_str(text).map_err(|e| {
            let (line, col) = e.span().map(|s| line_col(text, s.start)).unwrap_or((0, 0));
            Error::parse(line, col, e.message().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.truncation == 0 || self.hbar_order == 0 || self.t_order == 0 {
            return Err(Error::Invalid("truncation, hbar_order and t_order must be at least 1".into()));
        }
        if self.dim == 0 {
            return Err(Error::Invalid("dim must be at least 1".into()));
        }
        if self.ladder.len() < 3 || self.ladder.iter().any(|h| !(h.is_finite() && *h > 0.0)) {
            return Err(Error::Invalid("ladder needs at least 3 positive hbar values".into()));
        }
        Ok(())
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, col)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_overrides() {
        let c = Config::from_toml("").unwrap();
        assert_eq!((c.truncation, c.hbar_order, c.t_order), (6, 3, 4));
        let c = Config::from_toml("truncation = 9\nseed = 3\n").unwrap();
        assert_eq!((c.truncation, c.seed), (9, 3));
        assert_eq!(Config::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(matches!(Config::from_toml("t_order = 0"), Err(Error::Invalid(_))));
        assert!(matches!(Config::from_toml("ladder = [0.1, 0.05]"), Err(Error::Invalid(_))));
        assert!(matches!(Config::from_toml("bogus = 1"), Err(Error::Parse { line: 1, .. })));
    }
}
