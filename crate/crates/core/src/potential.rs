//! Radial, non-negative, compactly supported interaction potentials.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RadialPotential {
    /// V(r) = V0 for r < R0, 0 beyond.
    SquareWell { v0: f64, r0: f64 },
    /// V(r) = V0·exp(−(3r/R0)²) for r ≤ R0, 0 beyond (cutoff value e⁻⁹·V0).
    GaussianTruncated { v0: f64, r0: f64 },
    /// Infinite repulsion inside R0; handled analytically by the solver.
    HardSphere { r0: f64 },
    /// Piecewise-linear table of (r, V(r)); r strictly increasing from 0.
    Tabulated { samples: Vec<(f64, f64)> },
}

impl RadialPotential {
    /// Support radius R0 (V vanishes beyond it).
    pub fn range(&self) -> f64 {
        match self {
            Self::SquareWell { r0, .. }
            | Self::GaussianTruncated { r0, .. }
            | Self::HardSphere { r0 } => *r0,
            Self::Tabulated { samples } => samples.last().map(|s| s.0).unwrap_or(0.0),
        }
    }

    /// Point evaluation; not meaningful for the hard sphere.
    pub fn eval(&self, r: f64) -> f64 {
        match self {
            Self::SquareWell { v0, r0 } => {
                if r < *r0 {
                    *v0
                } else {
                    0.0
                }
            }
            Self::GaussianTruncated { v0, r0 } => {
                if r <= *r0 {
                    let t = 3.0 * r / r0;
                    v0 * (-t * t).exp()
                } else {
                    0.0
                }
            }
            Self::HardSphere { .. } => {
                panic!("hard sphere has no finite pointwise value; use the analytic branch")
            }
            Self::Tabulated { samples } => {
                if samples.is_empty() || r > samples.last().unwrap().0 {
                    return 0.0;
                }
                if r <= samples[0].0 {
                    return samples[0].1;
                }
                let j = samples.partition_point(|s| s.0 < r);
                let (r0, v0) = samples[j - 1];
                let (r1, v1) = samples[j];
                v0 + (v1 - v0) * (r - r0) / (r1 - r0)
            }
        }
    }

    pub fn is_hard_sphere(&self) -> bool {
        matches!(self, Self::HardSphere { .. })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::SquareWell { v0, r0 } | Self::GaussianTruncated { v0, r0 } => {
                if *v0 < 0.0 {
                    return Err(Error::Validation("negative potential strength".into()));
                }
                if *r0 <= 0.0 {
                    return Err(Error::Validation("non-positive range".into()));
                }
            }
            Self::HardSphere { r0 } => {
                if *r0 <= 0.0 {
                    return Err(Error::Validation("non-positive hard-sphere radius".into()));
                }
            }
            Self::Tabulated { samples } => {
                if samples.len() < 2 {
                    return Err(Error::Validation("tabulated potential needs >= 2 samples".into()));
                }
                if samples[0].0 != 0.0 {
                    return Err(Error::Validation("tabulated radii must start at 0".into()));
                }
                for w in samples.windows(2) {
                    if w[1].0 <= w[0].0 {
                        return Err(Error::Validation("tabulated radii must strictly increase".into()));
                    }
                }
                if samples.iter().any(|s| s.1 < 0.0) {
                    return Err(Error::Validation("negative potential sample".into()));
                }
            }
        }
        Ok(())
    }

    /// Parse a two-column (r, V) text table; '#' starts a comment.
    pub fn from_two_column(text: &str) -> Result<Self> {
        let mut samples = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let parse = |tok: Option<&str>| -> Result<f64> {
                tok.ok_or_else(|| Error::Validation(format!("line {}: missing column", lineno + 1)))?
                    .parse()
                    .map_err(|e| Error::Validation(format!("line {}: {}", lineno + 1, e)))
            };
            let r = parse(it.next())?;
            let v = parse(it.next())?;
            samples.push((r, v));
        }
        let pot = Self::Tabulated { samples };
        pot.validate()?;
        Ok(pot)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_column_parsing_with_comments() {
        let pot = RadialPotential::from_two_column("# header\n0.0 2.0\n0.5 1.0 # mid\n1.0 0.0\n").unwrap();
        assert_eq!(pot.range(), 1.0);
        assert!((pot.eval(0.25) - 1.5).abs() < 1e-15);
        assert_eq!(pot.eval(2.0), 0.0);
    }

    #[test]
    fn validation_rejects_bad_tables() {
        assert!(RadialPotential::from_two_column("0.0 1.0\n0.0 2.0\n").is_err());
        assert!(RadialPotential::from_two_column("0.0 1.0\n1.0 -2.0\n").is_err());
        assert!(RadialPotential::from_two_column("0.5 1.0\n1.0 0.0\n").is_err());
    }
}
