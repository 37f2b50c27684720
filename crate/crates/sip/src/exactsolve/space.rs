//! Finite truncation of the configuration space: the box `{0..n_max}^N`
//! with a mixed-radix bijection between configurations and flat indices.

use crate::error::{Result, SipError};
use crate::model::Configuration;

/// Enumeration of all configurations with every occupation at most `n_max`.
///
/// Site `k` (0-based) is the `k`-th mixed-radix digit with base `n_max + 1`,
/// so site 1 varies fastest.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TruncatedSpace {
    n_sites: usize,
    n_max: u32,
    total: usize,
}

impl TruncatedSpace {
    /// Builds the box, rejecting sizes that overflow the index range.
    pub fn new(n_sites: usize, n_max: u32) -> Result<Self> {
        if n_sites < 2 {
            return Err(SipError::InvalidParameter(format!(
                "truncated space needs N >= 2 sites, got {n_sites}"
            )));
        }
        if n_max < 1 {
            return Err(SipError::InvalidParameter(
                "truncated space needs n_max >= 1".into(),
            ));
        }
        let width = n_max as usize + 1;
        let mut total: usize = 1;
        for _ in 0..n_sites {
            total = total
                .checked_mul(width)
                .filter(|&t| t <= u32::MAX as usize)
                .ok_or(SipError::SpaceTooLarge {
                    n_sites,
                    n_max,
                    limit: u32::MAX as usize,
                })?;
        }
        Ok(Self {
            n_sites,
            n_max,
            total,
        })
    }

    /// Number of sites.
    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    /// Per-site occupation cap.
    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    /// Total number of states `(n_max + 1)^N`.
    pub fn len(&self) -> usize {
        self.total
    }

    /// True only for the degenerate empty space (never constructed).
    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    /// Flat index of a configuration. The configuration must lie in the box.
    pub fn index_of(&self, cfg: &Configuration) -> Result<usize> {
        if cfg.n_sites() != self.n_sites {
            return Err(SipError::DimensionMismatch {
                expected: self.n_sites,
                found: cfg.n_sites(),
            });
        }
        let width = self.n_max as usize + 1;
        let mut idx = 0usize;
        for &n in cfg.occupations().iter().rev() {
            if n > self.n_max {
                return Err(SipError::InvalidParameter(format!(
                    "occupation {n} exceeds the cap {}",
                    self.n_max
                )));
            }
            idx = idx * width + n as usize;
        }
        Ok(idx)
    }

    /// Configuration at a flat index.
    pub fn config_at(&self, mut index: usize) -> Configuration {
        assert!(index < self.total, "state index out of range");
        let width = self.n_max as usize + 1;
        let mut occ = vec![0u32; self.n_sites];
        for slot in occ.iter_mut() {
            *slot = (index % width) as u32;
            index /= width;
        }
        Configuration::new(occ)
    }

    /// Writes the digits of `index` into `out` without allocating.
    pub(crate) fn decode_into(&self, mut index: usize, out: &mut [u32]) {
        let width = self.n_max as usize + 1;
        for slot in out.iter_mut().take(self.n_sites) {
            *slot = (index % width) as u32;
            index /= width;
        }
    }

    /// Iterator over all state indices.
    pub fn indices(&self) -> std::ops::Range<usize> {
        0..self.total
    }
}

/// Convenience constructor mirroring the operation name used elsewhere.
pub fn build_space(n_sites: usize, n_max: u32) -> Result<TruncatedSpace> {
    TruncatedSpace::new(n_sites, n_max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes() {
        assert_eq!(build_space(2, 1).unwrap().len(), 4);
        assert_eq!(build_space(3, 6).unwrap().len(), 343);
    }

    #[test]
    fn bijection_round_trip() {
        let space = build_space(3, 4).unwrap();
        for k in space.indices() {
            let cfg = space.config_at(k);
            assert_eq!(space.index_of(&cfg).unwrap(), k);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(build_space(1, 4).is_err());
        assert!(build_space(3, 0).is_err());
        // (2^32)^2 overflows the u32-bounded index range
        assert!(matches!(
            build_space(9, u32::MAX - 1),
            Err(SipError::SpaceTooLarge { .. })
        ));
        let space = build_space(2, 3).unwrap();
        assert!(space.index_of(&Configuration::new(vec![4, 0])).is_err());
        assert!(space.index_of(&Configuration::new(vec![1, 1, 1])).is_err());
    }

    #[test]
    fn site_one_is_fastest_digit() {
        let space = build_space(2, 2).unwrap();
        assert_eq!(space.config_at(1).occupations(), &[1, 0]);
        assert_eq!(space.config_at(3).occupations(), &[0, 1]);
    }
}
