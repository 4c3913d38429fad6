//! Dyadic partition of unity in `|ξ|`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape of the low-pass cutoff pair that generates the shell symbols.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Profile {
    /// `ψ_k(t) = Φ(2^{-k} t) − Φ(2^{-k+1} t)`.
    Smoothstep,
    /// `ψ_k(t) = Φ(2^{-k} t) − Φ(inner_ratio · 2^{-k} t)`; does not telescope unless
    /// `inner_ratio = 2`. Used for fault injection.
    Detuned { inner_ratio: f64 },
}

/// `s(t) = 6t⁵ − 15t⁴ + 10t³`.
pub fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * t * (t * (6.0 * t - 15.0) + 10.0)
}

/// `Φ(t)`: 1 on `[0, 1]`, smoothstep down to 0 on `[1, 2]`.
pub fn cutoff(t: f64) -> f64 {
    if t <= 1.0 {
        1.0
    } else if t >= 2.0 {
        0.0
    } else {
        1.0 - smoothstep(t - 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DyadicPartition {
    k_min: i32,
    k_max: i32,
    profile: Profile,
}

impl DyadicPartition {
    pub fn new(k_min: i32, k_max: i32) -> Result<Self> {
        Self::with_profile(k_min, k_max, Profile::Smoothstep)
    }

    pub fn with_profile(k_min: i32, k_max: i32, profile: Profile) -> Result<Self> {
        if k_min > k_max {
            return Err(Error::EmptyRange(format!("partition [{k_min}, {k_max}]")));
        }
        if let Profile::Detuned { inner_ratio } = profile {
            if !(inner_ratio > 1.0) {
                return Err(Error::InvalidParameter(format!("inner_ratio {inner_ratio} must exceed 1")));
            }
        }
        Ok(Self { k_min, k_max, profile })
    }

    pub fn k_min(&self) -> i32 {
        self.k_min
    }

    pub fn k_max(&self) -> i32 {
        self.k_max
    }

    pub fn profile(&self) -> Profile {
        self.profile
    }

    pub fn shells(&self) -> impl Iterator<Item = i32> + Clone {
        self.k_min..=self.k_max
    }

    pub fn contains(&self, k: i32) -> bool {
        (self.k_min..=self.k_max).contains(&k)
    }

    pub fn check(&self, k: i32) -> Result<()> {
        if self.contains(k) {
            Ok(())
        } else {
            Err(Error::ShellOutOfRange { k, k_min: self.k_min, k_max: self.k_max })
        }
    }

    /// Shell symbol `ψ_k(|ξ|)`.
    pub fn symbol(&self, k: i32, t: f64) -> f64 {
        let s = 2f64.powi(-k) * t;
        match self.profile {
            Profile::Smoothstep => cutoff(s) - cutoff(2.0 * s),
            Profile::Detuned { inner_ratio } => cutoff(s) - cutoff(inner_ratio * s),
        }
    }

    /// `Σ_{ℓ < k, ℓ ∈ [lo, hi]} ψ_ℓ(t)`.
    pub fn low_symbol(&self, k: i32, lo: i32, hi: i32, t: f64) -> f64 {
        (lo.max(self.k_min)..k.min(hi + 1).min(self.k_max + 1)).map(|l| self.symbol(l, t)).sum()
    }

    /// `Σ_k ψ_k(t)` over the whole partition.
    pub fn total_symbol(&self, t: f64) -> f64 {
        self.shells().map(|k| self.symbol(k, t)).sum()
    }

    /// `Σ_k ψ_k(t)²`.
    pub fn square_symbol(&self, t: f64) -> f64 {
        self.shells().map(|k| self.symbol(k, t).powi(2)).sum()
    }

    /// `[2^{k_min}, 2^{k_max}]`, where the shells sum to one.
    pub fn covered(&self) -> (f64, f64) {
        (2f64.powi(self.k_min), 2f64.powi(self.k_max))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn smoothstep_endpoints() {
        assert_eq!(smoothstep(0.0), 0.0);
        assert_eq!(smoothstep(1.0), 1.0);
        assert!((smoothstep(0.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn sampled_partition_invariants() {
        let p = DyadicPartition::new(-3, 6).unwrap();
        let (lo, hi) = p.covered();
        let n = 10_000;
        for i in 0..n {
            let t = lo * (hi / lo).powf(i as f64 / (n - 1) as f64);
            assert!((p.total_symbol(t) - 1.0).abs() < 1e-14, "t = {t}");
            let sq = p.square_symbol(t);
            assert!((0.5 - 1e-14..=1.0 + 1e-14).contains(&sq), "t = {t}: {sq}");
            for k in p.shells() {
                let v = p.symbol(k, t);
                let inside = t >= 2f64.powi(k - 1) && t <= 2f64.powi(k + 1);
                if !inside {
                    assert_eq!(v, 0.0, "k = {k}, t = {t}");
                }
                assert!((0.0..=1.0).contains(&v));
            }
        }
    }

    #[test]
    fn band_centre_is_one() {
        let p = DyadicPartition::new(0, 5).unwrap();
        for k in p.shells() {
            assert_eq!(p.symbol(k, 2f64.powi(k)), 1.0);
        }
    }

    #[test]
    fn detuned_profile_breaks_telescoping() {
        let p = DyadicPartition::with_profile(0, 5, Profile::Detuned { inner_ratio: 1.1 }).unwrap();
        let worst = (0..1000)
            .map(|i| 1.0 + 31.0 * i as f64 / 999.0)
            .map(|t| (p.total_symbol(t) - 1.0).abs())
            .fold(0.0, f64::max);
        assert!(worst > 0.5);
    }

    #[test]
    fn rejects_empty_and_out_of_range() {
        assert!(DyadicPartition::new(3, 2).is_err());
        let p = DyadicPartition::new(0, 2).unwrap();
        assert!(matches!(p.check(3), Err(Error::ShellOutOfRange { .. })));
    }

    proptest! {
        #[test]
        fn low_symbol_telescopes(k in 1i32..6, t in 0.01f64..100.0) {
            let p = DyadicPartition::new(-2, 6).unwrap();
            // Σ_{ℓ=-2}^{k-1} ψ_ℓ = Φ(2^{-(k-1)} t) − Φ(2^{3} t)
            let expected = cutoff(2f64.powi(-(k - 1)) * t) - cutoff(8.0 * t);
            prop_assert!((p.low_symbol(k, -2, 6, t) - expected).abs() < 1e-13);
        }
    }
}
