//! The one-variable max-plus polynomial tying coefficient exponents to
//! critical levels.
//!
//! A degree-d diagram has k = floor(d/2) critical levels 0 < g_1 < ... < g_k.
//! The exponents b_0, ..., b_k are pinned by requiring the max-plus polynomial
//! max_j (b_j + 2 j T) to have a double root at every g_l, which amounts to
//! the recursion b_{l-1} - b_l = 2 g_l. We normalize b_k = 0.

use serde::{Deserialize, Serialize};

use crate::error::Pgl2Error;

/// Critical level data: the levels and the matching exponents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelData {
    pub gammas: Vec<f64>,
    pub betas: Vec<f64>,
}

impl LevelData {
    pub fn k(&self) -> usize {
        self.gammas.len()
    }

    pub fn from_gammas(gammas: &[f64]) -> Result<LevelData, Pgl2Error> {
        let betas = betas_from_gammas(gammas)?;
        Ok(LevelData {
            gammas: gammas.to_vec(),
            betas,
        })
    }

    /// Evenly spaced default levels 1, 2, ..., k.
    pub fn default_for_k(k: usize) -> LevelData {
        let gammas: Vec<f64> = (1..=k).map(|i| i as f64).collect();
        LevelData::from_gammas(&gammas).expect("default levels are sorted and positive")
    }
}

/// Exponents from levels: b_k = 0 and b_{l-1} = b_l + 2 g_l.
pub fn betas_from_gammas(gammas: &[f64]) -> Result<Vec<f64>, Pgl2Error> {
    for &g in gammas {
        if !(g > 0.0) || !g.is_finite() {
            return Err(Pgl2Error::NonPositive);
        }
    }
    if gammas.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Pgl2Error::NotSorted);
    }
    let k = gammas.len();
    let mut betas = vec![0.0; k + 1];
    for l in (1..=k).rev() {
        betas[l - 1] = betas[l] + 2.0 * gammas[l - 1];
    }
    Ok(betas)
}

/// Levels from exponents: g_l = (b_{l-1} - b_l) / 2, validated to be strictly
/// increasing and positive so every slope 0, 2, ..., 2k is achieved.
pub fn gammas_from_betas(betas: &[f64]) -> Result<Vec<f64>, Pgl2Error> {
    if betas.is_empty() {
        return Err(Pgl2Error::DegenerateLevels {
            reason: "empty exponent vector".into(),
        });
    }
    let gammas: Vec<f64> = betas.windows(2).map(|w| (w[0] - w[1]) / 2.0).collect();
    for &g in &gammas {
        if !(g > 0.0) || !g.is_finite() {
            return Err(Pgl2Error::DegenerateLevels {
                reason: format!("breakpoint {g} is not positive"),
            });
        }
    }
    if gammas.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Pgl2Error::DegenerateLevels {
            reason: "breakpoints are not strictly increasing, a slope is skipped".into(),
        });
    }
    Ok(gammas)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    /// Brute-force root scan of the max-plus polynomial max_j (b_j + 2jT):
    /// walks T in small steps and records where the active index changes,
    /// together with the slope jump at the change.
    fn scan_roots(betas: &[f64], t_max: f64, step: f64) -> Vec<(f64, usize)> {
        let value_and_arg = |t: f64| {
            let mut best = f64::NEG_INFINITY;
            let mut arg = 0usize;
            for (j, &b) in betas.iter().enumerate() {
                let v = b + 2.0 * j as f64 * t;
                if v > best {
                    best = v;
                    arg = j;
                }
            }
            (best, arg)
        };
        let mut roots = Vec::new();
        let mut t = 0.0;
        let (_, mut arg) = value_and_arg(t);
        while t < t_max {
            let t2 = t + step;
            let (_, arg2) = value_and_arg(t2);
            if arg2 != arg {
                // slope jump = 2 * (arg2 - arg); multiplicity = arg2 - arg
                roots.push(((t + t2) / 2.0, arg2 - arg));
                arg = arg2;
            }
            t = t2;
        }
        roots
    }

    #[test]
    fn single_level() {
        assert_eq!(betas_from_gammas(&[1.0]).unwrap(), vec![2.0, 0.0]);
        assert_eq!(gammas_from_betas(&[2.0, 0.0]).unwrap(), vec![1.0]);
    }

    #[test]
    fn two_levels() {
        // b_2 = 0, b_1 = 2*3 = 6, b_0 = 6 + 2*1 = 8
        assert_eq!(betas_from_gammas(&[1.0, 3.0]).unwrap(), vec![8.0, 6.0, 0.0]);
        assert_eq!(gammas_from_betas(&[8.0, 6.0, 0.0]).unwrap(), vec![1.0, 3.0]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            betas_from_gammas(&[3.0, 1.0]),
            Err(Pgl2Error::NotSorted)
        ));
        assert!(matches!(
            betas_from_gammas(&[-1.0]),
            Err(Pgl2Error::NonPositive)
        ));
        assert!(matches!(
            gammas_from_betas(&[0.0, 0.0]),
            Err(Pgl2Error::DegenerateLevels { .. })
        ));
    }

    #[test]
    fn brute_force_scan_recovers_double_roots() {
        let gammas = [0.8, 1.7, 2.4];
        let betas = betas_from_gammas(&gammas).unwrap();
        let roots = scan_roots(&betas, gammas[2] + 1.0, 1e-4);
        assert_eq!(roots.len(), gammas.len());
        for (found, expected) in roots.iter().zip(gammas.iter()) {
            assert!((found.0 - expected).abs() < 1e-3);
            assert_eq!(found.1, 1, "each breakpoint advances the slope by 2");
        }
    }

    #[test]
    fn round_trip_on_random_level_vectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let k = rng.gen_range(1..=5);
            let mut gammas: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..4.0)).collect();
            gammas.sort_by(|a, b| a.partial_cmp(b).unwrap());
            gammas.dedup_by(|a, b| (*a - *b).abs() < 1e-6);
            let betas = betas_from_gammas(&gammas).unwrap();
            let back = gammas_from_betas(&betas).unwrap();
            assert_eq!(back.len(), gammas.len());
            for (x, y) in back.iter().zip(gammas.iter()) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }
}
