use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// Exact bit error rate of Gray-coded square 16-QAM in AWGN.
pub fn ber_16qam_gray(esn0_db: f64) -> f64 {
    let d = (10f64.powf(esn0_db / 10.0) / 5.0).sqrt();
    0.25 * (3.0 * q_function(d) + 2.0 * q_function(3.0 * d) - q_function(5.0 * d))
}

/// Es/N0 in dB at which [`ber_16qam_gray`] equals `ber`.
pub fn esn0_for_ber_16qam(ber: f64) -> Result<f64> {
    if !(ber > 0.0 && ber < 0.375) {
        return Err(Error::Config(format!("target BER {ber} outside (0, 0.375)")));
    }
    let (mut lo, mut hi) = (-10.0, 60.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ber_16qam_gray(mid) > ber {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BerCount {
    pub bits: u64,
    pub errors: u64,
}

impl BerCount {
    pub fn ber(&self) -> f64 {
        if self.bits == 0 {
            f64::NAN
        } else {
            self.errors as f64 / self.bits as f64
        }
    }

    pub fn merge(self, other: BerCount) -> BerCount {
        BerCount {
            bits: self.bits + other.bits,
            errors: self.errors + other.errors,
        }
    }
}

/// Search settings for the SNR at which a system reaches a target BER.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SnrSearch {
    pub target_ber: f64,
    /// Half-width of the final bracket in dB.
    pub tol_db: f64,
    /// Initial bracket relative to the closed-form requirement.
    pub below_db: f64,
    pub above_db: f64,
    /// Upper bracket edge is pushed out in steps of `above_db` up to this
    /// many dB above the closed-form requirement; a system still above
    /// target there has an error floor and an infinite requirement.
    pub max_above_db: f64,
    /// Relative BER slack before a bisection estimate outside the bracket
    /// values counts as non-monotone.
    pub monotone_slack: f64,
}

impl Default for SnrSearch {
    fn default() -> Self {
        Self {
            target_ber: 1e-3,
            tol_db: 0.05,
            below_db: 1.0,
            above_db: 4.0,
            max_above_db: 24.0,
            monotone_slack: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnrResult {
    /// Required Es/N0 in dB, `inf` if the target is never reached.
    pub esn0_db: f64,
    /// Every evaluated point `(Es/N0 dB, count)` in evaluation order.
    pub evaluations: Vec<(f64, BerCount)>,
}

/// Es/N0 at which `eval` crosses `cfg.target_ber`, to within `cfg.tol_db`.
///
/// Bisects on the dB axis, then interpolates `log BER` linearly inside the
/// final bracket. `eval` is expected to reuse one noise realization so the
/// estimates are monotone.
pub fn required_snr(cfg: &SnrSearch, mut eval: impl FnMut(f64) -> Result<BerCount>) -> Result<SnrResult> {
    let centre = esn0_for_ber_16qam(cfg.target_ber)?;
    let mut evaluations = Vec::new();
    let mut run = |db: f64, evals: &mut Vec<(f64, BerCount)>| -> Result<f64> {
        let c = eval(db)?;
        evals.push((db, c));
        Ok(c.ber())
    };
    let mut lo = centre - cfg.below_db;
    let mut b_lo = run(lo, &mut evaluations)?;
    let mut hi = centre + cfg.above_db;
    let mut b_hi = run(hi, &mut evaluations)?;
    if b_lo < cfg.target_ber {
        return Err(Error::BracketNotStraddling {
            lo_db: lo,
            hi_db: hi,
            target: cfg.target_ber,
            ber_lo: b_lo,
            ber_hi: b_hi,
        });
    }
    while b_hi > cfg.target_ber {
        if hi >= centre + cfg.max_above_db {
            return Ok(SnrResult {
                esn0_db: f64::INFINITY,
                evaluations,
            });
        }
        lo = hi;
        b_lo = b_hi;
        hi = (hi + cfg.above_db).min(centre + cfg.max_above_db);
        b_hi = run(hi, &mut evaluations)?;
    }
    while hi - lo > 2.0 * cfg.tol_db {
        let mid = 0.5 * (lo + hi);
        let b = run(mid, &mut evaluations)?;
        let slack = 1.0 + cfg.monotone_slack;
        if b > b_lo * slack || b * slack < b_hi {
            return Err(Error::NonMonotone(format!(
                "BER {b:e} at {mid:.3} dB outside [{b_hi:e}, {b_lo:e}] of its bracket [{lo:.3}, {hi:.3}]"
            )));
        }
        if b > cfg.target_ber {
            lo = mid;
            b_lo = b;
        } else {
            hi = mid;
            b_hi = b;
        }
    }
    let esn0_db = if b_hi > 0.0 && b_lo > b_hi {
        let (l_lo, l_hi, l_t) = (b_lo.ln(), b_hi.ln(), cfg.target_ber.ln());
        lo + (hi - lo) * (l_lo - l_t) / (l_lo - l_hi)
    } else {
        0.5 * (lo + hi)
    };
    Ok(SnrResult { esn0_db, evaluations })
}

/// `required - reference` in dB; infinite when the system never reaches
/// the target.
pub fn penalty_db(required_db: f64, reference_db: f64) -> f64 {
    required_db - reference_db
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_reference_points() {
        // high-SNR limit: 3/4 Q(d)
        let d = (10f64.powf(2.0) / 5.0).sqrt();
        assert!((ber_16qam_gray(20.0) / (0.75 * q_function(d)) - 1.0).abs() < 1e-3);
        assert!((q_function(0.0) - 0.5).abs() < 1e-15);
        assert!((q_function(3.090232306167813) - 1e-3).abs() < 1e-12);
        let req = esn0_for_ber_16qam(1e-3).unwrap();
        assert!((ber_16qam_gray(req) - 1e-3).abs() < 1e-12);
        assert!((16.0..17.0).contains(&req), "{req}");
    }

    #[test]
    fn counts() {
        let c = BerCount { bits: 1000, errors: 3 };
        assert_eq!(c.ber(), 3e-3);
        assert_eq!(c.merge(c), BerCount { bits: 2000, errors: 6 });
        assert!(BerCount::default().ber().is_nan());
    }

    fn synthetic(shift_db: f64) -> impl FnMut(f64) -> Result<BerCount> {
        move |db| {
            let bits = 1u64 << 40;
            Ok(BerCount {
                bits,
                errors: (ber_16qam_gray(db - shift_db) * bits as f64).round() as u64,
            })
        }
    }

    #[test]
    fn search_finds_closed_form_requirement() {
        let cfg = SnrSearch::default();
        let base = required_snr(&cfg, synthetic(0.0)).unwrap();
        let req = esn0_for_ber_16qam(1e-3).unwrap();
        assert!((base.esn0_db - req).abs() < 0.05, "{} {req}", base.esn0_db);
        let shifted = required_snr(&cfg, synthetic(7.3)).unwrap();
        assert!((penalty_db(shifted.esn0_db, base.esn0_db) - 7.3).abs() < 0.05);
    }

    #[test]
    fn error_floor_gives_infinite_requirement() {
        let r = required_snr(&SnrSearch::default(), |_| Ok(BerCount { bits: 1000, errors: 10 })).unwrap();
        assert_eq!(r.esn0_db, f64::INFINITY);
    }

    #[test]
    fn bracket_and_monotonicity_errors() {
        let r = required_snr(&SnrSearch::default(), |_| Ok(BerCount { bits: 1000, errors: 0 }));
        assert!(matches!(r, Err(Error::BracketNotStraddling { .. })));
        let mut calls = 0;
        let r = required_snr(&SnrSearch::default(), |db| {
            calls += 1;
            let errors = if calls == 3 { 900 } else if db < 17.0 { 2 } else { 0 };
            Ok(BerCount { bits: 1000, errors })
        });
        assert!(matches!(r, Err(Error::NonMonotone(_))));
    }
}
