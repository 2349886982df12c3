//! Independent 1-d conservativeness oracle via Feller's explosion test for
//! the operator d/dx c(x) d/dx.
//!
//! With scale s(x) = int_0^x c(t)^{-1} dt and Lebesgue speed measure, the
//! boundary +inf is accessible (the diffusion explodes) iff
//! int^inf (s(inf) - s(x)) dx < inf. By Fubini this double integral reduces
//! to int^inf t / c(t) dt, so the oracle tests convergence of that single
//! integral. Convergence is judged from the ratio of increments over
//! doubling spans [T, 2T]: a convergent integral has geometrically shrinking
//! increments (ratio 2^{1-p} for an integrand ~ t^{-p}, p > 1), while the
//! borderline divergences 1/t and 1/(t log t) keep the ratio near 1. This
//! discriminates the log-corrected boundary growth c ~ x^2 log x
//! (conservative) from genuine super-quadratic growth (explosive), which a
//! pure tail-exponent fit cannot.

use super::AnalysisError;
use crate::coeff::ScalarFieldExpr;
use crate::numerics::{linear_fit, simpson_doubling};

/// Increment ratios below this mean geometric decay: explosive.
const EXPLOSIVE_RATIO: f64 = 0.7;
/// Increment ratios at or above this mean (at most) borderline divergence:
/// conservative. Between the two thresholds the oracle is inconclusive.
const CONSERVATIVE_RATIO: f64 = 0.8;
/// Number of doubling spans probed below the cutoff.
const DOUBLINGS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FellerVerdict {
    Conservative,
    Explosive,
    Inconclusive,
}

#[derive(Debug, Clone)]
pub struct FellerReport {
    pub verdict: FellerVerdict,
    /// Fitted power-law tail exponent of c at +inf (c ~ x^q), for context.
    pub tail_exponent_pos: f64,
    /// Same at -inf.
    pub tail_exponent_neg: f64,
    /// Geometric mean of the last increment ratios of int t/c dt, per side.
    pub increment_ratio_pos: f64,
    pub increment_ratio_neg: f64,
    pub cutoff: f64,
}

/// Evaluate c at sign*x, demanding strict positivity.
fn eval_c(c_expr: &ScalarFieldExpr, x: f64) -> Result<f64, AnalysisError> {
    let c = c_expr
        .eval(&[x])
        .map_err(|source| AnalysisError::Eval { x, source })?;
    if !(c > 0.0) {
        return Err(AnalysisError::Precondition(format!(
            "c({x}) = {c} is not strictly positive on the probe range"
        )));
    }
    Ok(c)
}

/// One side of the test: increment ratio of int t/c(sign t) dt over doubling
/// spans ending at the cutoff, plus the log-log tail exponent of c.
fn probe_side(
    c_expr: &ScalarFieldExpr,
    sign: f64,
    cutoff: f64,
) -> Result<(f64, f64), AnalysisError> {
    // Doubling spans [T_k, T_{k+1}], T_k = cutoff / 2^(DOUBLINGS - k).
    let mut increments = Vec::with_capacity(DOUBLINGS);
    let mut failed: Option<AnalysisError> = None;
    for k in 0..DOUBLINGS {
        let hi = cutoff / (1u64 << (DOUBLINGS - 1 - k)) as f64;
        let lo = hi / 2.0;
        let mut g = |t: f64| -> f64 {
            match eval_c(c_expr, sign * t) {
                Ok(c) => t / c,
                Err(e) => {
                    failed = Some(e);
                    0.0
                }
            }
        };
        let inc = simpson_doubling(&mut g, lo, hi, 1e-9);
        if let Some(e) = failed.take() {
            return Err(e);
        }
        increments.push(inc.max(0.0));
    }

    // Geometric mean of the last three increment ratios.
    let tail = &increments[DOUBLINGS - 4..];
    let mut ratio = 1.0;
    let mut count = 0;
    for w in tail.windows(2) {
        if w[0] > 0.0 && w[1] > 0.0 {
            ratio *= w[1] / w[0];
            count += 1;
        }
    }
    let ratio = if count > 0 {
        ratio.powf(1.0 / count as f64)
    } else {
        // Increments underflowed: the integral is certainly convergent.
        0.0
    };

    // Context exponent: slope of log c vs log x over the last decade.
    const SAMPLES: usize = 48;
    let lo = cutoff / 10.0;
    let r = (cutoff / lo).powf(1.0 / (SAMPLES - 1) as f64);
    let mut xs = Vec::with_capacity(SAMPLES);
    let mut ys = Vec::with_capacity(SAMPLES);
    for i in 0..SAMPLES {
        let x = lo * r.powi(i as i32);
        ys.push(eval_c(c_expr, sign * x)?.ln());
        xs.push(x.ln());
    }
    let (_, q, _) = linear_fit(&xs, &ys);
    Ok((ratio, q))
}

fn side_verdict(ratio: f64) -> FellerVerdict {
    if ratio < EXPLOSIVE_RATIO {
        FellerVerdict::Explosive
    } else if ratio >= CONSERVATIVE_RATIO {
        FellerVerdict::Conservative
    } else {
        FellerVerdict::Inconclusive
    }
}

/// Classify the diffusion generated by d/dx c(x) d/dx by probing both
/// infinities up to `cutoff`.
pub fn feller_oracle_1d(
    c_expr: &ScalarFieldExpr,
    cutoff: f64,
) -> Result<FellerReport, AnalysisError> {
    if c_expr.dimension() != 1 {
        return Err(AnalysisError::Precondition(format!(
            "Feller oracle needs a 1-d coefficient, got dimension {}",
            c_expr.dimension()
        )));
    }
    if !(cutoff > 10.0) {
        return Err(AnalysisError::Precondition(format!(
            "cutoff must exceed 10 for a meaningful tail probe, got {cutoff}"
        )));
    }

    let (r_pos, q_pos) = probe_side(c_expr, 1.0, cutoff)?;
    let (r_neg, q_neg) = probe_side(c_expr, -1.0, cutoff)?;
    let v_pos = side_verdict(r_pos);
    let v_neg = side_verdict(r_neg);

    // Explosion through either boundary makes the process explosive.
    let verdict = match (v_pos, v_neg) {
        (FellerVerdict::Explosive, _) | (_, FellerVerdict::Explosive) => FellerVerdict::Explosive,
        (FellerVerdict::Inconclusive, _) | (_, FellerVerdict::Inconclusive) => {
            FellerVerdict::Inconclusive
        }
        _ => FellerVerdict::Conservative,
    };

    Ok(FellerReport {
        verdict,
        tail_exponent_pos: q_pos,
        tail_exponent_neg: q_neg,
        increment_ratio_pos: r_pos,
        increment_ratio_neg: r_neg,
        cutoff,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn expr(text: &str) -> ScalarFieldExpr {
        ScalarFieldExpr::parse(text, 1).unwrap()
    }

    #[test]
    fn constant_coefficient_is_conservative() {
        let r = feller_oracle_1d(&expr("1"), 100.0).unwrap();
        assert_eq!(r.verdict, FellerVerdict::Conservative);
        assert!(r.tail_exponent_pos.abs() < 0.01);
    }

    #[test]
    fn quartic_growth_is_explosive() {
        let r = feller_oracle_1d(&expr("(1+x1^2)^2"), 200.0).unwrap();
        assert_eq!(r.verdict, FellerVerdict::Explosive);
        assert!(r.tail_exponent_pos > 3.5);
        assert!(r.increment_ratio_pos < 0.3);
    }

    #[test]
    fn boundary_growth_is_conservative() {
        // c = (1+|x|)^2: the Feller integrand ~ 1/t, harmonic divergence.
        let r = feller_oracle_1d(&expr("(1+abs(x1))^2"), 200.0).unwrap();
        assert_eq!(r.verdict, FellerVerdict::Conservative);
        assert!((r.tail_exponent_pos - 2.0).abs() < 0.1);
    }

    #[test]
    fn tikhonov_boundary_growth_is_conservative() {
        // c ~ x^2 log x: integrand ~ 1/(t log t), still divergent.
        let r = feller_oracle_1d(&expr("(1+abs(x1))^2*log(2+abs(x1))"), 500.0).unwrap();
        assert_eq!(r.verdict, FellerVerdict::Conservative);
    }

    #[test]
    fn cubic_growth_is_explosive() {
        let r = feller_oracle_1d(&expr("(1+abs(x1))^3"), 200.0).unwrap();
        assert_eq!(r.verdict, FellerVerdict::Explosive);
    }

    #[test]
    fn one_sided_explosion_suffices() {
        let r = feller_oracle_1d(&expr("1+max(0,x1)^4"), 200.0).unwrap();
        assert_eq!(r.verdict, FellerVerdict::Explosive);
    }

    #[test]
    fn exponential_growth_is_explosive() {
        // int t e^{-t} dt converges: genuinely explosive.
        let r = feller_oracle_1d(&expr("exp(abs(x1))"), 50.0).unwrap();
        assert_eq!(r.verdict, FellerVerdict::Explosive);
    }

    #[test]
    fn nonpositive_coefficient_rejected() {
        assert!(feller_oracle_1d(&expr("x1"), 100.0).is_err());
        assert!(feller_oracle_1d(&expr("1"), 5.0).is_err());
    }
}
