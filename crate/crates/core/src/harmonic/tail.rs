use crate::error::{Error, Result};

/// `Pr[X ≥ threshold]` for `X ~ B(trials, q)`.
///
/// Terms are formed in log space from a log-factorial table and combined
/// with a log-sum-exp around the largest term, so the result keeps full
/// double precision even for thousands of trials.
pub fn binomial_upper_tail(trials: usize, threshold: usize, q: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidArgument(format!("probability {q} outside [0, 1]")));
    }
    if threshold == 0 {
        return Ok(1.0);
    }
    if threshold > trials {
        return Ok(0.0);
    }
    if q == 0.0 {
        return Ok(0.0);
    }
    if q == 1.0 {
        return Ok(1.0);
    }

    let mut ln_fact = Vec::with_capacity(trials + 1);
    ln_fact.push(0.0_f64);
    for i in 1..=trials {
        let prev = ln_fact[i - 1];
        ln_fact.push(prev + (i as f64).ln());
    }
    let (ln_q, ln_p) = (q.ln(), (-q).ln_1p());
    let ln_terms: Vec<f64> = (threshold..=trials)
        .map(|i| ln_fact[trials] - ln_fact[i] - ln_fact[trials - i] + i as f64 * ln_q + (trials - i) as f64 * ln_p)
        .collect();
    let peak = ln_terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scaled: f64 = ln_terms.iter().map(|t| (t - peak).exp()).sum();
    Ok((peak + scaled.ln()).exp().min(1.0))
}

/// Probability that at least `λM` of the `λ(M+R)` coded packets of one
/// first-slot position set survive independent loss with probability `p_e`.
pub fn first_slot_success_prob(m: usize, r: usize, lambda: usize, p_e: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p_e) {
        return Err(Error::InvalidArgument(format!("loss probability {p_e} outside [0, 1]")));
    }
    if m == 0 || lambda == 0 {
        return Err(Error::InvalidArgument("M and lambda must be positive".into()));
    }
    binomial_upper_tail(lambda * (m + r), lambda * m, 1.0 - p_e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edges() {
        assert_eq!(first_slot_success_prob(7, 1, 3, 0.0).unwrap(), 1.0);
        assert_eq!(first_slot_success_prob(7, 1, 3, 1.0).unwrap(), 0.0);
        assert!(first_slot_success_prob(7, 1, 3, -0.1).is_err());
        assert!(first_slot_success_prob(7, 1, 3, 1.1).is_err());
        assert_eq!(binomial_upper_tail(5, 0, 0.3).unwrap(), 1.0);
        assert_eq!(binomial_upper_tail(5, 6, 0.3).unwrap(), 0.0);
    }

    #[test]
    fn closed_form_single_redundancy() {
        // 0.9^8 + 8 * 0.9^7 * 0.1
        let expect = 0.9_f64.powi(8) + 8.0 * 0.9_f64.powi(7) * 0.1;
        let got = first_slot_success_prob(7, 1, 1, 0.1).unwrap();
        assert!((got - expect).abs() < 1e-14);
    }

    #[test]
    fn no_redundancy_needs_everything() {
        let got = first_slot_success_prob(4, 0, 2, 0.05).unwrap();
        assert!((got - 0.95_f64.powi(8)).abs() < 1e-14);
    }
}
