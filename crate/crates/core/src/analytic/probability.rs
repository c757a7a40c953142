//! Traffic, contention and retry-lattice probabilities.

/// Probability that a packet of a flow with mean inter-arrival
/// `mean_interval` is pending in a DTIM period of length `t`.
pub fn packet_probability(t: f64, mean_interval: f64) -> f64 {
    (t / mean_interval).min(1.0)
}

/// Probability that a PS-Poll/RTS collides when `n_sta_group` stations share
/// the group and each has traffic with probability `p`.
///
/// The group size may be fractional.
pub fn collision_probability(p: f64, n_sta_group: f64, cw_min: u32) -> f64 {
    let others = n_sta_group - 1.0;
    if p <= 0.0 || others <= 0.0 {
        return 0.0;
    }
    // 1 - (1 - p/CW)^(N-1), evaluated in the log domain.
    -f64::exp_m1(others * f64::ln_1p(-p / cw_min as f64))
}

pub(crate) fn binomial(n: u32, k: u32) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, t| acc * (n - t) as f64 / (t + 1) as f64)
}

/// Probability of delivering after exactly `i` collisions and `j` DATA errors.
pub fn success_probability(i: u32, j: u32, p_c: f64, p_e: f64, p_w: f64) -> f64 {
    binomial(i + j, i)
        * p_c.powi(i as i32)
        * p_e.powi(j as i32)
        * (1.0 - p_c).powi(j as i32 + 1)
        * (1.0 - p_e)
        * p_w
}

/// Probability of reaching the `(i, j)` lattice point without delivering.
/// At `j = m_err` or `i = m_col` this is the drop probability.
pub fn no_success_probability(i: u32, j: u32, p_c: f64, p_e: f64, p_w: f64) -> f64 {
    binomial(i + j, i) * p_c.powi(i as i32) * p_e.powi(j as i32) * (1.0 - p_c).powi(j as i32) * p_w
}

/// Probability of being dropped on the `m_err`-th DATA error after `i`
/// collisions. The final error is the last event, so only the first
/// `i + m_err - 1` attempts are reordered.
pub fn error_drop_probability(i: u32, m_err: u32, p_c: f64, p_e: f64, p_w: f64) -> f64 {
    binomial(i + m_err - 1, i)
        * p_c.powi(i as i32)
        * (p_e * (1.0 - p_c)).powi(m_err as i32)
        * p_w
}

/// Probability of being dropped on the `m_col`-th collision after `j` errors.
pub fn collision_drop_probability(m_col: u32, j: u32, p_c: f64, p_e: f64, p_w: f64) -> f64 {
    binomial(m_col - 1 + j, j) * p_c.powi(m_col as i32) * (p_e * (1.0 - p_c)).powi(j as i32) * p_w
}
