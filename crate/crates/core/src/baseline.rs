//! Uniform inter-beam power allocation with SINR-priority association.

use alloc::vec;
use alloc::vec::Vec;

/// Splits `max_power_w` evenly (linear domain) over `num_beams` beams.
pub fn upa_powers(max_power_w: f64, num_beams: usize) -> Vec<f64> {
    if num_beams == 0 {
        return Vec::new();
    }
    vec![max_power_w / num_beams as f64; num_beams]
}

/// gNB with the highest SINR estimate; ties go to the lower id.
pub fn sinr_priority_association(estimates: &[f64]) -> usize {
    let mut best = 0;
    for (j, &s) in estimates.iter().enumerate().skip(1) {
        if s > estimates[best] {
            best = j;
        }
    }
    best
}

/// Re-associates only the users flagged in `eligible`; others keep `current`.
pub fn reassociate(current: &[usize], eligible: &[bool], estimates: &[Vec<f64>]) -> Vec<usize> {
    current
        .iter()
        .zip(eligible)
        .zip(estimates)
        .map(|((&c, &e), est)| if e { sinr_priority_association(est) } else { c })
        .collect()
}
