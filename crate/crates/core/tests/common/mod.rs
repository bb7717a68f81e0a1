use proptest::prelude::*;
use twinphase::{Pulse, PulseSequence};

/// Random closed sequence: free Δk on all but the last two pulses, which are
/// solved so that Σ Δk = Σ t Δk = 0.
pub fn closed_sequence(times: &[f64], k_lower: &[f64], dk_free: &[f64]) -> PulseSequence {
    let n = times.len();
    assert!(n >= 3 && k_lower.len() == n && dk_free.len() == n - 2);
    let s0: f64 = dk_free.iter().sum();
    let s1: f64 = dk_free.iter().zip(times).map(|(d, t)| d * t).sum();
    let (ta, tb) = (times[n - 2], times[n - 1]);
    // dka + dkb = -s0, ta dka + tb dkb = -s1
    let dkb = (ta * s0 - s1) / (tb - ta);
    let dka = -s0 - dkb;
    let dk: Vec<f64> = dk_free.iter().copied().chain([dka, dkb]).collect();
    let pulses = (0..n).map(|i| Pulse::kick(times[i], k_lower[i] + dk[i], k_lower[i])).collect();
    PulseSequence::from_pulses(pulses).unwrap()
}

/// Strictly increasing times starting at 0, with gaps of at least `min_gap`.
pub fn times_strategy(n: std::ops::RangeInclusive<usize>, min_gap: f64, max_gap: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(min_gap..max_gap, n).prop_map(|gaps| {
        if gaps.is_empty() {
            return Vec::new();
        }
        let mut t = 0.0;
        let mut out = vec![0.0];
        for g in &gaps[1..] {
            t += g;
            out.push(t);
        }
        out
    })
}

pub fn closed_strategy() -> impl Strategy<Value = PulseSequence> {
    times_strategy(3..=8, 0.01, 0.1).prop_flat_map(|times| {
        let n = times.len();
        (
            Just(times),
            prop::collection::vec(-2e7..2e7f64, n),
            prop::collection::vec(-2e7..2e7f64, n - 2),
        )
            .prop_map(|(t, kl, dk)| closed_sequence(&t, &kl, &dk))
    })
}
