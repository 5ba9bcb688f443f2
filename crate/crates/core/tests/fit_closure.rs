//! Fits to sampled late-time pair-channel data.

use kaonlab::inference::{fit_intensity, FitParam, FitSetup};
use kaonlab::rng::Stream;
use kaonlab::sampler::{sample_law_after, BinnedCounts};
use kaonlab::single::{Channel, DecayLaw, SuperpositionState};
use kaonlab::{DecayModel, KaonParams};

fn late_counts(p: &KaonParams, n: usize, seed: u64) -> BinnedCounts {
    let (a, b) = (12.0 * p.tau_s(), 6.0 * p.tau_l());
    let law = DecayLaw::new(DecayModel::TimeOperator, &SuperpositionState::kaon_channel(p, Channel::Pair)).unwrap();
    let times = sample_law_after(&law, a, n, seed, Stream::DECAY_TIMES).unwrap();
    let bins = 8000;
    let edges: Vec<f64> = (0..=bins).map(|i| a + (b - a) * i as f64 / bins as f64).collect();
    BinnedCounts::histogram(edges, &times, &[]).unwrap()
}

const FREE: [FitParam; 3] = [FitParam::EpsilonAbs, FitParam::EpsilonArg, FitParam::I0];

#[test]
fn time_operator_data_recover_epsilon() {
    let p = KaonParams::default();
    let counts = late_counts(&p, 1_000_000, 21);
    let fit = fit_intensity(&counts, &FitSetup::new(DecayModel::TimeOperator, p, &FREE)).unwrap();
    let sigma = fit.sigma(FitParam::EpsilonAbs).unwrap();
    let truth = p.epsilon().norm();
    assert!((fit.epsilon_abs - truth).abs() <= 3.0 * sigma, "{} +- {sigma} vs {truth}", fit.epsilon_abs);
    assert!(fit.unconstrained.is_empty(), "{:?}", fit.unconstrained);

    let standard = fit_intensity(&counts, &FitSetup::new(DecayModel::Standard, p, &FREE)).unwrap();
    let gap = standard.neg_log_likelihood - fit.neg_log_likelihood;
    assert!(gap > 10.0, "likelihood gap {gap}");
}

#[test]
fn error_shrinks_with_sample_size() {
    let p = KaonParams::default();
    let truth = p.epsilon().norm();
    let sigmas: Vec<f64> = [10_000, 100_000, 1_000_000]
        .iter()
        .map(|&n| {
            let fit = fit_intensity(&late_counts(&p, n, 5), &FitSetup::new(DecayModel::TimeOperator, p, &FREE)).unwrap();
            let s = fit.sigma(FitParam::EpsilonAbs).unwrap();
            assert!((fit.epsilon_abs - truth).abs() <= 4.0 * s, "n={n}: {} +- {s}", fit.epsilon_abs);
            s
        })
        .collect();
    assert!(sigmas.windows(2).all(|w| w[1] < 0.5 * w[0]), "{sigmas:?}");
}
