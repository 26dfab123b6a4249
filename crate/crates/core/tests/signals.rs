//! DAC law, noise synthesis and the measurement pipelines.

use proptest::prelude::*;
use qpower_twin::dac::{DacTransfer, MAX_CODE};
use qpower_twin::metrology::{
    bandlimit, peak_to_peak, rms, run_crosstalk_protocol, spectrum_dbm, welch_asd, CrosstalkSweep,
};
use qpower_twin::noise::{
    dbm_to_peak_volts, synthesize_drift, synthesize_noise, AsdModel, DriftModel, Spur, Trace,
};
use qpower_twin::par;
use qpower_twin::twin::{Channel, InstrumentState, LocalTwin, TwinConfig};

#[test]
fn lsb_for_seven_volt_refs() {
    let dac = DacTransfer::symmetric(7.0);
    // 14 V over 2^20 - 1 steps.
    assert!((dac.lsb() - 14.0 / 1_048_575.0).abs() < 1e-20);
    assert!((dac.lsb() * 1e6 - 13.3515).abs() < 1e-4);
}

#[test]
fn endpoint_slices_round_trip() {
    let dac = DacTransfer::symmetric(7.0);
    for d in (0..4096).chain(MAX_CODE - 4095..=MAX_CODE) {
        let v = dac.code_to_voltage(d).unwrap();
        assert_eq!(dac.voltage_to_code(v).unwrap(), d);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn quantizer_error_at_most_half_lsb(v in -7.0f64..=7.0) {
        let dac = DacTransfer::symmetric(7.0);
        let q = dac.quantize(v).unwrap();
        prop_assert!((q - v).abs() <= 0.5 * dac.lsb() * (1.0 + 1e-9));
    }

    #[test]
    fn code_law_monotone(d in 0u32..MAX_CODE) {
        let dac = DacTransfer::symmetric(7.0);
        prop_assert!(dac.code_to_voltage(d + 1).unwrap() > dac.code_to_voltage(d).unwrap());
    }

    #[test]
    fn asymmetric_refs_round_trip(p in 0.5f64..10.0, n in -10.0f64..0.0, d in 0u32..=MAX_CODE) {
        let dac = DacTransfer::new(p, n).unwrap();
        prop_assert_eq!(dac.voltage_to_code(dac.code_to_voltage(d).unwrap()).unwrap(), d);
    }

    #[test]
    fn synthesis_is_seed_deterministic(seed in any::<u64>(), n in 16usize..512) {
        let m = AsdModel::default_output().with_spurs(AsdModel::example_spurs());
        let a = synthesize_noise(&m, 500e6, n, seed).unwrap();
        let b = synthesize_noise(&m, 500e6, n, seed).unwrap();
        prop_assert_eq!(a.samples, b.samples);
    }

    #[test]
    fn synthesized_records_have_zero_mean(seed in any::<u64>(), n in 16usize..4096) {
        let tr = synthesize_noise(&AsdModel::default_output(), 1e6, n, seed).unwrap();
        prop_assert!(tr.mean().abs() < 1e-20);
    }

    #[test]
    fn pkpk_and_rms_bounds(xs in prop::collection::vec(-1.0f64..1.0, 2..200)) {
        let tr = Trace::new(1.0, 0.0, xs).unwrap();
        let p = peak_to_peak(&tr).unwrap();
        let r = rms(&tr, true);
        // A zero-mean record's rms never exceeds half its swing.
        prop_assert!(r <= 0.5 * p + 1e-12);
        prop_assert!(p >= 0.0);
    }
}

#[test]
fn seeds_decorrelate() {
    let m = AsdModel::default_output();
    let a = synthesize_noise(&m, 1e6, 1 << 14, 1).unwrap();
    let b = synthesize_noise(&m, 1e6, 1 << 14, 2).unwrap();
    let dot: f64 = a.samples.iter().zip(&b.samples).map(|(x, y)| x * y).sum();
    let rho = dot / (rms(&a, false) * rms(&b, false) * a.len() as f64);
    assert!(rho.abs() < 0.05, "{rho}");
}

#[test]
fn parseval_closure() {
    for (fs, n, seg) in [(50e6, 1 << 18, 1 << 12), (1e6, 1 << 16, 1 << 10)] {
        let m = AsdModel::white(15e-9, fs / 2.0);
        let tr = synthesize_noise(&m, fs, n, 9).unwrap();
        let ms = rms(&tr, false).powi(2);
        let welch = welch_asd(&tr, seg).unwrap().total_power();
        assert!((welch / ms - 1.0).abs() < 0.02, "{welch} vs {ms}");
        // The synthesized power equals the model's band power.
        assert!((ms / m.band_power(0.0, fs / 2.0) - 1.0).abs() < 0.01);
    }
}

#[test]
fn white_welch_floor() {
    // Unit-variance white noise has one-sided ASD sqrt(2 / fs).
    let fs: f64 = 1e5;
    let m = AsdModel::white((2.0 / fs).sqrt(), fs / 2.0);
    let tr = synthesize_noise(&m, fs, 1 << 18, 4).unwrap();
    assert!((rms(&tr, false) - 1.0).abs() < 0.01);
    let est = welch_asd(&tr, 1 << 11).unwrap();
    let mid: Vec<f64> = est
        .freqs
        .iter()
        .zip(&est.asd)
        .filter(|(f, _)| **f > 1e3 && **f < 4e4)
        .map(|(_, a)| *a)
        .collect();
    let mean = mid.iter().sum::<f64>() / mid.len() as f64;
    let db = 20.0 * (mean / (2.0 / fs).sqrt()).log10();
    assert!(db.abs() < 1.0, "{db} dB");
}

#[test]
fn synthesized_spectrum_tracks_model() {
    let m = AsdModel::default_output();
    let fs = 1e6;
    let tr = synthesize_noise(&m, fs, 1 << 20, 8).unwrap();
    let est = welch_asd(&tr, 1 << 14).unwrap();
    for f in [300.0, 3e3, 30e3, 200e3, 400e3] {
        let got = qpower_twin::bench::band_asd(&est, f * 0.9, f * 1.1);
        let want = m.asd(f);
        let db = 20.0 * (got / want).log10();
        assert!(db.abs() < 1.0, "{f} Hz: {db:+.2} dB");
    }
}

#[test]
fn spur_power_in_dbm() {
    // A -100 dBm line read back through the Hann window.
    let fs = 500e6;
    let n = 1 << 18;
    let seg = 1 << 14;
    // Bin-centered so scalloping does not enter.
    let freq = 1000.0 * fs / seg as f64;
    let m = AsdModel::zero().with_spurs(vec![Spur {
        freq,
        amplitude: dbm_to_peak_volts(-100.0, 50.0),
    }]);
    let tr = synthesize_noise(&m, fs, n, 1).unwrap();
    let spec = spectrum_dbm(&tr, 50.0, seg).unwrap();
    let (f, dbm) = spec.max_in(1e6, 200e6).unwrap();
    assert!((f - freq).abs() < 1.0);
    // RBW is the window's noise bandwidth, so a centered line reads its
    // full power.
    assert!((dbm + 100.0).abs() < 0.01, "{dbm}");
    assert!((spec.rbw - 1.5 * fs / seg as f64).abs() < 1e-6);
}

#[test]
fn ou_stationary_statistics() {
    let m = DriftModel::new(2e-6, 50.0).unwrap();
    let dt = 5.0;
    let paths = par::map_range(200, |s| {
        synthesize_drift(&m, 20_000.0, dt, s as u64).unwrap()
    });
    let (mut sxx, mut sxy, mut count) = (0.0, 0.0, 0usize);
    for p in &paths {
        for w in p.samples.windows(2) {
            sxx += w[0] * w[0];
            sxy += w[0] * w[1];
            count += 1;
        }
    }
    let var = sxx / count as f64;
    assert!((var / m.sigma.powi(2) - 1.0).abs() < 0.1, "{var}");
    let rho = sxy / sxx;
    assert!((rho - (-dt / m.tau).exp()).abs() < 0.02, "{rho}");
}

#[test]
fn bandlimit_keeps_inband_tones() {
    let fs = 50e6;
    let n = 1 << 14;
    let tones = [0.5e6, 1.0e6, 2.0e6];
    let samples: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 / fs;
            tones
                .iter()
                .map(|f| (std::f64::consts::TAU * f * t).sin())
                .sum()
        })
        .collect();
    let tr = Trace::new(fs, 0.0, samples).unwrap();
    let once = bandlimit(&tr, 20e6).unwrap();
    let twice = bandlimit(&once, 20e6).unwrap();
    let db = 20.0 * (rms(&twice, false) / rms(&once, false)).log10();
    assert!(db.abs() < 0.01, "{db}");
}

#[test]
fn bandlimit_attenuates_out_of_band() {
    let fs = 100e6;
    let n = 1 << 12;
    let k = 1600; // ~39 MHz, about a factor 2 above a 20 MHz corner
    let samples: Vec<f64> = (0..n)
        .map(|i| (std::f64::consts::TAU * k as f64 * i as f64 / n as f64).cos())
        .collect();
    let tr = Trace::new(fs, 0.0, samples).unwrap();
    let f = k as f64 * fs / n as f64;
    let out = bandlimit(&tr, 20e6).unwrap();
    let gain = rms(&out, false) / rms(&tr, false);
    let want = 1.0 / (1.0 + (f / 20e6).powi(8)).sqrt();
    assert!((gain / want - 1.0).abs() < 1e-6);
}

#[test]
fn crosstalk_protocol_direction_invariant() {
    let make = || {
        let mut cfg = TwinConfig::quiet();
        cfg.crosstalk.kappa = 1e-6;
        LocalTwin::new(InstrumentState::new(cfg).unwrap())
    };
    let up = run_crosstalk_protocol(
        &mut make(),
        &CrosstalkSweep::new(Channel::ONE, Channel::TWO, -7.0, 7.0, 0.5),
    )
    .unwrap();
    let down = run_crosstalk_protocol(
        &mut make(),
        &CrosstalkSweep::new(Channel::ONE, Channel::TWO, 7.0, -7.0, 0.5),
    )
    .unwrap();
    assert!((up.kappa_est / 1e-6 - 1.0).abs() < 1e-6);
    assert!((up.kappa_est - down.kappa_est).abs() < 1e-12);
    assert!((up.victim_pkpk - down.victim_pkpk).abs() < 1e-15);
}

#[test]
fn crosstalk_restores_aggressor() {
    let mut twin = LocalTwin::new(InstrumentState::new(TwinConfig::default()).unwrap());
    twin.state.set_voltage(Channel::TWO, 1.25).unwrap();
    let before = twin.state.get_voltage(Channel::TWO);
    let sweep = CrosstalkSweep::new(Channel::TWO, Channel::ONE, 0.0, 2.0, 0.5);
    run_crosstalk_protocol(&mut twin, &sweep).unwrap();
    assert_eq!(twin.state.get_voltage(Channel::TWO), before);
}

#[test]
fn crosstalk_needs_three_points() {
    let mut twin = LocalTwin::new(InstrumentState::new(TwinConfig::quiet()).unwrap());
    let sweep = CrosstalkSweep::new(Channel::ONE, Channel::TWO, 0.0, 0.1, 0.1);
    assert!(run_crosstalk_protocol(&mut twin, &sweep).is_err());
}

#[test]
fn trace_csv_format() {
    let tr = synthesize_noise(&AsdModel::default_output(), 1e6, 64, 3).unwrap();
    let mut buf = Vec::new();
    tr.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "# fs=1000000 unit=V t0=0");
    assert_eq!(lines.count(), 64);
    let back = Trace::read_csv(text.as_bytes()).unwrap();
    assert_eq!(back.len(), 64);
}
