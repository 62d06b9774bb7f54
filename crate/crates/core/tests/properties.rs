//! Invariants of the precoders and metrics on random inputs.

use num_complex::Complex64;
use proptest::prelude::*;

use ofdm_precode::metrics::{evm, PsdAccumulator};
use ofdm_precode::precoders::{
    admm_precode, dykstra_oracle, max_violation_db, pocs_precode, project_rank1, sherman_morrison_apply, ssp_precode,
    Rank1Constraint,
};
use ofdm_precode::runner::{prepare_with, precode_symbol, simulate, with_threads};
use ofdm_precode::scenario::{parse_scenario, AlgorithmKind};
use ofdm_precode::signal::{ofdm_modulate, CarrierConfig};
use ofdm_precode::{build_leakage_matrix, PowerCalibration};

fn cvec(n: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n).prop_map(|v| v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect())
}

/// `d` and `m` constraints it violates by factors in `[0.05, 0.9]`.
fn instance(n: usize, m: usize) -> impl Strategy<Value = (Vec<Complex64>, Vec<Rank1Constraint>)> {
    (cvec(n), prop::collection::vec((cvec(n), 0.05f64..0.9), m)).prop_filter_map("degenerate", |(d, us)| {
        let cs: Option<Vec<_>> = us
            .into_iter()
            .map(|(u, f)| {
                let probe = Rank1Constraint::new(u.clone(), 1.0).ok()?;
                let s = probe.inner(&d).norm_sqr();
                (s > 1e-6).then(|| Rank1Constraint::new(u, s * f).unwrap())
            })
            .collect();
        Some((d, cs?))
    })
}

fn objective(d: &[Complex64], x: &[Complex64]) -> f64 {
    d.iter().zip(x).map(|(a, b)| (a - b).norm_sqr()).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn projection_is_nonexpansive((a, b, cs) in (cvec(12), cvec(12), instance(12, 1).prop_map(|(_, c)| c))) {
        let pa = project_rank1(&a, &cs[0]);
        let pb = project_rank1(&b, &cs[0]);
        prop_assert!(objective(&pa, &pb) <= objective(&a, &b) * (1.0 + 1e-12) + 1e-24);
    }

    #[test]
    fn oracle_is_feasible_and_no_worse_than_pocs((d, cs) in instance(10, 3)) {
        let o = dykstra_oracle(&cs, &d, 100_000, 1e-13).unwrap();
        prop_assert!(max_violation_db(&cs, &o.d_bar) <= 1e-6);
        let p = pocs_precode(&cs, &d, 20_000, 1e-9).unwrap();
        prop_assert!(objective(&d, &o.d_bar) <= objective(&d, &p.d_bar) * (1.0 + 1e-9));
    }

    #[test]
    fn ssp_converges_to_the_oracle((d, cs) in instance(10, 3)) {
        let s = ssp_precode(&cs, &d, 2000).unwrap();
        let o = dykstra_oracle(&cs, &d, 100_000, 1e-13).unwrap();
        prop_assert!(s.max_violation_db.unwrap() <= 1e-3);
        prop_assert!((s.evm_pct - o.evm_pct).abs() <= 1e-3 * o.evm_pct);
        prop_assert_eq!(s.diagnostics.dense_inversions, 0);
    }

    #[test]
    fn admm_trace_is_complete((d, cs) in instance(8, 2)) {
        let r = admm_precode(&cs, &d, 10.0, 300, f64::NEG_INFINITY).unwrap();
        prop_assert_eq!(r.iterations, 300);
        prop_assert_eq!(r.trace.len(), 300);
        prop_assert!(r.trace.records().iter().all(|rec| rec.primal_residual.is_some()));
    }

    #[test]
    fn sherman_morrison_matches_dense_inverse(u in cvec(6), delta in 0.01f64..5.0) {
        let g = nalgebra::DMatrix::<Complex64>::identity(6, 6);
        let uv = nalgebra::DVector::from_vec(u.clone());
        let updated = sherman_morrison_apply(&g, &u, delta).unwrap();
        let direct = (g + uv.clone() * uv.adjoint() * Complex64::from(delta)).try_inverse().unwrap();
        let err = (updated - direct).iter().map(|v| v.norm()).fold(0.0, f64::max);
        prop_assert!(err < 1e-10);
    }

    #[test]
    fn evm_is_scale_free(d in cvec(24), e in cvec(24), k in 0.1f64..10.0) {
        let x: Vec<Complex64> = d.iter().zip(&e).map(|(a, b)| a + b * 0.1).collect();
        let dk: Vec<Complex64> = d.iter().map(|v| v * k).collect();
        let xk: Vec<Complex64> = x.iter().map(|v| v * k).collect();
        let a = evm(&d, &x).unwrap().overall_pct;
        let b = evm(&dk, &xk).unwrap().overall_pct;
        prop_assert!((a - b).abs() <= 1e-9 * a.max(1e-12));
    }

    #[test]
    fn periodogram_conserves_power(d in cvec(20)) {
        let cfg = CarrierConfig::centered(64, 4, 20, 15e3, 2).unwrap();
        let w = ofdm_modulate(&cfg, &d).unwrap();
        let mut acc = PsdAccumulator::new(w.len());
        acc.add(&w).unwrap();
        let psd = acc.finish(cfg.sample_rate_hz(), 100e3, 0.0).unwrap();
        let mean: f64 = w.iter().map(|v| v.norm_sqr()).sum::<f64>() / w.len() as f64;
        let total: f64 = psd.bin_power.iter().sum();
        prop_assert!((total - mean).abs() <= 1e-9 * mean.max(1e-300));
    }

    #[test]
    fn leakage_matrix_matches_waveform_spectrum(d in cvec(20), nu in 12.0f64..60.0) {
        // |a(ν)ᵀd|² is the DTFT power of the emitted symbol at ν.
        let cfg = CarrierConfig::centered(64, 4, 20, 15e3, 2).unwrap();
        let a = build_leakage_matrix(&cfg, &[nu]).unwrap();
        let p = a.apply(&d).unwrap()[0];
        let w = ofdm_modulate(&cfg, &d).unwrap();
        let ne = cfg.emission_fft_size() as f64;
        let dtft: Complex64 = w
            .iter()
            .enumerate()
            .map(|(t, v)| v * Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * nu * t as f64 / ne))
            .sum();
        prop_assert!((p.norm() - dtft.norm()).abs() <= 1e-9 * dtft.norm().max(1e-9));
    }
}

const SMALL: &str = r#"
schema_version = 1
name = "props"
seed = 9
n_symbols = 40

[carrier]
fft_size = 128
cp_len = 9
n_allocated = 48

[mask]
frequencies_khz = [-480.0, 480.0, -510.0, 510.0]
levels_dbm_per_100khz = [-40.0, -40.0, -45.0, -45.0]

[algorithm]
kind = "ssp"
n_iter = 4

[calibration]
n_symbols = 256
"#;

#[test]
fn batch_summary_is_thread_count_invariant() {
    let s = parse_scenario(SMALL).unwrap();
    let cal = PowerCalibration::measure(&s.carrier, s.constellation, -21.5, 100e3, 256, 0).unwrap();
    let p = prepare_with(&s, cal).unwrap();
    let mut runs = Vec::new();
    for threads in [1, 3, 8] {
        let mut o = with_threads(Some(threads), || simulate(&s, &p)).unwrap().summary;
        o.timing = Default::default();
        runs.push(o);
    }
    assert_eq!(runs[0], runs[1]);
    assert_eq!(runs[0], runs[2]);
}

#[test]
fn calibration_is_thread_count_invariant() {
    let s = parse_scenario(SMALL).unwrap();
    let a = with_threads(Some(1), || PowerCalibration::measure(&s.carrier, s.constellation, -21.5, 100e3, 300, 4)).unwrap();
    let b = with_threads(Some(5), || PowerCalibration::measure(&s.carrier, s.constellation, -21.5, 100e3, 300, 4)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn every_algorithm_runs_on_a_scenario() {
    let mut s = parse_scenario(SMALL).unwrap();
    let cal = PowerCalibration::measure(&s.carrier, s.constellation, -21.5, 100e3, 256, 0).unwrap();
    let p = prepare_with(&s, cal).unwrap();
    let d = ofdm_precode::signal::gen_ofdm_symbol_indexed(&s.carrier, s.constellation, 1, 0).into_inner();
    for kind in [
        AlgorithmKind::None,
        AlgorithmKind::Nsp,
        AlgorithmKind::Pocs,
        AlgorithmKind::Admm,
        AlgorithmKind::Ssp,
        AlgorithmKind::Oracle,
    ] {
        s.algorithm.kind = kind;
        s.algorithm.tol_db = Some(0.01);
        let r = precode_symbol(&s.algorithm, &p, &d, &mut |_, _| {}).unwrap();
        assert_eq!(r.d_bar.len(), d.len(), "{kind}");
        match kind {
            AlgorithmKind::None => assert_eq!(r.evm_pct, 0.0),
            AlgorithmKind::Nsp => assert!(r.max_violation_db.is_none()),
            _ => assert!(r.max_violation_db.unwrap() <= 0.01 + 1e-9, "{kind}: {:?}", r.max_violation_db),
        }
    }
}
