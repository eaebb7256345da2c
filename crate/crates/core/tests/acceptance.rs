//! Acceptance suite. Prints one line per criterion and exits non-zero if any
//! executed criterion fails.
//!
//! Criteria 8 and 9 share a Monte-Carlo campaign of several minutes per
//! core and run only when `UWSIM_ACCEPTANCE_LONG=1` is set.

use std::f64::consts::PI;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use uwsim::bicm::{hard_decisions, Constellation, Modulation};
use uwsim::channel::{
    equivalent_block_channel, equivalent_uw_channel, generate_realization, propagate, ChannelProfile,
};
use uwsim::dsp::C64;
use uwsim::estimation::{doppler_error_variance, optimize_frame, ChannelEstimate, ChannelEstimator};
use uwsim::harness::{derive_seed, empirical_error_stats, run_point, Link, PointStats, SimConfig};
use uwsim::receiver::fd_demux;
use uwsim::waveform::{build_frame, zadoff_chu, FrameGeometry, Modulator, WaveformKind};

/// Maximum Doppler named by the criteria (350 km/h at 5.9 GHz, rounded).
const DOPPLER: f64 = 1920.0;
const BANDWIDTH: f64 = 4.32e6;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn eva() -> ChannelProfile {
    ChannelProfile::eva(BANDWIDTH, DOPPLER).unwrap()
}

fn random_symbols(rng: &mut ChaCha8Rng, n: usize) -> Vec<C64> {
    let c = Constellation::new(Modulation::Qam16);
    let bits: Vec<u8> = (0..n * 4).map(|_| rng.random_range(0..2u8)).collect();
    c.map(&bits).unwrap()
}

/// `J0(x) = (1/pi) int_0^pi cos(x sin t) dt` by composite Simpson.
fn j0_quadrature(x: f64) -> f64 {
    let n = 2000;
    let h = PI / n as f64;
    let f = |t: f64| (x * t.sin()).cos();
    let mut s = f(0.0) + f(PI);
    for i in 1..n {
        s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0 / PI
}

/// Gaussian tail by Simpson integration of the density over `[x, x + 12]`.
fn q_quadrature(x: f64) -> f64 {
    let n = 20_000;
    let h = 12.0 / n as f64;
    let f = |t: f64| (-t * t / 2.0).exp() / (2.0 * PI).sqrt();
    let mut s = f(x) + f(x + 12.0);
    for i in 1..n {
        s += f(x + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

fn criterion_1() -> Outcome {
    let mut worst_lambda: f64 = 0.0;
    let mut errors = 0u64;
    let mut frames = 0u64;
    for (ant, n_uw) in [(1, 32), (2, 32), (4, 64)] {
        for kind in [WaveformKind::Ofdm, WaveformKind::Otfs] {
            let mut cfg = SimConfig::default();
            cfg.n_t = ant;
            cfg.n_r = ant;
            cfg.n_uw = n_uw;
            cfg.waveform = kind;
            cfg.doppler_hz = Some(0.0);
            let link = Link::new(&cfg, 0.0).unwrap();
            let geom = cfg.geometry().unwrap();
            let profile = cfg.channel_profile().unwrap();
            for f in 0..100 {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(11, f));
                let (bits, frame) = link.transmit(&mut rng).unwrap();
                let chan = link.draw_channel(rng.random()).unwrap();
                let rx = propagate(&frame, &chan, 0.0, 0).unwrap();
                let obs = fd_demux(&rx, &geom).unwrap();
                let est = link.estimator().estimate(&obs.uw).unwrap();
                let truth = ChannelEstimate::genie(&chan, &geom, &profile).unwrap();
                for (a, b) in est.lambda.iter().flatten().zip(truth.lambda.iter().flatten()) {
                    for (x, y) in a.iter().zip(b) {
                        worst_lambda = worst_lambda.max((x - y).norm());
                    }
                }
                let det = link.receive(&frame, &chan, &mut rng).unwrap();
                frames += 1;
                errors += u64::from(det.info_bits != bits);
            }
        }
    }
    outcome(
        worst_lambda <= 1e-8 && errors == 0,
        format!("max |Lambda_hat - Lambda| = {worst_lambda:.2e} (<= 1e-8), frame errors {errors}/{frames}"),
    )
}

fn criterion_2() -> Outcome {
    let mut worst: f64 = 0.0;
    for (ant, n_uw) in [(2, 32), (4, 64)] {
        let geom = FrameGeometry::new(288, 4, 16, n_uw, ant).unwrap();
        let uw = zadoff_chu(n_uw).unwrap();
        for kind in [WaveformKind::Ofdm, WaveformKind::Otfs] {
            let modulator = Modulator::new(kind, &geom);
            for r in 0..10u64 {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(22, r));
                let d = random_symbols(&mut rng, geom.n);
                let x = modulator.modulate(&d).unwrap();
                let frame = build_frame(&geom, &modulator, &d, &uw).unwrap();
                let chan = generate_realization(&eva(), geom.frame_len(), ant, ant, rng.random()).unwrap();
                let rx = propagate(&frame, &chan, 0.0, 0).unwrap();
                for nr in 0..ant {
                    for m in 0..geom.m {
                        let eq = equivalent_block_channel(&chan, &geom, m, nr).unwrap();
                        let want = eq.apply(&x[m * geom.k..(m + 1) * geom.k]).unwrap();
                        let got = &rx[nr][geom.block_offset(m)..geom.block_offset(m) + geom.k];
                        for (a, b) in got.iter().zip(&want) {
                            worst = worst.max((a - b).norm());
                        }
                    }
                    for u in 0..2 {
                        let eq = equivalent_uw_channel(&chan, &geom, u, nr).unwrap();
                        let want = eq.apply(&uw).unwrap();
                        let got = &rx[nr][geom.uw_offset(u)..geom.uw_offset(u) + n_uw];
                        for (a, b) in got.iter().zip(&want) {
                            worst = worst.max((a - b).norm());
                        }
                    }
                }
            }
        }
    }
    outcome(worst <= 1e-10, format!("max deviation {worst:.2e} (<= 1e-10)"))
}

fn criterion_3() -> Outcome {
    let profile = eva();
    let lags = 301;
    let origins = 300;
    let realizations = 2000u64;
    let taps = profile.tap_delays.len();
    let mut acc = vec![vec![C64::new(0.0, 0.0); lags]; taps];
    for r in 0..realizations {
        let chan = generate_realization(&profile, origins + lags, 1, 1, derive_seed(33, r)).unwrap();
        for (i, row) in acc.iter_mut().enumerate() {
            let h = chan.tap_series(0, 0, i);
            for (dn, a) in row.iter_mut().enumerate() {
                let mut s = C64::new(0.0, 0.0);
                for n0 in 0..origins {
                    s += h[n0 + dn] * h[n0].conj();
                }
                *a += s;
            }
        }
    }
    let norm = (realizations as usize * origins) as f64;
    let mut worst: f64 = 0.0;
    for (i, row) in acc.iter().enumerate() {
        for (dn, a) in row.iter().enumerate() {
            let want = profile.tap_powers[i] * j0_quadrature(2.0 * PI * dn as f64 * DOPPLER / BANDWIDTH);
            worst = worst.max((a / norm - want).norm());
        }
    }
    outcome(
        worst <= 0.02,
        format!("max |R_hat - rho J0| = {worst:.4} over {taps} taps, lags 0..300 (<= 0.02)"),
    )
}

fn criterion_4() -> Outcome {
    let profile = eva();
    let geom = FrameGeometry::new(288, 4, 16, 32, 1).unwrap();
    let k = geom.k;
    let realizations = 1000u64;
    let mut off = 0.0;
    for r in 0..realizations {
        let chan = generate_realization(&profile, geom.frame_len(), 1, 1, derive_seed(44, r)).unwrap();
        for m in 0..geom.m {
            let h = equivalent_block_channel(&chan, &geom, m, 0).unwrap().fd_matrix();
            for i in 0..k {
                for j in 0..k {
                    if i != j {
                        off += h[i * k + j].norm_sqr();
                    }
                }
            }
        }
    }
    let empirical = off / (realizations as usize * geom.m * k) as f64;
    let analytic = doppler_error_variance(k, &profile);
    let rel = (empirical / analytic - 1.0).abs();
    outcome(
        rel <= 0.05,
        format!("analytic {analytic:.4e}, Monte-Carlo {empirical:.4e}, rel. error {:.2}% (<= 5%)", rel * 100.0),
    )
}

fn criterion_5() -> Outcome {
    let mut cfg = SimConfig::default();
    cfg.doppler_hz = Some(DOPPLER);
    let noise = 1e-2;
    let geom = cfg.geometry().unwrap();
    let predicted = ChannelEstimator::new(&geom, &eva(), noise).unwrap().sigma2_ce().to_vec();
    let measured = empirical_error_stats(&cfg, noise, 10_000, 55).unwrap();
    let worst = predicted
        .iter()
        .zip(&measured.sigma2_ce)
        .map(|(p, e)| (e / p - 1.0).abs())
        .fold(0.0, f64::max);
    let pairs: Vec<String> = predicted
        .iter()
        .zip(&measured.sigma2_ce)
        .map(|(p, e)| format!("{p:.3e}/{e:.3e}"))
        .collect();
    outcome(
        worst <= 0.10,
        format!(
            "predicted/empirical per m: {}; worst rel. error {:.2}% (<= 10%)",
            pairs.join(", "),
            worst * 100.0
        ),
    )
}

fn criterion_6() -> Outcome {
    let cfg = SimConfig::default();
    let template = cfg.geometry().unwrap();
    let noise = 10f64.powf(-cfg.optimizer_snr_db / 10.0);
    let opt = optimize_frame(&[1, 2, 4, 6, 8], &template, &eva(), noise).unwrap();
    let ce_up = opt.table.windows(2).all(|w| w[1].sigma2_ce >= w[0].sigma2_ce);
    let d_down = opt.table.windows(2).all(|w| w[1].sigma2_d <= w[0].sigma2_d);
    let rows: Vec<String> = opt
        .table
        .iter()
        .map(|s| format!("M={}:{:.3e}", s.m, s.total()))
        .collect();
    outcome(
        ce_up && d_down && opt.best_m == 4,
        format!(
            "CE non-decreasing {ce_up}, D non-increasing {d_down}, totals [{}], M*={}",
            rows.join(" "),
            opt.best_m
        ),
    )
}

fn criterion_7() -> Outcome {
    // Eb/N0 at which the oracle gives 1e-3, by bisection.
    let (mut lo, mut hi) = (0.0f64, 10.0f64);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if q_quadrature((2.0 * mid).sqrt()) > 1e-3 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let ebn0 = 0.5 * (lo + hi);
    let theory = q_quadrature((2.0 * ebn0).sqrt());
    let c = Constellation::new(Modulation::Qpsk);
    let n0 = 0.5 / ebn0;
    let sd = (n0 / 2.0).sqrt();
    let symbols = 5_000_000;
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut errors = 0u64;
    let chunk = 100_000;
    for _ in 0..symbols / chunk {
        let bits: Vec<u8> = (0..2 * chunk).map(|_| rng.random_range(0..2u8)).collect();
        let y: Vec<C64> = c
            .map(&bits)
            .unwrap()
            .into_iter()
            .map(|s| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                s + C64::new(re * sd, im * sd)
            })
            .collect();
        let llr = c.demap(&y, &vec![n0; chunk], &[]).unwrap();
        errors += hard_decisions(&llr).iter().zip(&bits).filter(|(a, b)| a != b).count() as u64;
    }
    let ber = errors as f64 / (2 * symbols) as f64;
    let rel = (ber / theory - 1.0).abs();
    outcome(
        rel <= 0.05,
        format!(
            "Eb/N0 {:.3} dB: BER {ber:.4e} vs Q {theory:.4e}, rel. error {:.2}% (<= 5%)",
            10.0 * ebn0.log10(),
            rel * 100.0
        ),
    )
}

/// Sweeps in `step` dB increments from `start` until two neighbouring points
/// bracket `target` and returns the interpolated crossing.
fn crossing(cfg: &SimConfig, start: f64, step: f64, target: f64) -> (Vec<PointStats>, Option<f64>) {
    let run = |snr: f64| {
        let p = run_point(cfg, snr, derive_seed(cfg.seed, (snr * 100.0).round() as u64)).unwrap();
        println!(
            "    {} {:5.2} dB: FER {:.3e} ({} errors / {} frames), per-iteration errors {:?}, {:.0}s",
            cfg.waveform,
            snr,
            p.record.fer,
            p.record.frame_errors,
            p.record.frames_run,
            p.iteration_frame_errors,
            p.wallclock_s
        );
        p
    };
    let mut pts = vec![run(start)];
    let dir = if pts[0].record.fer >= target { 1.0 } else { -1.0 };
    for i in 1..=40 {
        let p = run(start + dir * step * i as f64);
        let done = (p.record.fer < target) == (dir > 0.0);
        pts.push(p);
        if done {
            break;
        }
    }
    pts.sort_by(|a, b| a.record.snr_db.total_cmp(&b.record.snr_db));
    let x = pts.windows(2).find_map(|w| {
        let (a, b) = (&w[0].record, &w[1].record);
        if a.fer >= target && b.fer < target && b.fer > 0.0 {
            let t = (a.fer.log10() - target.log10()) / (a.fer.log10() - b.fer.log10());
            Some(a.snr_db + t * (b.snr_db - a.snr_db))
        } else {
            None
        }
    });
    (pts, x)
}

fn criteria_8_9() -> (Outcome, Outcome) {
    let target = 1e-2;
    let mut ofdm = SimConfig::default();
    ofdm.waveform = WaveformKind::Ofdm;
    let mut otfs = SimConfig::default();
    otfs.waveform = WaveformKind::Otfs;
    let (_, x_ofdm) = crossing(&ofdm, 11.0, 0.5, target);
    let (otfs_pts, x_otfs) = crossing(&otfs, 9.0, 0.5, target);
    let c8 = match (x_ofdm, x_otfs) {
        (Some(a), Some(b)) => outcome(
            a - b >= 3.0,
            format!("FER 1e-2 at OFDM {a:.2} dB, OTFS {b:.2} dB: gap {:.2} dB (>= 3 dB)", a - b),
        ),
        _ => outcome(false, "sweep did not bracket FER 1e-2".into()),
    };
    let mut worst: f64 = 0.0;
    let mut ok = true;
    let mut parts = Vec::new();
    for p in &otfs_pts {
        let (f1, f3) = (p.iteration_fer(0), p.iteration_fer(p.iteration_frame_errors.len() - 1));
        ok &= f3 <= 1.1 * f1;
        if f1 > 0.0 {
            worst = worst.max(f3 / f1);
        }
        parts.push(format!("{:.1} dB {f1:.2e}->{f3:.2e}", p.record.snr_db));
    }
    let c9 = outcome(
        ok,
        format!("iteration 1 -> 3 FER: {}; worst ratio {worst:.3} (<= 1.1)", parts.join(", ")),
    );
    (c8, c9)
}

fn report(id: &str, name: &str, start: Instant, o: &Outcome) {
    println!(
        "criterion {id} [{}] {name}: {} ({:.1}s)",
        if o.pass { "PASS" } else { "FAIL" },
        o.detail,
        start.elapsed().as_secs_f64()
    );
}

fn main() {
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let wanted = |id: &str| filter.is_empty() || filter.iter().any(|f| f == id);
    let long = std::env::var_os("UWSIM_ACCEPTANCE_LONG").is_some_and(|v| v != "0");
    let mut failed = 0;
    let checks: [(&str, &str, fn() -> Outcome); 7] = [
        ("1", "noiseless exactness", criterion_1),
        ("2", "CDD-SISO equivalence", criterion_2),
        ("3", "Jakes fidelity", criterion_3),
        ("4", "ICI variance", criterion_4),
        ("5", "Wiener consistency", criterion_5),
        ("6", "frame optimizer", criterion_6),
        ("7", "AWGN calibration", criterion_7),
    ];
    for (id, name, f) in checks {
        if !wanted(id) {
            continue;
        }
        let t = Instant::now();
        let o = f();
        report(id, name, t, &o);
        failed += usize::from(!o.pass);
    }
    if wanted("8") || wanted("9") {
        if long {
            let t = Instant::now();
            let (c8, c9) = criteria_8_9();
            report("8", "OTFS vs OFDM FER gap", t, &c8);
            report("9", "PIC iteration benefit", t, &c9);
            failed += usize::from(!c8.pass) + usize::from(!c9.pass);
        } else {
            println!("criterion 8 [SKIP] OTFS vs OFDM FER gap: long campaign, set UWSIM_ACCEPTANCE_LONG=1");
            println!("criterion 9 [SKIP] PIC iteration benefit: shares the criterion 8 campaign");
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
