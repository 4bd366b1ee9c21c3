//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each
//! and exits non-zero if any failed.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use coherence_core::bloch::{
    first_maximum, fit_rabi, loss_for_fidelity, prep_fidelity, rabi_curve, DecayConfig, PulseShape,
    RabiOptions,
};
use coherence_core::correlator::{
    convolve_on_grid, cross_correlate, cross_correlate_times, normalize, CorrelationRequest,
    Normalization,
};
use coherence_core::fitting::{
    fit_hbt, fit_hom, fit_tcspc, hbt_model, hom_visibility, tcspc_model, HbtFitParams, HbtOptions,
    HomOptions, HomPolarization, RiseMode, TcspcFitParams, TcspcOptions,
};
use coherence_core::lineshape::{
    coherence_time, g1_voigt_unchecked, voigt_fwhm, voigt_fwhm_exact, G1Curve, VoigtProfile,
};
use coherence_core::sim::{
    apply_detection, simulate_hom, simulate_mi_visibility, simulate_rf_scan, simulate_stream,
    DetectionConfig, EmitterConfig, HomSimOptions, Routing, SpectralDiffusion,
};
use coherence_core::units::jitter_sigma_for_irf;
use coherence_core::{Estimate, Histogram, HistogramMeta, TagStream, TimeTag, VoigtParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use rustfft::{num_complex::Complex64, FftPlanner};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

const IRF_PS: f64 = 93.0;

fn c1_fourier_limit() -> Outcome {
    let truth = TcspcFitParams {
        t0: 2.0,
        tau_rise: 0.15,
        a1: 5e4,
        tau1: 1.71,
        a2: 3000.0,
        tau2: 8.0,
        background: 20.0,
    };
    let x: Vec<f64> = (0..1200).map(|k| 0.05 * k as f64).collect();
    let y: Vec<f64> = x
        .iter()
        .map(|&t| tcspc_model(t, &truth, RiseMode::Both))
        .collect();
    let r = fit_tcspc(&x, &y, &TcspcOptions::default()).map_err(err)?;
    let t2_ft = r.summary.t2_ft.ok_or("no T2,FT")?;
    let gamma_ft = r.summary.gamma_ft.ok_or("no Γ_FT")?;
    ensure((t2_ft - 3.42).abs() < 5e-3, format!("T2,FT = {t2_ft}"))?;
    ensure(
        (gamma_ft - 0.0931).abs() < 5e-5,
        format!("Γ_FT = {gamma_ft}"),
    )?;
    ensure(
        (gamma_ft * 10.0).round() / 10.0 == 0.1,
        "Γ_FT does not round to 0.1 GHz",
    )?;
    Ok(format!("T2,FT = {t2_ft:.4} ns, Γ_FT = {gamma_ft:.5} GHz"))
}

fn c2_t2_integral() -> Outcome {
    let rf = coherence_time(&G1Curve::Voigt(VoigtParams::widths(0.40, 3.28))).map_err(err)?;
    let ab = coherence_time(&G1Curve::Voigt(VoigtParams::widths(0.98, 9.31))).map_err(err)?;
    ensure((rf / 0.176 - 1.0).abs() <= 0.05, format!("RF T2 = {rf}"))?;
    ensure((ab / 0.073 - 1.0).abs() <= 0.25, format!("AB T2 = {ab}"))?;
    Ok(format!("RF T2 = {rf:.4} ns, AB T2 = {ab:.4} ns"))
}

fn c3_hom_arithmetic() -> Outcome {
    let v =
        |par, perp| hom_visibility(Estimate::exact(par), Estimate::exact(perp)).map(|e| e.value);
    let decon = v(0.049, 0.463).map_err(err)?;
    let raw = v(0.135, 0.471).map_err(err)?;
    let r3 = |x: f64| (x * 1000.0).round() / 1000.0;
    ensure(r3(decon) == 0.894, format!("V_decon = {decon}"))?;
    ensure(r3(raw) == 0.713, format!("V_raw = {raw}"))?;
    Ok(format!("V_decon = {decon:.4}, V_raw = {raw:.4}"))
}

fn hbt_histogram(tags: &TagStream, bin: u64) -> Result<Histogram, String> {
    let req = CorrelationRequest::new(0, 1, bin, 500_000);
    let h = cross_correlate(tags, &req).map_err(err)?;
    normalize(&h, Normalization::default()).map_err(err)
}

fn c4_blinking_round_trip() -> Outcome {
    let emitter = EmitterConfig {
        pump_rate: 0.2,
        ..EmitterConfig::default()
    };
    let det = DetectionConfig {
        efficiency: 0.5,
        jitter_sigma: jitter_sigma_for_irf(IRF_PS),
        dead_time: 0.0,
        dark_rate: 0.0,
    };
    let duration = 1.2e6 / (emitter.mean_rate() * det.efficiency);
    let photons = simulate_stream(&emitter, duration, 4).map_err(err)?;
    let tags = apply_detection(&photons, &det, Routing::BeamSplitter, 4).map_err(err)?;
    ensure(
        tags.len() >= 1_000_000,
        format!("only {} detected photons", tags.len()),
    )?;
    let h = hbt_histogram(&tags, 50)?;
    let r = fit_hbt(&h, &HbtOptions::new(IRF_PS)).map_err(err)?;
    let p = r.params;
    let want: Vec<f64> = emitter.blinkers.iter().map(|b| b.timescale()).collect();
    for (got, want) in p.t_c.iter().zip(&want) {
        ensure(
            (got / want - 1.0).abs() <= 0.25,
            format!("T_c {got:.2} vs {want:.2} ns ({p:?})"),
        )?;
    }
    ensure((p.b - 1.0).abs() <= 0.05, format!("b = {}", p.b))?;
    ensure(
        r.g2_decon.value <= 0.05,
        format!("g2_decon(0) = {}", r.g2_decon.value),
    )?;
    Ok(format!(
        "{} tags, T_c = [{:.2}, {:.2}, {:.2}] ns, b = {:.3}, g2_decon(0) = {:.3}",
        tags.len(),
        p.t_c[0],
        p.t_c[1],
        p.t_c[2],
        p.b,
        r.g2_decon.value
    ))
}

fn c5_deconvolution() -> Outcome {
    let truth = HbtFitParams {
        a: 1.0,
        b: 1.0,
        tau0: 0.0,
        t_b: 1.0,
        c: [0.3, 0.2, 0.15],
        t_c: [6.6, 24.0, 117.0],
    };
    let (bin, win, level) = (50u64, 500_000u64, 4000.0);
    let n = (2 * win / bin + 1) as usize;
    let mut h = Histogram::zeros(bin, -(win as i64), n, HistogramMeta::default());
    let x = h.centers_ps();
    let y = convolve_on_grid(|t| hbt_model(t, &truth), &x, IRF_PS);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for (c, v) in h.counts.iter_mut().zip(&y) {
        *c = Poisson::new(level * v).map_err(err)?.sample(&mut rng) as u64;
    }
    h.norm = level;
    let r = fit_hbt(&h, &HbtOptions::new(IRF_PS)).map_err(err)?;
    let (raw, decon) = (r.g2_raw.value, r.g2_decon.value);
    ensure(raw > 0.0, format!("g2_raw(0) = {raw}"))?;
    ensure(decon.abs() <= 0.01, format!("g2_decon(0) = {decon}"))?;
    ensure(decon < raw, "decon not below raw")?;
    Ok(format!("g2_raw(0) = {raw:.4}, g2_decon(0) = {decon:.4}"))
}

fn hom_pair(emitter: &EmitterConfig, seed: u64) -> Result<(Histogram, Histogram), String> {
    let det = DetectionConfig {
        efficiency: 0.5,
        jitter_sigma: jitter_sigma_for_irf(IRF_PS),
        dead_time: 0.0,
        dark_rate: 0.0,
    };
    let duration = 1e8;
    let mut out = Vec::new();
    for (k, pol) in [HomPolarization::Co, HomPolarization::Cross]
        .into_iter()
        .enumerate()
    {
        let s = seed + k as u64;
        let photons = simulate_stream(emitter, duration, s).map_err(err)?;
        let opts = HomSimOptions {
            delta_t_ns: 14.3,
            polarization: pol,
        };
        let sim = simulate_hom(&photons, emitter, &opts, &det, s).map_err(err)?;
        out.push(hbt_histogram(&sim.tags, 50)?);
    }
    let cross = out.pop().unwrap();
    let co = out.pop().unwrap();
    Ok((co, cross))
}

fn c6_hom_pipeline() -> Outcome {
    let emitter = EmitterConfig {
        pump_rate: 0.1,
        blinkers: vec![],
        ..EmitterConfig::default()
    };
    let (co, cross) = hom_pair(&emitter, 60)?;
    let r = fit_hom(&co, &cross, &HomOptions::new(IRF_PS)).map_err(err)?;
    let perp = r.g_perp_decon.value;
    let v = r.v_decon.value;
    ensure(
        (perp - 0.5).abs() <= 0.02,
        format!("cross central value {perp}"),
    )?;
    ensure(v >= 0.95, format!("V = {v}"))?;

    let noisy = EmitterConfig {
        spectral_diffusion: SpectralDiffusion {
            sigma: 2.0 / emitter.t1_x * 1e9,
            corr_time: 1.0,
        },
        ..emitter.clone()
    };
    let (co, cross) = hom_pair(&noisy, 70)?;
    let r2 = fit_hom(&co, &cross, &HomOptions::new(IRF_PS)).map_err(err)?;
    let v2 = r2.v_decon.value;
    ensure(v2 < 0.5, format!("V with spectral diffusion = {v2}"))?;
    Ok(format!(
        "g⊥(0) = {perp:.3}, V = {v:.3}, V(diffusing) = {v2:.3}"
    ))
}

fn c7_bloch() -> Outcome {
    let shape = PulseShape::default();
    let undamped = DecayConfig::default();
    let areas: Vec<f64> = (0..=200).map(|k| k as f64 * 4.0 * PI / 200.0).collect();
    let pops = rabi_curve(&areas, &shape, &undamped).map_err(err)?;
    let rms = (areas
        .iter()
        .zip(&pops)
        .map(|(a, p)| (p - (a / 2.0).sin().powi(2)).powi(2))
        .sum::<f64>()
        / areas.len() as f64)
        .sqrt();
    ensure(rms <= 1e-6, format!("undamped RMS {rms:e}"))?;
    let f_undamped = prep_fidelity(&pops).map_err(err)?;
    ensure(
        (f_undamped - 1.0).abs() <= 1e-6,
        format!("undamped fidelity {f_undamped}"),
    )?;

    let base = DecayConfig {
        gamma_rad: 1.0 / 1.71,
        ..DecayConfig::default()
    };
    let loss = loss_for_fidelity(0.492, &shape, &base).map_err(err)?;
    let decay = DecayConfig {
        gamma_loss: loss,
        ..base
    };
    let truth = first_maximum(&shape, &decay).map_err(err)?.1;
    let cal = 0.8;
    let x: Vec<f64> = (1..=40).map(|k| k as f64 * 0.25).collect();
    let a: Vec<f64> = x.iter().map(|v| cal * v).collect();
    let clean = rabi_curve(&a, &shape, &decay).map_err(err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let noise = Normal::new(0.0, 0.01).map_err(err)?;
    let y: Vec<f64> = clean
        .iter()
        .map(|p| 1000.0 * (p + noise.sample(&mut rng)))
        .collect();
    let r = fit_rabi(&x, &y, &RabiOptions::default()).map_err(err)?;
    let f = r.fidelity;
    let sigma = f.sigma.ok_or("fidelity has no uncertainty")?;
    ensure(
        (f.value - truth).abs() <= 3.0 * sigma,
        format!("fidelity {} ± {sigma} vs {truth}", f.value),
    )?;
    Ok(format!(
        "RMS {rms:.1e}, undamped F = {f_undamped:.6}, damped F = {:.4} ± {sigma:.4} (truth {truth:.4})",
        f.value
    ))
}

fn c8_lineshape() -> Outcome {
    for w in [0.37, 1.0, 9.31] {
        ensure(voigt_fwhm(w, 0.0).map_err(err)? == w, "Lorentzian endpoint")?;
        ensure(voigt_fwhm(0.0, w).map_err(err)? == w, "Gaussian endpoint")?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let gh = 10f64.powf(rng.gen_range(-2.0..1.3));
        let gi = 10f64.powf(rng.gen_range(-2.0..1.3));
        let approx = voigt_fwhm(gh, gi).map_err(err)?;
        let exact = voigt_fwhm_exact(gh, gi).map_err(err)?;
        worst = worst.max((approx - exact).abs() / exact);
    }
    ensure(worst <= 5e-4, format!("Olivero–Longbothum error {worst:e}"))?;

    // sampled spectrum → FFT → |g¹|
    let (gh, gi) = (0.3, 3.0);
    let profile = VoigtProfile::new(gh, gi).map_err(err)?;
    let n = 1usize << 18;
    let dnu = 0.02; // GHz
    let mut buf: Vec<Complex64> = (0..n)
        .map(|k| {
            let nu = if k < n / 2 {
                k as f64
            } else {
                k as f64 - n as f64
            } * dnu;
            Complex64::new(profile.eval(nu), 0.0)
        })
        .collect();
    let area: f64 = buf.iter().map(|c| c.re).sum();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let dt_ps = 1e3 / (n as f64 * dnu);
    let mut sq = 0.0;
    let mut count = 0;
    for k in (0..n / 2).step_by(64).take(200) {
        let tau = k as f64 * dt_ps;
        let g = buf[k].norm() / area;
        sq += (g - g1_voigt_unchecked(tau, gh, gi)).powi(2);
        count += 1;
    }
    let rms = (sq / count as f64).sqrt();
    ensure(rms <= 1e-4, format!("Wiener–Khinchin RMS {rms:e}"))?;
    Ok(format!("max FWHM error {worst:.1e}, FFT RMS {rms:.1e}"))
}

fn brute_force(a: &[u64], b: &[u64], bin: u64, win: u64) -> Vec<u64> {
    let n = (2 * win / bin + 1) as usize;
    let mut h = vec![0u64; n];
    for &ta in a {
        for &tb in b {
            let tau = tb as i64 - ta as i64 + win as i64;
            if tau >= 0 && (tau as u64) < (n as u64) * bin {
                h[(tau as u64 / bin) as usize] += 1;
            }
        }
    }
    h
}

fn poisson_tags(n: usize, duration: u64, seed: u64) -> TagStream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tags: Vec<TimeTag> = (0..n)
        .map(|_| TimeTag::new(rng.gen_range(0..2), rng.gen_range(0..duration)))
        .collect();
    tags.sort_unstable_by_key(|t| (t.t, t.channel));
    TagStream::new(2, duration, tags)
}

fn c9_correlator() -> Result<String, String> {
    let fixture = poisson_tags(10_000, 200_000_000, 9);
    let (a, b) = (fixture.channel_times(0), fixture.channel_times(1));
    let req = CorrelationRequest::new(0, 1, 100, 1_000_000);
    let h = cross_correlate_times(&a, &b, false, &req).map_err(err)?;
    ensure(
        h.counts == brute_force(&a, &b, 100, 1_000_000),
        "histogram differs from brute force",
    )?;

    let poisson = poisson_tags(2_000_000, 1_000_000_000_000, 10);
    let h =
        cross_correlate(&poisson, &CorrelationRequest::new(0, 1, 1000, 500_000)).map_err(err)?;
    let g = normalize(&h, Normalization::PoissonRate).map_err(err)?.g2();
    let wing: Vec<f64> = g
        .iter()
        .zip(h.centers_ps())
        .filter(|(_, t)| t.abs() >= 400_000.0)
        .map(|(v, _)| *v)
        .collect();
    let mean = wing.iter().sum::<f64>() / wing.len() as f64;
    ensure(
        (mean - 1.0).abs() <= 0.02,
        format!("Poisson wing mean {mean}"),
    )?;

    let big = poisson_tags(10_000_000, 1_000_000_000_000, 11);
    let t = Instant::now();
    let h = cross_correlate(&big, &CorrelationRequest::new(0, 1, 10, 500_000)).map_err(err)?;
    let secs = t.elapsed().as_secs_f64();
    ensure(h.n_bins() == 100_001, "bin count")?;
    ensure(secs < 60.0, format!("10⁷-tag correlation took {secs:.1} s"))?;
    Ok(format!(
        "brute force exact, wing mean {mean:.4}, 10⁷ tags in {secs:.2} s"
    ))
}

fn pipeline_bytes() -> Result<Vec<u8>, String> {
    let emitter = EmitterConfig {
        pump_rate: 0.2,
        spectral_diffusion: SpectralDiffusion {
            sigma: 3e9,
            corr_time: 10.0,
        },
        ..EmitterConfig::default()
    };
    let det = DetectionConfig {
        efficiency: 0.5,
        ..DetectionConfig::default()
    };
    let photons = simulate_stream(&emitter, 3.5e6, 10).map_err(err)?;
    let tags = apply_detection(&photons, &det, Routing::BeamSplitter, 10).map_err(err)?;
    let mut bytes = Vec::new();
    coherence_core::types::write_tags_to(&tags, &mut bytes).map_err(err)?;
    let h = hbt_histogram(&tags, 200)?;
    coherence_core::types::write_histogram_to(&h, &mut bytes).map_err(err)?;
    let fit = fit_hbt(&h, &HbtOptions::new(IRF_PS)).map_err(err)?;
    bytes.extend(fit.fit.to_json().map_err(err)?.into_bytes());

    let hom = simulate_hom(
        &photons,
        &emitter,
        &HomSimOptions {
            delta_t_ns: 14.3,
            polarization: HomPolarization::Co,
        },
        &det,
        10,
    )
    .map_err(err)?;
    coherence_core::types::write_tags_to(&hom.tags, &mut bytes).map_err(err)?;

    let two_level = EmitterConfig {
        pure_dephasing_rate: 0.5,
        ..emitter
    };
    let mi = simulate_mi_visibility(&two_level, &[0.0, 100.0, 250.0, 500.0], 10).map_err(err)?;
    bytes.extend(serde_json::to_vec(&mi).map_err(err)?);
    let grid: Vec<f64> = (-20..=20).map(|k| 0.1 * k as f64).collect();
    let scan = simulate_rf_scan(&two_level, &grid, 10).map_err(err)?;
    bytes.extend(serde_json::to_vec(&scan).map_err(err)?);
    Ok(bytes)
}

fn c10_determinism() -> Outcome {
    let run = |threads: usize| -> Result<Vec<u8>, String> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(err)?
            .install(pipeline_bytes)
    };
    let first = run(1)?;
    let again = run(1)?;
    let wide = run(4)?;
    ensure(first == again, "repeat run differs")?;
    ensure(first == wide, "result depends on worker count")?;
    Ok(format!(
        "{} bytes identical across runs and 1/4 workers",
        first.len()
    ))
}

struct Criterion {
    id: u32,
    name: &'static str,
    limit: Option<Duration>,
    run: fn() -> Outcome,
}

fn main() {
    let secs = |s| Some(Duration::from_secs(s));
    let criteria = [
        Criterion {
            id: 1,
            name: "Fourier-limit arithmetic",
            limit: secs(1),
            run: c1_fourier_limit,
        },
        Criterion {
            id: 2,
            name: "T2 integral consistency",
            limit: secs(1),
            run: c2_t2_integral,
        },
        Criterion {
            id: 3,
            name: "HOM visibility arithmetic",
            limit: secs(1),
            run: c3_hom_arithmetic,
        },
        Criterion {
            id: 4,
            name: "blinking round trip",
            limit: secs(180),
            run: c4_blinking_round_trip,
        },
        Criterion {
            id: 5,
            name: "deconvolution property",
            limit: secs(30),
            run: c5_deconvolution,
        },
        Criterion {
            id: 6,
            name: "HOM pipeline",
            limit: secs(180),
            run: c6_hom_pipeline,
        },
        Criterion {
            id: 7,
            name: "Bloch solver",
            limit: secs(30),
            run: c7_bloch,
        },
        Criterion {
            id: 8,
            name: "lineshape suite",
            limit: secs(10),
            run: c8_lineshape,
        },
        Criterion {
            id: 9,
            name: "correlator exactness",
            limit: None,
            run: c9_correlator,
        },
        Criterion {
            id: 10,
            name: "determinism",
            limit: None,
            run: c10_determinism,
        },
    ];
    let only: Option<u32> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .and_then(|v| v.parse().ok());
    let mut failed = 0;
    for c in criteria.iter().filter(|c| only.is_none_or(|id| id == c.id)) {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let outcome = match (outcome, c.limit) {
            (Ok(_), Some(limit)) if elapsed > limit => Err(format!(
                "took {:.2} s, limit {} s",
                elapsed.as_secs_f64(),
                limit.as_secs()
            )),
            (o, _) => o,
        };
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        println!(
            "criterion {:>2} {tag} [{:>7.2} s] {}: {detail}",
            c.id,
            elapsed.as_secs_f64(),
            c.name
        );
        if outcome.is_err() {
            failed += 1;
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
