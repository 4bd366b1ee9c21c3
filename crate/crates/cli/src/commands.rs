use std::io::Write;
use std::path::Path;

use coherence_core::bloch::{fit_rabi, PulseShape, RabiOptions};
use coherence_core::correlator::{cross_correlate, normalize, CorrelationRequest, Normalization};
use coherence_core::fitting::{
    fit_hbt, fit_hom, fit_mi, fit_scan, fit_tcspc, HbtOptions, HomOptions, HomPolarization,
    MiOptions, RiseMode, ScanOptions, TcspcOptions,
};
use coherence_core::report::build_report;
use coherence_core::sim::{
    apply_detection, lorentzian_scan_fwhm, simulate_hom, simulate_mi_visibility, simulate_rf_scan,
    simulate_stream, HomSimOptions, SimulationConfig,
};
use coherence_core::types::{
    read_histogram, read_xy, write_histogram, write_xy, FitResult, Transition, XyData,
};
use coherence_core::{read_tags, write_tags, Error, TagStream};
use serde_json::{json, Value};

use crate::args::{
    CorrelateArgs, CorrelateMode, FitArgs, FitModel, Measurement, NormMode, Pol, ReportArgs, Rise,
    SimulateArgs,
};
use crate::provenance::{file_hash, provenance, sidecar_path, write_json};
use crate::{CliError, CliResult};

fn io_err(path: &Path, source: std::io::Error) -> CliError {
    CliError::Core(Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn hom_pol(p: Pol) -> HomPolarization {
    match p {
        Pol::Co => HomPolarization::Co,
        Pol::Cross => HomPolarization::Cross,
    }
}

fn load_config(path: Option<&Path>) -> CliResult<SimulationConfig> {
    let cfg = match path {
        None => SimulationConfig::default(),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| io_err(p, e))?;
            serde_json::from_str(&text).map_err(|e| {
                CliError::Core(Error::Config {
                    path: p.display().to_string(),
                    msg: e.to_string(),
                })
            })?
        }
    };
    cfg.validate()?;
    Ok(cfg)
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n)
            .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
            .collect(),
    }
}

fn default_max_delay_ps(cfg: &SimulationConfig) -> f64 {
    let sigma = cfg.emitter.spectral_diffusion.sigma;
    let mut t = cfg.emitter.t2();
    if sigma > 0.0 {
        t = t.min(1e9 / sigma);
    }
    3.0 * t * 1e3
}

fn default_span_ghz(cfg: &SimulationConfig) -> f64 {
    let lor = lorentzian_scan_fwhm(&cfg.emitter, 0.0);
    let gauss = 2.0 * (2.0 * 2f64.ln()).sqrt() * cfg.emitter.spectral_diffusion.sigma
        / (2.0 * std::f64::consts::PI * 1e9);
    5.0 * (lor + gauss)
}

fn channel_counts(tags: &TagStream) -> Vec<usize> {
    (0..tags.channels).map(|c| tags.count(c)).collect()
}

pub fn simulate(a: &SimulateArgs) -> CliResult<()> {
    let cfg = load_config(a.config.as_deref())?;
    if !(a.duration_ns > 0.0 && a.duration_ns.is_finite()) {
        return Err(CliError::Usage("--duration-ns must be positive".into()));
    }
    if a.measurement == Measurement::Hom && a.pol.is_none() {
        return Err(CliError::Usage(
            "--measurement hom needs --pol co|cross".into(),
        ));
    }
    let prov = provenance(
        "simulate",
        Some(a.seed),
        &json!({ "args": a, "config": cfg }),
    )?;
    let mut side = json!({ "provenance": prov, "measurement": a.measurement });

    match a.measurement {
        Measurement::Tags | Measurement::Hom => {
            let photons = simulate_stream(&cfg.emitter, a.duration_ns, a.seed)?;
            side["photons"] = json!({
                "x": photons.count(Transition::X),
                "xx": photons.count(Transition::XX),
            });
            let (tags, warnings) = if a.measurement == Measurement::Tags {
                (
                    apply_detection(&photons, &cfg.detection, cfg.routing, a.seed)?,
                    vec![],
                )
            } else {
                let opts = HomSimOptions {
                    delta_t_ns: a.delta_t_ns,
                    polarization: hom_pol(a.pol.unwrap()),
                };
                let out = simulate_hom(&photons, &cfg.emitter, &opts, &cfg.detection, a.seed)?;
                side["pairs"] = json!(out.pairs);
                (out.tags, out.warnings)
            };
            for w in &warnings {
                eprintln!("warning: {w}");
            }
            write_tags(&tags, &a.out)?;
            side["tags_per_channel"] = json!(channel_counts(&tags));
            side["warnings"] = json!(warnings);
        }
        Measurement::Mi => {
            let max_delay = a.max_delay_ps.unwrap_or_else(|| default_max_delay_ps(&cfg));
            let delays = linspace(0.0, max_delay, a.points);
            let pts = simulate_mi_visibility(&cfg.emitter, &delays, a.seed)?;
            let insufficient: Vec<f64> = pts
                .iter()
                .filter(|p| p.insufficient)
                .map(|p| p.delay_ps)
                .collect();
            let data = XyData::new(
                pts.iter().map(|p| p.delay_ps).collect(),
                pts.iter().map(|p| p.visibility).collect(),
            )
            .with_header("delay_ps", "visibility");
            write_xy(&data, &a.out)?;
            side["insufficient_delays_ps"] = json!(insufficient);
        }
        Measurement::Scan => {
            let span = a.span_ghz.unwrap_or_else(|| default_span_ghz(&cfg));
            let det = linspace(-span, span, a.points);
            let pts = simulate_rf_scan(&cfg.emitter, &det, a.seed)?;
            let data = XyData::new(
                pts.iter().map(|p| p.detuning_ghz).collect(),
                pts.iter().map(|p| p.counts).collect(),
            )
            .with_header("detuning_ghz", "counts");
            write_xy(&data, &a.out)?;
        }
    }
    write_json(&sidecar_path(&a.out), &side)
}

pub fn correlate(a: &CorrelateArgs) -> CliResult<()> {
    if a.mode == CorrelateMode::Hom && a.pol.is_none() {
        return Err(CliError::Usage(
            "hom correlation needs --pol co|cross".into(),
        ));
    }
    let tags = read_tags(&a.input)?;
    let req = CorrelationRequest::new(a.channel_a, a.channel_b, a.bin_ps, a.window_ns * 1000);
    let raw = cross_correlate(&tags, &req)?;
    let hist = match a.norm {
        NormMode::None => raw,
        NormMode::Poisson => normalize(&raw, Normalization::PoissonRate)?,
        NormMode::FarWing => {
            let (inner, outer) = (a.norm_window_ns[0], a.norm_window_ns[1]);
            normalize(
                &raw,
                Normalization::FarWing {
                    inner_ps: inner * 1e3,
                    outer_ps: outer * 1e3,
                },
            )?
        }
    };
    write_histogram(&hist, &a.out)?;
    let prov = provenance(
        "correlate",
        None,
        &json!({ "args": a, "input_sha256": file_hash(&a.input)? }),
    )?;
    let side = json!({
        "provenance": prov,
        "mode": a.mode,
        "pol": a.pol,
        "normalization": a.norm,
        "n_bins": hist.n_bins(),
        "norm": hist.norm,
    });
    write_json(&sidecar_path(&a.out), &side)
}

fn xy_input(a: &FitArgs) -> CliResult<XyData> {
    let path = a
        .data
        .as_deref()
        .ok_or_else(|| CliError::Usage("--data is required for this model".into()))?;
    Ok(read_xy(path)?)
}

fn run_fit(a: &FitArgs) -> CliResult<FitResult> {
    Ok(match a.model {
        FitModel::Tcspc => {
            let d = xy_input(a)?;
            let opts = TcspcOptions {
                rise: match a.rise {
                    Rise::Both => RiseMode::Both,
                    Rise::FastOnly => RiseMode::FastOnly,
                },
                ..TcspcOptions::default()
            };
            fit_tcspc(&d.x, &d.y, &opts)?.fit
        }
        FitModel::Scan => {
            let d = xy_input(a)?;
            fit_scan(&d.x, &d.y, &ScanOptions::default())?.fit
        }
        FitModel::Mi => {
            let d = xy_input(a)?;
            fit_mi(&d.x, &d.y, &MiOptions::default())?.fit
        }
        FitModel::Rabi => {
            let d = xy_input(a)?;
            if !(a.t1_ns > 0.0) {
                return Err(CliError::Usage("--t1-ns must be positive".into()));
            }
            let opts = RabiOptions {
                shape: PulseShape {
                    duration_fwhm: a.pulse_fwhm_ps,
                    ..PulseShape::default()
                },
                gamma_rad: 1.0 / a.t1_ns,
                fit_deph: a.fit_dephasing,
                ..RabiOptions::default()
            };
            fit_rabi(&d.x, &d.y, &opts)?.fit
        }
        FitModel::Hbt => {
            let path = a
                .data
                .as_deref()
                .ok_or_else(|| CliError::Usage("--data is required for hbt".into()))?;
            let hist = read_histogram(path)?;
            let opts = HbtOptions {
                no_bunching: a.no_bunching,
                ..HbtOptions::new(a.irf_fwhm_ps)
            };
            fit_hbt(&hist, &opts)?.fit
        }
        FitModel::Hom => {
            let (Some(co), Some(cross)) = (a.co.as_deref(), a.cross.as_deref()) else {
                return Err(CliError::Usage(
                    "hom fits need --co and --cross histograms".into(),
                ));
            };
            let opts = HomOptions {
                delta_t_ns: a.delta_t_ns,
                tie_dip: a.tie_dip,
                ..HomOptions::new(a.irf_fwhm_ps)
            };
            fit_hom(&read_histogram(co)?, &read_histogram(cross)?, &opts)?.combined()
        }
    })
}

pub fn fit(a: &FitArgs) -> CliResult<()> {
    let mut inputs = Vec::new();
    for p in [&a.data, &a.co, &a.cross].into_iter().flatten() {
        inputs.push(file_hash(p)?);
    }
    let mut result = run_fit(a)?;
    result.provenance = Some(provenance(
        "fit",
        None,
        &json!({ "args": a, "input_sha256": inputs }),
    )?);
    let text = result.to_json()?;
    match &a.out {
        Some(p) => std::fs::write(p, format!("{text}\n")).map_err(|e| io_err(p, e))?,
        None => {
            let mut out = std::io::stdout().lock();
            writeln!(out, "{text}").map_err(|e| io_err(Path::new("<stdout>"), e))?;
        }
    }
    if !result.converged {
        return Err(CliError::NotConverged(format!(
            "{} model stopped after {} iterations (gradient norm {:.3e})",
            result.model, result.iterations, result.gradient_norm
        )));
    }
    Ok(())
}

pub fn report(a: &ReportArgs) -> CliResult<()> {
    let mut fits = Vec::with_capacity(a.fits.len());
    let mut hashes = Vec::with_capacity(a.fits.len());
    for p in &a.fits {
        fits.push(FitResult::read_json(p)?);
        hashes.push(file_hash(p)?);
    }
    let rep = build_report(&fits)?;
    print!("{}", rep.to_text());
    if let Some(path) = &a.json {
        let mut v: Value = serde_json::to_value(&rep).map_err(Error::from)?;
        v["provenance"] =
            serde_json::to_value(provenance("report", None, &json!({ "inputs": hashes }))?)
                .map_err(Error::from)?;
        write_json(path, &v)?;
    }
    Ok(())
}
