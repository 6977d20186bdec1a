//! Figure and table reproductions.

use batrap_core::beam::{doppler_fwhm, most_probable_speed};
use batrap_core::fitting::{fit, fm, DataSeries, FitOptions, FitResult, Gaussian, TwoGaussian};
use batrap_core::loading::{
    efficiency_comparison, saturation_estimate, simulate_trials, table_one, LoadingScenario, Spectrum,
    TransverseProfile,
};
use batrap_core::rng::SeedKey;
use batrap_core::trap::{
    calibrate_geometry, chain_equilibrium, implied_axial_frequency, mathieu_parameters, secular_frequencies,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Resolved, ScenarioFile};
use crate::error::CliError;
use crate::output::{num, Table, Writer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Scenario {
    Fig3,
    Fig4,
    Fig5,
    Fig6,
    Table1,
    #[value(name = "fig2-chain")]
    Fig2Chain,
    Doppler,
    #[value(name = "trap-freqs")]
    TrapFreqs,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Fig3 => "fig3",
            Scenario::Fig4 => "fig4",
            Scenario::Fig5 => "fig5",
            Scenario::Fig6 => "fig6",
            Scenario::Table1 => "table1",
            Scenario::Fig2Chain => "fig2-chain",
            Scenario::Doppler => "doppler",
            Scenario::TrapFreqs => "trap-freqs",
        }
    }

    fn stem(self) -> String {
        self.name().replace('-', "_")
    }
}

/// Resolved configuration plus the identity of the run.
pub struct Context {
    pub config: Resolved,
    pub digest: String,
    pub seed: u64,
    pub samples: usize,
}

impl Context {
    pub fn new(file: &ScenarioFile, seed: Option<u64>, samples: Option<usize>) -> Result<Self, CliError> {
        let config = file.resolve()?;
        let samples = samples.unwrap_or(config.samples);
        if samples < crate::config::MIN_SAMPLES {
            return Err(CliError::Config(format!(
                "invalid value for --samples: must be at least {}",
                crate::config::MIN_SAMPLES
            )));
        }
        Ok(Self {
            seed: seed.unwrap_or(config.seed),
            samples,
            digest: file.digest(),
            config,
        })
    }

    fn key(&self, label: &str) -> SeedKey {
        SeedKey::derive(self.seed, label)
    }

    fn summary(&self, scenario: Scenario, results: Value) -> Value {
        json!({
            "scenario": scenario.name(),
            "seed": self.seed,
            "config_digest": self.digest,
            "samples": self.samples,
            "results": results,
        })
    }

    /// Calibrated loading scenario restricted to `isotopes`.
    pub fn loading(&self, filter: impl Fn(&batrap_core::constants::IsotopeRecord) -> bool) -> Result<LoadingScenario, CliError> {
        let c = &self.config;
        let profile = TransverseProfile::sample(
            &c.beam,
            c.excitation.transition.wavelength,
            self.samples,
            c.profile_bin,
            &self.key("beam-profile"),
        )
        .map_err(CliError::numerical)?;
        let isotopes = c.isotopes.iter().filter(|i| filter(i)).cloned().collect();
        let mut s = LoadingScenario::new(c.beam, c.excitation, c.pi_step, isotopes, profile).map_err(CliError::numerical)?;
        s.background_rate = c.background_rate;
        s.hyperfine_weighting = c.hyperfine_weighting;
        s.intensity_averaging = c.intensity_averaging;
        s.calibrate(&c.anchor).map_err(CliError::numerical)?;
        Ok(s)
    }
}

pub fn run(ctx: &Context, scenario: Scenario, out: &mut Writer) -> Result<(), CliError> {
    let results = match scenario {
        Scenario::Fig3 => fig3(ctx, out)?,
        Scenario::Fig4 => fig4(ctx, out)?,
        Scenario::Fig5 => fig5(ctx, out)?,
        Scenario::Fig6 => fig6(ctx, out)?,
        Scenario::Table1 => table1(ctx, out)?,
        Scenario::Fig2Chain => fig2_chain(ctx, out)?,
        Scenario::Doppler => doppler(ctx)?,
        Scenario::TrapFreqs => trap_freqs(ctx)?,
    };
    out.json(&format!("{}_summary.json", scenario.stem()), &ctx.summary(scenario, results))
}

fn spectrum_table(sp: &Spectrum) -> Table {
    let mut t = Table::new(vec!["detuning_hz", "isotope", "rate_ions_per_s"]);
    for (i, &d) in sp.detunings.iter().enumerate() {
        for tr in &sp.traces {
            t.push(vec![num(d), tr.mass_number.to_string(), num(tr.rates[i])]);
        }
        t.push(vec![num(d), "total".to_string(), num(sp.total[i])]);
    }
    t
}

#[derive(Serialize)]
struct PeakFit {
    isotope: u32,
    fit: Option<FitResult>,
    note: Option<&'static str>,
}

fn fit_gaussian(x: &[f64], y: &[f64]) -> Result<Option<FitResult>, CliError> {
    let (lo, hi) = y.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if !(hi > lo) {
        return Ok(None);
    }
    let peak_at = x[y.iter().position(|&v| v == hi).unwrap_or(0)];
    let span = x[x.len() - 1] - x[0];
    let data = DataSeries::unweighted(x.to_vec(), y.to_vec()).map_err(CliError::numerical)?;
    let r = fit(&Gaussian, &data, &[hi - lo, peak_at, span / 6.0, lo], &FitOptions::default())
        .map_err(CliError::numerical)?;
    Ok(Some(r))
}

fn fig3(ctx: &Context, out: &mut Writer) -> Result<Value, CliError> {
    let c = &ctx.config;
    let lines = fm::line_table(&c.fm_isotopes, c.fm_width);
    let signal = fm::signal(&lines, c.fm_width, &c.fm_scan);
    let mut t = Table::new(vec!["detuning_hz", "signal"]);
    for (d, s) in c.fm_scan.iter().zip(&signal) {
        t.push(vec![num(*d), num(*s)]);
    }
    out.table("fig3_fm_signal", &t)?;
    let (model, params) = fm::model_for(&lines, c.fm_width);
    let step = c.fm_scan[1] - c.fm_scan[0];
    let zeros = fm::falling_zero_crossings(
        |x| batrap_core::fitting::Model::value(&model, x, &params),
        c.fm_scan[0],
        c.fm_scan[c.fm_scan.len() - 1],
        step,
    );
    let matched: Vec<Value> = lines
        .iter()
        .map(|l| {
            let nearest = zeros
                .iter()
                .copied()
                .min_by(|a, b| (a - l.center).abs().total_cmp(&(b - l.center).abs()));
            json!({
                "isotope": l.mass_number,
                "component": l.component,
                "center_hz": l.center,
                "amplitude": l.amplitude,
                "zero_crossing_hz": nearest,
            })
        })
        .collect();
    Ok(json!({ "width_hz": c.fm_width, "lines": matched, "zero_crossings_hz": zeros }))
}

fn fig4(ctx: &Context, out: &mut Writer) -> Result<Value, CliError> {
    let c = &ctx.config;
    let s = ctx.loading(|i| !i.is_odd())?.with_power(c.even_power);
    let sp = s.spectrum(&c.even_scan).map_err(CliError::numerical)?;
    out.table("fig4_spectrum", &spectrum_table(&sp))?;
    let mut fits = Vec::new();
    for tr in &sp.traces {
        let f = fit_gaussian(&sp.detunings, &tr.rates)?;
        let note = f.is_none().then_some("flat trace, no peak to fit");
        fits.push(PeakFit {
            isotope: tr.mass_number,
            fit: f,
            note,
        });
    }
    let reference = fits
        .iter()
        .find(|f| f.isotope == 138)
        .and_then(|f| f.fit.as_ref())
        .and_then(|f| f.value("amplitude"));
    let ratios: Vec<Value> = fits
        .iter()
        .map(|f| {
            let a = f.fit.as_ref().and_then(|r| r.value("amplitude")).unwrap_or(0.0);
            json!({ "isotope": f.isotope, "peak_ratio_138_is_75": reference.map(|r| 75.0 * a / r) })
        })
        .collect();
    Ok(json!({
        "power_w": c.even_power,
        "calibration_constant": s.calibration_constant,
        "fits": fits,
        "peak_ratios": ratios,
    }))
}

fn fig5(ctx: &Context, out: &mut Writer) -> Result<Value, CliError> {
    let c = &ctx.config;
    let s = ctx.loading(|i| i.is_odd())?.with_power(c.odd_power);
    let sp = s.spectrum(&c.odd_scan).map_err(CliError::numerical)?;
    out.table("fig5_spectrum", &spectrum_table(&sp))?;
    let mut per_isotope = Vec::new();
    for tr in &sp.traces {
        per_isotope.push(PeakFit {
            isotope: tr.mass_number,
            fit: fit_gaussian(&sp.detunings, &tr.rates)?,
            note: None,
        });
    }
    let mut combined = Value::Null;
    if s.isotopes.len() == 2 {
        let data = DataSeries::unweighted(sp.detunings.clone(), sp.total.clone()).map_err(CliError::numerical)?;
        let rate_at = |x: f64| {
            let i = sp.detunings.partition_point(|&d| d < x).min(sp.detunings.len() - 1);
            sp.total[i] - s.background_rate
        };
        let (c1, c2) = (s.isotopes[0].principal_line(), s.isotopes[1].principal_line());
        let init = [rate_at(c1), c1, rate_at(c2), c2, 100e6, s.background_rate];
        let r = fit(&TwoGaussian, &data, &init, &FitOptions::default()).map_err(CliError::numerical)?;
        let (a1, a2) = (r.value("a1").unwrap_or(0.0), r.value("a2").unwrap_or(0.0));
        let sep = r.value("c2").unwrap_or(0.0) - r.value("c1").unwrap_or(0.0);
        combined = json!({ "fit": r, "separation_hz": sep, "amplitude_ratio_a2_over_a1": a2 / a1 });
    }
    Ok(json!({
        "power_w": c.odd_power,
        "calibration_constant": s.calibration_constant,
        "two_gaussian": combined,
        "fits": per_isotope,
    }))
}

fn fig6(ctx: &Context, out: &mut Writer) -> Result<Value, CliError> {
    let c = &ctx.config;
    let iso = c.anchor.mass_number;
    let s = ctx.loading(|i| i.mass_number == iso)?;
    let scan = s.rate_vs_power(&c.power_scan, iso).map_err(CliError::numerical)?;
    let mut t = Table::new(vec!["power_w", "isotope", "rate_ions_per_s"]);
    for (p, r) in &scan {
        t.push(vec![num(*p), iso.to_string(), num(*r)]);
    }
    out.table("fig6_power", &t)?;
    let est = saturation_estimate(&s, iso, &c.power_scan).map_err(CliError::numerical)?;
    Ok(json!({
        "isotope": iso,
        "calibration_constant": s.calibration_constant,
        "p_sat_w": est.p_sat,
        "r_sat_ions_per_s": est.r_sat,
        "r_sat_error": est.r_sat_error,
        "exponent": est.exponent,
        "exponent_error": est.exponent_error,
        "prefactor": est.prefactor,
        "doppler_fwhm_hz": est.doppler_fwhm,
    }))
}

fn table1(ctx: &Context, out: &mut Writer) -> Result<Value, CliError> {
    let c = &ctx.config;
    let table = table_one();
    let iso = c.anchor.mass_number;
    let s = ctx.loading(|i| i.mass_number == iso)?.with_power(table.pi_power);
    let model = s.analytic_rate(s.selected(iso).map_err(CliError::numerical)?.principal_line(), iso);
    let model = model.map_err(CliError::numerical)?;
    let mut at_line = s.clone();
    at_line.excitation.detuning = s.selected(iso).map_err(CliError::numerical)?.principal_line();
    let trials = simulate_trials(&ctx.key("trials"), &at_line, iso, c.trial_duration, c.trials, c.trial_engine)
        .map_err(CliError::numerical)?;
    let abundance = s.selected(iso).map_err(CliError::numerical)?.abundance;
    let eff = efficiency_comparison(&table, abundance).map_err(CliError::numerical)?;

    let mut t = Table::new(vec!["source", "rate_ions_per_s", "uncertainty_ions_per_s"]);
    for (name, r) in [
        ("nitrogen_laser_only", table.nitrogen_only),
        ("electron_beam", table.electron_beam),
        ("uv_lamp", table.uv_lamp),
        ("photoionization", table.photoionization),
    ] {
        t.push(vec![name.to_string(), num(r.rate), num(r.uncertainty)]);
    }
    t.push(vec!["photoionization_model".to_string(), num(model), num(0.0)]);
    t.push(vec!["photoionization_simulated".to_string(), num(trials.rate), num(trials.uncertainty)]);
    out.table("table1_rates", &t)?;
    Ok(json!({
        "pi_power_w": table.pi_power,
        "isotope": iso,
        "abundance": abundance,
        "efficiency": eff,
        "model_rate_ions_per_s": model,
        "simulated": trials,
        "trial_engine": c.trial_engine,
    }))
}

fn fig2_chain(ctx: &Context, out: &mut Writer) -> Result<Value, CliError> {
    let c = &ctx.config;
    let (m, q) = (c.trap.ion_mass, c.trap.ion_charge);
    let nu = implied_axial_frequency(c.chain_ions, c.chain_spacing, m, q).map_err(CliError::numerical)?;
    let chain = chain_equilibrium(c.chain_ions, nu, m, q).map_err(CliError::numerical)?;
    let mut t = Table::new(vec!["index", "position_m"]);
    for (i, z) in chain.positions.iter().enumerate() {
        t.push(vec![i.to_string(), num(*z)]);
    }
    out.table("fig2_chain", &t)?;
    let at_target = chain_equilibrium(c.chain_ions, c.target_axial, m, q).map_err(CliError::numerical)?;
    Ok(json!({
        "n_ions": chain.n_ions,
        "implied_axial_frequency_hz": nu,
        "central_spacing_m": chain.central_spacing(),
        "length_scale_m": chain.length_scale,
        "max_force": chain.max_force,
        "iterations": chain.iterations,
        "target_axial_frequency_hz": c.target_axial,
        "central_spacing_at_target_m": at_target.central_spacing(),
    }))
}

/// Single Doppler-width record.
pub fn doppler(ctx: &Context) -> Result<Value, CliError> {
    let c = &ctx.config;
    let fwhm = doppler_fwhm(&c.beam, c.excitation.transition.wavelength, ctx.samples, &ctx.key("doppler"))
        .map_err(CliError::numerical)?;
    Ok(json!({
        "fwhm_hz": fwhm,
        "wavelength_m": c.excitation.transition.wavelength,
        "temperature_k": c.beam.oven_temperature,
        "divergence": c.beam.divergence,
        "most_probable_speed_m_per_s": most_probable_speed(&c.beam),
    }))
}

pub fn doppler_record(ctx: &Context) -> Result<Value, CliError> {
    Ok(ctx.summary(Scenario::Doppler, doppler(ctx)?))
}

fn trap_freqs(ctx: &Context) -> Result<Value, CliError> {
    let c = &ctx.config;
    let (a0, q0) = mathieu_parameters(&c.trap).map_err(CliError::numerical)?;
    let uncalibrated = secular_frequencies(&c.trap).ok();
    let cal = calibrate_geometry(&c.trap, c.target_radial, c.target_axial).map_err(CliError::numerical)?;
    let freqs = secular_frequencies(&cal).map_err(CliError::numerical)?;
    Ok(json!({
        "effective_radius_m": c.trap.effective_radius(),
        "uncalibrated": { "mathieu_a": a0, "mathieu_q": q0, "frequencies": uncalibrated },
        "kappa_radial": cal.kappa_radial,
        "kappa_axial": cal.kappa_axial,
        "calibrated": freqs,
    }))
}
