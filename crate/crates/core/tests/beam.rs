use batrap_core::beam::{
    doppler_fwhm, most_probable_speed, sample_atom, sample_doppler_shifts, BeamConfig, Divergence,
};
use batrap_core::constants::isotope;
use batrap_core::rng::SeedKey;

const WAVELENGTH: f64 = 791.35e-9;

fn beam(divergence: Divergence) -> BeamConfig {
    BeamConfig::new(573.15, divergence, isotope(138).unwrap().atomic_mass).unwrap()
}

fn gaussian() -> BeamConfig {
    beam(Divergence::Gaussian { fwhm: 0.3 })
}

/// Vertex of a least-squares parabola through (x, y).
fn parabola_vertex(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let x0 = x.iter().sum::<f64>() / n;
    let (mut s2, mut s3, mut s4, mut t0, mut t1, mut t2) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for (&xi, &yi) in x.iter().zip(y) {
        let u = xi - x0;
        s2 += u * u;
        s3 += u * u * u;
        s4 += u * u * u * u;
        t0 += yi;
        t1 += u * yi;
        t2 += u * u * yi;
    }
    // normal equations for y = c0 + c1 u + c2 u², with Σu = 0
    let m = [[n, 0.0, s2], [0.0, s2, s3], [s2, s3, s4]];
    let det = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(m);
    let rhs = [t0, t1, t2];
    let solve = |col: usize| {
        let mut mm = m;
        for r in 0..3 {
            mm[r][col] = rhs[r];
        }
        det(mm) / d
    };
    let (c1, c2) = (solve(1), solve(2));
    x0 - c1 / (2.0 * c2)
}

#[test]
fn speed_mode_matches_most_probable_speed() {
    let cfg = gaussian();
    let mut rng = SeedKey::derive(3, "speeds").stream(0);
    let bin = 5.0;
    let mut counts = vec![0.0f64; 400];
    for _ in 0..1_000_000 {
        let (v, _) = sample_atom(&mut rng, &cfg);
        let i = (v / bin) as usize;
        if i < counts.len() {
            counts[i] += 1.0;
        }
    }
    let peak = counts.iter().cloned().enumerate().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap().0;
    let window: Vec<usize> = (peak.saturating_sub(15)..=peak + 15).collect();
    let x: Vec<f64> = window.iter().map(|&i| (i as f64 + 0.5) * bin).collect();
    let y: Vec<f64> = window.iter().map(|&i| counts[i].ln()).collect();
    let mode = parabola_vertex(&x, &y);
    let expected = most_probable_speed(&cfg);
    assert!((mode / expected - 1.0).abs() < 0.02, "mode {mode} vs {expected}");
}

#[test]
fn cone_directions_are_uniform_in_solid_angle() {
    for half_angle in [0.05, 0.2, 0.6] {
        let cfg = beam(Divergence::Cone { half_angle });
        let mut rng = SeedKey::derive(4, "cone").stream(0);
        let n = 200_000;
        let mean_cos = (0..n).map(|_| sample_atom(&mut rng, &cfg).1.z).sum::<f64>() / n as f64;
        let expected = 0.5 * (1.0 + half_angle.cos());
        let sd = (1.0 - half_angle.cos()) / 12f64.sqrt() / (n as f64).sqrt();
        assert!((mean_cos - expected).abs() < 5.0 * sd, "h={half_angle}: {mean_cos} vs {expected}");
    }
}

#[test]
fn perpendicular_doppler_distribution_is_symmetric() {
    let shifts = sample_doppler_shifts(&gaussian(), WAVELENGTH, 1_000_000, &SeedKey::derive(5, "doppler"));
    let n = shifts.len() as f64;
    let mean = shifts.iter().sum::<f64>() / n;
    let var = shifts.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let skew = shifts.iter().map(|x| (x - mean).powi(3)).sum::<f64>() / n / var.powf(1.5);
    assert!(skew.abs() < 0.02, "skewness {skew}");
    assert!(mean.abs() < 5.0 * (var / n).sqrt(), "mean {mean}");
}

#[test]
fn same_key_same_samples() {
    let cfg = gaussian();
    let key = SeedKey::derive(9, "doppler");
    let a = sample_doppler_shifts(&cfg, WAVELENGTH, 50_000, &key);
    let b = sample_doppler_shifts(&cfg, WAVELENGTH, 50_000, &key);
    assert_eq!(a, b);
    let c = sample_doppler_shifts(&cfg, WAVELENGTH, 50_000, &SeedKey::derive(10, "doppler"));
    assert_ne!(a, c);
}

#[test]
fn doppler_width_scales_with_divergence() {
    let key = SeedKey::derive(6, "doppler");
    let wide = doppler_fwhm(&gaussian(), WAVELENGTH, 1_000_000, &key).unwrap();
    let narrow = doppler_fwhm(&beam(Divergence::Gaussian { fwhm: 0.15 }), WAVELENGTH, 1_000_000, &key).unwrap();
    assert!((narrow / wide - 0.5).abs() < 0.025, "{narrow} / {wide}");
}

#[test]
fn doppler_width_scales_with_root_temperature() {
    let key = SeedKey::derive(7, "doppler");
    let cold = gaussian();
    let hot = BeamConfig {
        oven_temperature: 4.0 * cold.oven_temperature,
        ..cold
    };
    let a = doppler_fwhm(&cold, WAVELENGTH, 1_000_000, &key).unwrap();
    let b = doppler_fwhm(&hot, WAVELENGTH, 1_000_000, &key).unwrap();
    assert!((b / a - 2.0).abs() < 0.04, "{}", b / a);
}
