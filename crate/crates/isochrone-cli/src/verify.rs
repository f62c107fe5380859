//! Built-in verification suites: quick, deterministic self-checks of the
//! geometry, orbit, law, and transformation machinery.

use isochrone::bolst_relativity::{
    back_to_kepler, ibolst_potential_image, map_kepler_orbit, Bolst, Ibolst, KeplerEllipse,
    SignPair, SourceKind,
};
use isochrone::closed_forms::{
    bertrand_scan, integral_i1, integral_i2, kepler3_check, n_phi_analytic, tau_r_analytic,
};
use isochrone::henon_geometry::{check_property_p, to_henon_curve, Parabola, ReducedFamily, SampledCurve};
use isochrone::orbit_engine::{
    azimuthal_increment_quad, circular_orbit, radial_period_quad, OrbitParams,
};
use isochrone::{AffineTransform, PotentialSpec};

/// One named pass/fail check.
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

fn push(out: &mut Vec<Check>, suite: &str, name: &str, result: Result<(bool, String), String>) {
    let (pass, detail) = match result {
        Ok((pass, detail)) => (pass, detail),
        Err(e) => (false, format!("error: {e}")),
    };
    out.push(Check { name: format!("{suite}/{name}"), pass, detail });
}

/// Run one suite, appending its checks.
pub fn run_suite(suite: &str, out: &mut Vec<Check>) {
    match suite {
        "geometry" => geometry(out),
        "orbits" => orbits(out),
        "laws" => laws(out),
        "bolst" => bolst(out),
        _ => unreachable!("suite names are validated by the CLI"),
    }
}

fn err_str(e: isochrone::Error) -> String {
    e.to_string()
}

fn geometry(out: &mut Vec<Check>) {
    push(out, "geometry", "classify_kepler_parabola", (|| {
        let p = Parabola::from_coeffs(0.0, 1.0, -2.0, 0.0, 0.0).map_err(err_str)?;
        let c = p.reduce().map_err(err_str)?;
        let mu = c.mu.unwrap_or(f64::NAN);
        let ok = c.family == ReducedFamily::Kepler && (mu - 1.0).abs() < 1e-12;
        Ok((ok, format!("family {} mu {mu:.3e}", c.family)))
    })());

    push(out, "geometry", "classify_recovers_gauge", (|| {
        let psi = PotentialSpec::henon(1.3, 0.8)
            .map_err(err_str)?
            .apply_affine(&AffineTransform::new(0.4, 0.25));
        let c = to_henon_curve(&psi).map_err(err_str)?.reduce().map_err(err_str)?;
        let (mu, b) = (c.mu.unwrap_or(f64::NAN), c.scale_b.unwrap_or(f64::NAN));
        let ok = c.family == ReducedFamily::HenonPlus
            && (mu - 1.3).abs() < 1e-9
            && (b - 0.8).abs() < 1e-9
            && (c.affine.lambda - 0.25).abs() < 1e-9;
        Ok((ok, format!("family {} mu {mu:.6} b {b:.6} lambda {:.6}", c.family, c.affine.lambda)))
    })());

    push(out, "geometry", "property_p_accepts_parabola_rejects_quartic", (|| {
        let lambdas = [1e-3, 3e-3, 1e-2, 3e-2];
        let para = SampledCurve(|x: f64| 0.5 * x * x + 0.3 * x);
        let good = check_property_p(&para, (0.5, 6.0), 2.0, &lambdas, 1e-6).map_err(err_str)?;
        let quartic = SampledCurve(|x: f64| x * x * x * x);
        let bad = check_property_p(&quartic, (0.5, 6.0), 2.0, &lambdas, 1e-6).map_err(err_str)?;
        let ok = good.is_parabola && !bad.is_parabola;
        Ok((ok, format!("parabola spread {:.3e}, quartic spread {:.3e}", good.spread, bad.spread)))
    })());
}

fn orbits(out: &mut Vec<Check>) {
    push(out, "orbits", "henon_period_quad_vs_analytic", (|| {
        let psi = PotentialSpec::henon(1.0, 1.0).map_err(err_str)?;
        let l = 0.7;
        let (_, xi_c) = circular_orbit(&psi, l).map_err(err_str)?;
        let xi = xi_c + 0.4 * (psi.psi_infinity() - xi_c);
        let orbit = OrbitParams::new(xi, l);
        let tau_q = radial_period_quad(&psi, orbit).map_err(err_str)?;
        let tau_a = tau_r_analytic(&psi, xi).map_err(err_str)?;
        let rel = (tau_q - tau_a).abs() / tau_a;
        Ok((rel < 1e-8, format!("relative difference {rel:.3e}")))
    })());

    push(out, "orbits", "henon_precession_quad_vs_analytic", (|| {
        let psi = PotentialSpec::henon(1.0, 1.0).map_err(err_str)?;
        let l = 0.7;
        let (_, xi_c) = circular_orbit(&psi, l).map_err(err_str)?;
        let xi = xi_c + 0.4 * (psi.psi_infinity() - xi_c);
        let orbit = OrbitParams::new(xi, l);
        let n_q = azimuthal_increment_quad(&psi, orbit).map_err(err_str)?;
        let n_a = n_phi_analytic(&psi, l).map_err(err_str)?;
        let rel = (n_q - n_a).abs();
        Ok((rel < 1e-8, format!("absolute difference {rel:.3e}")))
    })());

    push(out, "orbits", "henon_precession_spot_value", (|| {
        let psi = PotentialSpec::henon(1.0, 1.0).map_err(err_str)?;
        let n = n_phi_analytic(&psi, 2.0).map_err(err_str)?;
        let expected = 0.5 * (1.0 + 2.0 / (4.0 + 4.0f64).sqrt());
        let diff = (n - expected).abs();
        Ok((diff < 1e-12, format!("n_phi(L=2) {n:.15}, difference {diff:.3e}")))
    })());
}

fn laws(out: &mut Vec<Check>) {
    push(out, "laws", "third_law_kepler_and_henon", (|| {
        let mut worst = 0.0f64;
        for psi in [
            PotentialSpec::kepler(1.0).map_err(err_str)?,
            PotentialSpec::henon(1.0, 1.0).map_err(err_str)?,
        ] {
            let l = 0.6;
            let (_, xi_c) = circular_orbit(&psi, l).map_err(err_str)?;
            let xi = xi_c + 0.35 * (psi.psi_infinity() - xi_c);
            let rep = kepler3_check(&psi, OrbitParams::new(xi, l)).map_err(err_str)?;
            worst = worst.max(rep.kepler3_residual);
            if let Some(r) = rep.energy_form_residual {
                worst = worst.max(r);
            }
        }
        Ok((worst < 1e-8, format!("worst residual {worst:.3e}")))
    })());

    push(out, "laws", "closed_orbits_kepler_harmonic_only", (|| {
        let henon = PotentialSpec::henon(1.0, 1.0).map_err(err_str)?;
        let mut verdicts = Vec::new();
        for (name, psi, l_grid) in [
            ("Kepler", PotentialSpec::kepler(1.0).map_err(err_str)?, [0.4, 0.6, 0.8]),
            ("Harmonic", PotentialSpec::harmonic(1.0).map_err(err_str)?, [0.4, 0.6, 0.8]),
            ("Henon", henon, [0.4, 0.6, 0.8]),
        ] {
            let l_max = l_grid[2];
            let (_, xi_c) = circular_orbit(&psi, l_max).map_err(err_str)?;
            let hi = if psi.psi_infinity().is_finite() { psi.psi_infinity() } else { xi_c.abs() * 3.0 + xi_c };
            let xi_grid: Vec<f64> = (1..=3).map(|i| xi_c + 0.2 * i as f64 * (hi - xi_c)).collect();
            let rep = bertrand_scan(&psi, &xi_grid, &l_grid).map_err(err_str)?;
            verdicts.push((name, rep.all_closed));
        }
        let ok = verdicts == [("Kepler", true), ("Harmonic", true), ("Henon", false)];
        Ok((ok, format!("{verdicts:?}")))
    })());

    push(out, "laws", "defining_integral_half_sum", (|| {
        let (u1, u2) = (2.5, 7.0);
        let lhs = 2.0 * integral_i2(u1, u2).map_err(err_str)?;
        let rhs = integral_i1(u1, u2).map_err(err_str)?
            + integral_i1(u1 - 2.0, u2 - 2.0).map_err(err_str)?;
        let diff = (lhs - rhs).abs();
        Ok((diff < 1e-12, format!("|2 I2 - (I1 + I1 shifted)| = {diff:.3e}")))
    })());
}

fn bolst(out: &mut Vec<Check>) {
    push(out, "bolst", "group_inverse", (|| {
        let b = Bolst::new(1.4, -0.3).map_err(err_str)?;
        let id = b.compose(&b.inverse()).map_err(err_str)?;
        let m = id.matrix();
        let dev = (m[0][0] - 1.0).abs() + m[0][1].abs() + (m[1][1] - 1.0).abs() + m[1][0].abs();
        Ok((dev < 1e-14, format!("|B B^-1 - I| = {dev:.3e}")))
    })());

    push(out, "bolst", "figure_eight_increment", (|| {
        // chi = p alpha |xi0| / (mu beta) = 0.875 with e = 0.7 gives the
        // reference azimuthal increment 1.503038 pi.
        let ell = KeplerEllipse::new(1.0, 0.7, 1.0, -0.5).map_err(err_str)?;
        let b = Bolst::new(1.0, 4.0 / 7.0).map_err(err_str)?;
        let grid: Vec<f64> = (0..=64).map(|i| 2.0 * std::f64::consts::PI * i as f64 / 64.0).collect();
        let mapped = map_kepler_orbit(&b, &ell, -1.0, &grid).map_err(err_str)?;
        let ratio = mapped.delta_phi1 / std::f64::consts::PI;
        let diff = (ratio - 1.503038).abs();
        Ok((diff < 1e-5, format!("delta_phi1/pi = {ratio:.6}, difference {diff:.3e}")))
    })());

    push(out, "bolst", "potential_image_worked_example", (|| {
        let g = Ibolst::new(2.0).map_err(err_str)?;
        let img = ibolst_potential_image(&g, SourceKind::Kepler, SignPair::Same, -1.0, -1.0, 1.0)
            .map_err(err_str)?;
        let b_ref = 1.0 / 24.0f64.sqrt();
        let mu_ref = 16.0 / (3.0 * 24.0f64.sqrt());
        let dev = (img.b - b_ref).abs() + (img.mu_prime - mu_ref).abs() + (img.epsilon.abs() - 3.0).abs();
        let ok = img.family == ReducedFamily::HenonPlus && dev < 1e-12;
        Ok((ok, format!("family {} deviation {dev:.3e}", img.family)))
    })());

    push(out, "bolst", "back_to_kepler_roundtrip", (|| {
        let kepler = Parabola::from_coeffs(0.0, 1.0, -2.0, 0.0, 0.0).map_err(err_str)?;
        let g = Ibolst::new(2.0).map_err(err_str)?;
        let image = kepler.apply_linear(&g.matrix()).map_err(err_str)?;
        let frame = back_to_kepler(&image).map_err(err_str)?;
        let diff = (frame.gamma - 2.0).abs();
        Ok((diff < 1e-9, format!("recovered gamma {:.12}, difference {diff:.3e}", frame.gamma)))
    })());
}
