//! Self-checks run by `supdens verify`.

use num_complex::Complex64;
use supdens_core::coefficients::{coeff_a, coeff_b};
use supdens_core::density::{Evaluator, Expansion, Mode};
use supdens_core::oracle::{McConfig, MellinPipeline, PoleSpec};
use supdens_core::Result;

use crate::grid::parse_grid;
use crate::output::format_num;
use crate::mc::{dominance, mc_supremum_cdf_par, series_cdf};

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Check { name: name.into(), value, tolerance, pass: value <= tolerance }
    }

    fn failed(name: impl Into<String>, tolerance: f64) -> Self {
        Check { name: name.into(), value: f64::NAN, tolerance, pass: false }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Far-side points where both the convergent series and the optimally truncated
/// expansion apply.
pub fn cross_points(ev: &Evaluator) -> [f64; 4] {
    if ev.params().upper_regime() {
        [5.0, 10.0, 20.0, 50.0]
    } else {
        [0.2, 0.1, 0.05, 0.02]
    }
}

/// Relative convergent-vs-asymptotic difference and its allowance at `x`.
pub fn cross_regime(ev: &Evaluator, x: f64, eps: f64) -> Result<(f64, f64)> {
    let side = if ev.params().upper_regime() { Expansion::Large } else { Expansion::Small };
    let asym = ev.asymptotic(x, eps, side)?;
    let conv = ev.density(x, eps, Mode::Convergent)?;
    let floor = asym.est_error / asym.value.abs();
    Ok((rel(conv.value, asym.value), 1e-4f64.max(floor)))
}

/// Normalization, leading-order limits, cross-regime agreement and the Mellin checks.
pub fn core_checks(ev: &Evaluator) -> Vec<Check> {
    let mut out = Vec::new();
    let p = ev.params();

    match ev.total_mass(1e-10) {
        Ok(m) => out.push(Check::at_most("normalization |mass - 1|", (m.mass - 1.0).abs(), 1e-8)),
        Err(_) => out.push(Check::failed("normalization |mass - 1|", 1e-8)),
    }

    let (ar, b) = (p.alpha() * p.rho(), p.alpha());
    let lim = |x: f64, power: f64, want: Result<f64>| -> Option<f64> {
        let d = ev.density(x, 1e-10, Mode::Auto).ok()?;
        Some(rel(d.value * x.powf(power), want.ok()?))
    };
    let a00 = coeff_a(p, 0, 0).map(|v| v.to_f64());
    let b01 = coeff_b(p, 0, 1).map(|v| v.to_f64());
    // first corrections are O(x^{min(1, alpha)}) and O(x^{-min(1, alpha)})
    let decades = 4.0 / b.min(1.0);
    let (small, large) = (10f64.powf(-decades), 10f64.powf(decades));
    for (name, v) in [
        (format!("limit at {} vs a(0,0)", format_num(small)), lim(small, 1.0 - ar, a00)),
        (format!("limit at {} vs b(0,1)", format_num(large)), lim(large, 1.0 + b, b01)),
    ] {
        out.push(match v {
            Some(v) => Check::at_most(name, v, 1e-3),
            None => Check::failed(name, 1e-3),
        });
    }

    for x in cross_points(ev) {
        let name = format!("cross-regime at x = {x}");
        match cross_regime(ev, x, 1e-10) {
            Ok((d, tol)) => out.push(Check::at_most(name, d, tol)),
            Err(_) => out.push(Check::failed(name, 1e-4)),
        }
    }

    match MellinPipeline::new(ev) {
        Ok(mp) => {
            match mp.mellin(Complex64::new(1.0, 0.0)) {
                Ok(m) => out.push(Check::at_most("Mellin |M(1) - 1|", (m.value - 1.0).norm(), 1e-8)),
                Err(_) => out.push(Check::failed("Mellin |M(1) - 1|", 1e-8)),
            }
            for s in [Complex64::new(0.8, 0.0), Complex64::new(1.2, 0.0), Complex64::new(1.2, 0.5)] {
                let name = format!("functional equation at s = {s}");
                match mp.functional_eq_residual(s) {
                    Ok(r) => out.push(Check::at_most(name, r, 1e-5)),
                    Err(_) => out.push(Check::failed(name, 1e-5)),
                }
            }
            let res = PoleSpec::minus(ev, 0, 0)
                .and_then(|pole| Ok(rel(mp.residue_estimate(&pole)?, pole.residue_ref.to_f64())));
            match res {
                Ok(r) => out.push(Check::at_most("residue at 1 - alpha rho vs a(0,0)", r, 0.01)),
                Err(_) => out.push(Check::failed("residue at 1 - alpha rho vs a(0,0)", 0.01)),
            }
        }
        Err(_) => out.push(Check::failed("Mellin pipeline", 0.0)),
    }
    out
}

/// Default grid for the Monte Carlo comparison.
pub const MC_GRID: &str = "log:0.02:20:40";

/// One-sided dominance and sup-norm at `steps`, and the sup-norm trend when doubling.
pub fn mc_checks(ev: &Evaluator, paths: usize, steps: usize, seed: u64) -> Result<Vec<Check>> {
    let grid = parse_grid(MC_GRID)?;
    let f_series = series_cdf(ev, &grid, 1e-10)?;
    let run = |steps: usize| -> Result<_> {
        let cfg = McConfig { paths, steps, seed, grid: grid.clone() };
        mc_supremum_cdf_par(ev.params(), &cfg)
    };
    let e1 = run(steps)?;
    let e2 = run(2 * steps)?;
    let d1 = dominance(&e1, &f_series);
    let d2 = dominance(&e2, &f_series);
    let noise = e1.stderr.iter().zip(&e2.stderr).map(|(a, b)| 3.0 * (a * a + b * b).sqrt()).fold(0.0, f64::max);
    Ok(vec![
        Check::at_most(format!("MC max (F_series - F_emp) / stderr, steps = {steps}"), d1.worst_z, 3.0),
        Check::at_most(format!("MC sup-norm, steps = {steps}"), d1.sup_norm, 0.02),
        Check::at_most(format!("MC sup-norm, steps = {}", 2 * steps), d2.sup_norm, d1.sup_norm + noise),
    ])
}
