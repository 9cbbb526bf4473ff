//! The verification commands. Each turns a [`ScenarioConfig`] into a
//! [`Section`] of checks; planar-only commands skip scenarios with `m ≠ 2`.

use std::f64::consts::PI;
use std::time::Instant;

use anyhow::{anyhow, Context};
use onehomog_core::homog::{construct_solution, jacobian, Combination};
use onehomog_core::planar::lift_k;
use onehomog_core::quadrature::{bump_battery, PolarGrid, TestFunction};
use onehomog_core::spectral::{amplitude_map, build_lambda, neg_square_spectrum};
use onehomog_core::uniqueness::{
    cof_pairing, cpe_identity_gap, det_expansion_check, log_det, log_det_ubar_oracle, log_det_ubar_printed,
    log_integral, radial_pairing, random_matrix_pairs,
};
use onehomog_core::variational::{
    circumference_bound, constrained_compare, energy_e, minimize_e, random_zero_boundary, twist_family, ubar_field,
    add_scaled, h_norm,
};
use onehomog_core::weakform::{
    battery_max, cof_form_residual, e_weak_residual, fs_identity_gap, hypothesis_probe, meyers_coefficients,
    meyers_residual, weak_el_residual, Convergence, IntegrandSpec,
};
use onehomog_core::{Branch, CounterRng, EigSelection, Error, HomogMap, PolarMap, RadialProfile, SkewCoefficients, Weight};

use crate::config::{ProfileName, ScenarioConfig};
use crate::report::{Check, Provenance, ProfileTable, RunReport, Section};

use Provenance::{Oracle, Paper, Trivial};

pub const COMMANDS: &[&str] = &["construct", "verify", "minimize", "compare", "meyers", "unique"];

/// Angles for pointwise checks.
const ANGLES: usize = 720;

fn planar_only(cmd: &str, cfg: &ScenarioConfig) -> Option<Section> {
    if cfg.m == 2 {
        return None;
    }
    let mut s = Section::new(cmd);
    s.note(format!("skipped: {cmd} needs m = 2, scenario has m = {}", cfg.m));
    Some(s)
}

/// The constructed stationary point, with `NoLinearSolution` surfaced as a
/// configuration error.
pub fn build_solution(cfg: &ScenarioConfig) -> anyhow::Result<HomogMap> {
    let lambda = cfg.lambda()?;
    let profile = cfg.profile.build()?;
    construct_solution(&lambda, &profile, cfg.k, cfg.selection()).map_err(|e| match e {
        Error::NoLinearSolution { .. } => anyhow!(
            "config error: mode k = 1 needs a kernel vector of Lambda, but {e}; use an odd m or k >= 2"
        ),
        other => anyhow!(other).context("constructing the stationary point"),
    })
}

fn convergence_check(name: &str, levels: Vec<f64>, tol: f64, min_slope: f64, p: Provenance) -> Check {
    let conv = Convergence::new(levels);
    Check::at_most(name, conv.finest(), tol, p)
        .with_slope(conv.slope)
        .with_pass(conv.passes(tol, min_slope))
}

fn grids(cfg: &ScenarioConfig) -> anyhow::Result<(PolarGrid, PolarGrid)> {
    let fine = cfg.grid.build()?;
    let coarse = fine.refined(0.5)?;
    Ok((coarse, fine))
}

fn random_skew(m: usize, seed: u64) -> SkewCoefficients {
    let mut rng = CounterRng::new(seed, &format!("random-skew-{m}"));
    let mut c = SkewCoefficients::new(m);
    for i in 1..=m {
        for j in i + 1..=m {
            c.set(i, j, rng.normal());
        }
    }
    c
}

pub fn cmd_construct(cfg: &ScenarioConfig) -> anyhow::Result<Section> {
    let mut s = Section::new("construct");
    let lambda = cfg.lambda()?;
    let profile = cfg.profile.build()?;
    let spec = neg_square_spectrum(&lambda)?;
    let l2 = lambda.frobenius_sq();
    s.push(Check::at_most("lambda_skewness", lambda.skewness_defect(), 0.0, Trivial));
    s.push(Check::at_most(
        "spectrum_reconstruction",
        spec.reconstruction_error(&-(lambda.matrix() * lambda.matrix())),
        1e-12 * l2.max(1.0),
        Oracle,
    ));
    if cfg.m % 2 == 1 {
        s.push(Check::at_most("kernel_eigenvalue", spec.smallest().abs(), 1e-12 * l2, Oracle));
    }

    let u = build_solution(cfg)?;
    match u.branch() {
        Branch::Linear => {
            s.note("linear branch: x = y in ker(Lambda)");
            s.push(Check::rel("gradient_norm", u.c(), 1.0, 1e-12, Trivial));
            s.push(Check::at_most("strong_residual", u.strong_residual(&profile, &lambda, ANGLES)?, 1e-12, Paper));
        }
        Branch::Covering => {
            let (sigma, _) = spec.select(cfg.selection())?;
            let rho0 = sigma.sqrt();
            let t = u.t();
            let am = amplitude_map(&profile, cfg.k, t);
            s.push(Check::rel("amplitude_equation", am, rho0, 1e-12, Oracle));
            if cfg.profile.name == ProfileName::Quartic {
                let kf = f64::from(cfg.k);
                let exact = (kf * rho0 / (kf * kf - 1.0)).sqrt();
                s.push(Check::abs("amplitude_t", t, exact, 1e-12, Paper));
            }
            s.push(Check::at_most("strong_residual", u.strong_residual(&profile, &lambda, ANGLES)?, 1e-10, Paper));
        }
    }
    s.push(Check::at_most("conservation_residual", u.conservation_residual(ANGLES), 1e-12, Oracle));
    s.push(Check::info("ubar_a", u.a(), Trivial));
    s.push(Check::info("ubar_c", u.c(), Trivial));

    if cfg.m == 2 && u.branch() == Branch::Covering {
        let target = u.a() * u.a() * f64::from(cfg.k);
        let r = cfg.grid.r;
        let mut dev = 0.0f64;
        for n in 0..ANGLES {
            let th = std::f64::consts::TAU * n as f64 / ANGLES as f64;
            for rr in [0.1 * r, 0.5 * r, r] {
                dev = dev.max((jacobian(&u, rr, th)?.abs() - target).abs());
            }
        }
        s.push(Check::at_most("jacobian_constancy", dev, 1e-12, Oracle));
    }

    // unit-Jacobian coverings: det = a²k = 1 and |∇ū| = h(k^{1/2})
    for k in [2u32, 3, 5] {
        let ub = HomogMap::unit_jacobian_covering(k);
        let (mut ddet, mut dnorm) = (0.0f64, 0.0f64);
        let h = h_norm(f64::from(k).sqrt());
        for n in 0..ANGLES {
            let th = std::f64::consts::TAU * n as f64 / ANGLES as f64;
            for rr in [0.05, 0.5, 1.0] {
                ddet = ddet.max((jacobian(&ub, rr, th)? - ub.a() * ub.a() * f64::from(k)).abs());
                dnorm = dnorm.max((ub.cartesian_gradient(rr, th).norm() - h).abs());
            }
        }
        s.push(Check::at_most(format!("unit_covering_det_k{k}"), ddet, 1e-12, Paper));
        s.push(Check::at_most(format!("unit_covering_norm_k{k}"), dnorm, 1e-12, Paper));
    }

    // random skew matrices in odd dimension carry a kernel and a linear solution
    for m in [3usize, 5, 7] {
        let l = build_lambda(&random_skew(m, cfg.seed))?;
        let sp = neg_square_spectrum(&l)?;
        let tol = 1e-12 * l.frobenius_sq();
        s.push(Check::at_most(format!("odd_kernel_m{m}"), sp.smallest().abs(), tol, Oracle));
        let lin = construct_solution(&l, &profile, 1, EigSelection::Largest)?;
        s.push(Check::at_most(format!("odd_linear_strong_m{m}"), lin.strong_residual(&profile, &l, ANGLES)?, 1e-12, Paper));
    }
    Ok(s)
}

pub fn cmd_verify(cfg: &ScenarioConfig) -> anyhow::Result<Section> {
    let mut s = Section::new("verify");
    let u = build_solution(cfg)?;
    let spec = IntegrandSpec::new(cfg.profile.build()?, cfg.lambda()?);
    let (coarse, fine) = grids(cfg)?;
    let battery = bump_battery(cfg.grid.r, cfg.m, cfg.bumps, cfg.seed);
    let tol = &cfg.tolerances;
    let levels = |f: &(dyn Fn(&TestFunction, &PolarGrid) -> f64 + Sync)| -> Vec<f64> {
        [&coarse, &fine].iter().map(|g| battery_max(&battery, |phi| f(phi, g))).collect()
    };

    let weak = levels(&|phi, g| weak_el_residual(&u, &spec, phi, g));
    s.push(convergence_check("weak_residual", weak, tol.weak, tol.min_slope, Oracle));
    let cof = levels(&|phi, g| cof_form_residual(&u, &spec, phi, g));
    s.push(convergence_check("cof_residual", cof, tol.weak, tol.min_slope, Oracle));
    let diff = levels(&|phi, g| weak_el_residual(&u, &spec, phi, g) - cof_form_residual(&u, &spec, phi, g));
    s.push(convergence_check("cof_vs_lambda_form", diff, tol.weak, tol.min_slope, Oracle));
    let fs = levels(&|phi, g| fs_identity_gap(&u, phi, (0, 1), g));
    s.push(convergence_check("fs_identity", fs, tol.fs, tol.min_slope, Oracle));

    let bump = &battery[0];
    let perturbed = Combination::new(vec![(1.0, &u as &dyn PolarMap), (0.1, bump as &dyn PolarMap)]);
    let control = battery_max(&battery, |phi| weak_el_residual(&perturbed, &spec, phi, &fine));
    s.push(Check::at_least("perturbed_control", control, 1e-3, Oracle));

    let quad = IntegrandSpec::new(RadialProfile::quadratic(1.0)?, cfg.lambda()?);
    let h = hypothesis_probe(&quad, &u, cfg.grid.r, cfg.probe_samples, cfg.seed);
    s.push(Check::at_least("h1_min_ratio", h.h1_min_ratio, 2.0, Oracle).with_tolerance(1e-9));
    s.push(Check::info("h2_max_jump", h.h2_max_jump, Oracle));
    if cfg.m == 2 {
        let expect = cfg.planar_lambda().abs() * u.c();
        s.push(Check::abs("h3_liminf", h.h3_liminf, expect, 1e-9, Oracle));
    } else {
        s.push(Check::info("h3_liminf", h.h3_liminf, Oracle));
    }
    Ok(s)
}

pub fn cmd_minimize(cfg: &ScenarioConfig) -> anyhow::Result<Section> {
    if let Some(s) = planar_only("minimize", cfg) {
        return Ok(s);
    }
    let mut s = Section::new("minimize");
    let k = cfg.k;
    let r = cfg.grid.r;
    let grid = cfg.minimize_grid.build()?;
    let ubar = ubar_field(&grid, k);
    let mut outcomes = Vec::new();
    for n in 0..cfg.inits {
        let noise = random_zero_boundary(&grid, 2, cfg.init_amplitude, cfg.seed, &format!("minimize-init-{n}"));
        let init = add_scaled(&ubar, &noise, 1.0);
        let out = minimize_e(&init, k, 1e-12).with_context(|| format!("minimizing from init {n}"))?;
        s.push(Check::at_most(format!("relative_gradient_init{n}"), out.relative_gradient(), 1e-10, Oracle));
        let monotone = out.energy_history.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
        let scale = out.energy_history[0].abs().max(1.0);
        s.push(Check::at_most(format!("energy_monotone_init{n}"), monotone / scale, 1e-12, Trivial));
        outcomes.push(out);
    }
    let mut pair = 0.0f64;
    for (i, a) in outcomes.iter().enumerate() {
        for b in &outcomes[i + 1..] {
            pair = pair.max(a.field.l2_distance(&b.field));
        }
    }
    if outcomes.len() >= 2 {
        s.push(Check::at_most("pairwise_distance", pair, 1e-8, Oracle));
    }
    if let Some(first) = outcomes.first() {
        let fine_grid = grid.refined(2.0)?;
        let noise = random_zero_boundary(&fine_grid, 2, cfg.init_amplitude, cfg.seed, "minimize-init-0");
        let fine = minimize_e(&add_scaled(&ubar_field(&fine_grid, k), &noise, 1.0), k, 1e-12)?;
        s.push(
            Check::at_most("distance_to_ubar_refined", fine.distance_to_ubar, first.distance_to_ubar, Oracle)
                .with_slope((first.distance_to_ubar / fine.distance_to_ubar).log2()),
        );
        s.push(Check::info("distance_to_ubar_coarse", first.distance_to_ubar, Oracle));
    }

    let grid_q = cfg.grid.build()?;
    let u = HomogMap::unit_jacobian_covering(k);
    let e_ubar = energy_e(&u, k, &grid_q)?.total;
    s.push(Check::rel("energy_ubar", e_ubar, 2.0 * f64::from(k) * PI * r * r, 1e-6, Paper));

    let battery = bump_battery(r, 2, cfg.bumps, cfg.seed);
    let ew = battery_max(&battery, |phi| e_weak_residual(&u, k, phi, &grid_q));
    s.push(Check::at_most("e_weak_residual", ew, cfg.tolerances.weak, Oracle));

    // E(ū + v) = E(ū) + E(v) for zero-boundary v
    let mut rng = CounterRng::new(cfg.seed, "orthogonal-split");
    let mut worst = 0.0f64;
    for n in 0..10 {
        let a = &battery[n % battery.len()];
        let b = &battery[(n + 7) % battery.len()];
        let (ca, cb) = (rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
        let v = Combination::new(vec![(ca, a as &dyn PolarMap), (cb, b as &dyn PolarMap)]);
        let sum = Combination::new(vec![(1.0, &u as &dyn PolarMap), (1.0, &v as &dyn PolarMap)]);
        let ev = energy_e(&v, k, &grid_q)?.total;
        let es = energy_e(&sum, k, &grid_q)?.total;
        worst = worst.max((es - e_ubar - ev).abs() / (1.0 + ev));
    }
    s.push(Check::at_most("orthogonal_split", worst, 1e-6, Oracle));
    Ok(s)
}

pub fn cmd_compare(cfg: &ScenarioConfig) -> anyhow::Result<Section> {
    if let Some(s) = planar_only("compare", cfg) {
        return Ok(s);
    }
    let mut s = Section::new("compare");
    let k = cfg.k;
    let grid = cfg.grid.build()?;
    let profile = cfg.profile.build()?;
    let mut params = vec![0.0];
    params.extend(cfg.s0.iter().copied().filter(|&v| v != 0.0));
    let family = twist_family(&params, cfg.grid.r, k);
    for row in constrained_compare(&family, &profile, k, &grid)? {
        if row.parameter == 0.0 {
            s.push(Check::abs("gap_identity", row.difference, 0.0, 1e-10, Trivial));
        } else {
            s.push(Check::at_least(format!("gap_s{}", row.parameter), row.difference, 0.0, Oracle).with_tolerance(1e-8));
        }
    }
    let mut rows = Vec::new();
    for (s0, phi) in &family {
        let lifted = lift_k(phi, k);
        let table = circumference_bound(&lifted, k, &grid);
        let min = table.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
        s.push(Check::at_least(format!("circumference_ratio_s{s0}"), min, 1.0, Oracle).with_tolerance(1e-8));
        rows.extend(table.into_iter().map(|r| vec![*s0, r.radius, r.length, r.bound, r.ratio]));
    }
    s.profiles.push(ProfileTable {
        name: "circumference".into(),
        columns: ["s0", "radius", "length", "bound", "ratio"].map(String::from).to_vec(),
        rows,
    });
    Ok(s)
}

pub fn cmd_meyers(cfg: &ScenarioConfig) -> anyhow::Result<Section> {
    let mut s = Section::new("meyers");
    let (coarse, fine) = grids(cfg)?;
    let battery = bump_battery(cfg.grid.r, 2, cfg.bumps, cfg.seed);
    let tol = &cfg.tolerances;
    let mut ident = 0.0f64;
    for mu in [0.25, 0.5, 0.75, 1.0] {
        for n in 0..64 {
            let th = std::f64::consts::TAU * n as f64 / 64.0;
            let (a, b, c) = meyers_coefficients(mu, [th.cos(), th.sin()]);
            ident = ident.max((a + c - 1.0 - mu * mu).abs()).max((a * c - b * b - mu * mu).abs());
        }
    }
    s.push(Check::at_most("coefficient_identities", ident, 1e-14, Trivial));
    let mut matched_half = 0.0;
    for mu in [0.25, 0.5, 0.75] {
        let levels: Vec<f64> = [&coarse, &fine]
            .iter()
            .map(|g| battery_max(&battery, |phi| meyers_residual(mu, mu, phi, g)))
            .collect();
        if mu == 0.5 {
            matched_half = levels[1];
        }
        s.push(convergence_check(&format!("residual_mu{mu}"), levels, tol.meyers, tol.min_slope, Paper));
    }
    let exact = battery_max(&battery, |phi| meyers_residual(1.0, 1.0, phi, &fine));
    s.push(Check::at_most("residual_mu1", exact, 1e-10, Trivial));
    let mismatched = battery_max(&battery, |phi| meyers_residual(0.5, 0.75, phi, &fine));
    s.push(Check::at_least("mismatch_ratio", mismatched / matched_half.max(f64::MIN_POSITIVE), 10.0, Oracle));
    Ok(s)
}

pub fn cmd_unique(cfg: &ScenarioConfig) -> anyhow::Result<Section> {
    if let Some(s) = planar_only("unique", cfg) {
        return Ok(s);
    }
    let mut s = Section::new("unique");
    let grid = cfg.grid.build()?;
    let r = cfg.grid.r;

    let ln1 = PolarGrid::new(1.0, grid.n_r(), grid.n_theta(), grid.layout())?.integrate(|_| 1.0, Weight::LogR);
    s.push(Check::abs("log_integral_unit", ln1, -PI / 2.0, 1e-8, Oracle));
    for rr in [0.5, 1.0, 2.0] {
        let g = PolarGrid::new(rr, grid.n_r(), grid.n_theta(), grid.layout())?;
        let v = g.integrate(|_| 1.0, Weight::LogR);
        s.push(Check::rel(format!("log_integral_r{rr}"), v, log_integral(rr), 1e-7, Oracle));
    }

    let k = cfg.k;
    let a = if k >= 2 { build_solution(cfg)?.a() } else { 1.0 };
    let ubar = HomogMap::covering_planar(a, k);
    let bound = PI * a * r * r;
    let (j, slack) = radial_pairing(&ubar, k, a, &grid)?;
    s.push(Check::rel("pairing_ubar", j, bound, 1e-8, Oracle));
    s.push(Check::abs("slack_ubar", slack, 0.0, 1e-8 * bound, Oracle));
    let neg = Combination::scaled(&ubar, -1.0);
    let (_, slack_neg) = radial_pairing(&neg, k, a, &grid)?;
    s.push(Check::rel("slack_negated", slack_neg, 2.0 * bound, 1e-8, Oracle));
    let zero = Combination::scaled(&ubar, 0.0);
    let (j0, _) = radial_pairing(&zero, k, a, &grid)?;
    s.push(Check::abs("pairing_zero", j0, 0.0, 0.0, Trivial));

    let ld = log_det(&ubar, &grid)?;
    let oracle = log_det_ubar_oracle(a, k, r);
    s.push(Check::rel("log_det_ubar", ld, oracle, 1e-7, Oracle));
    s.push(Check::rel("log_det_printed", log_det_ubar_printed(a, k, r), ld, 1e-7, Paper).diagnostic());

    let pairs = random_matrix_pairs(10_000, cfg.seed);
    s.push(Check::at_most("det_expansion", det_expansion_check(&pairs), 1e-12, Oracle));

    let cof = cof_pairing(&ubar, &ubar, &grid)?;
    let scale = cof.value.abs().max(1.0);
    s.push(Check::rel("cof_pairing_ubar", cof.value, 2.0 * oracle, 1e-7, Oracle));
    s.push(Check::at_most("cof_pairing_gap_oracle", cof.gap_vs_oracle / scale, 1e-7, Oracle));
    s.push(Check::at_most("cof_pairing_gap_printed", cof.gap_vs_paper / scale, 1e-7, Paper).diagnostic());
    let doubled = Combination::scaled(&ubar, 2.0);
    let cof2 = cof_pairing(&doubled, &ubar, &grid)?;
    s.push(Check::rel("cof_pairing_linear", cof2.value, 2.0 * cof.value, 1e-12, Trivial));

    let cpe = cpe_identity_gap(&ubar, &ubar, &grid)?;
    s.push(Check::at_most("cpe_ubar", cpe.gap, 1e-8, Trivial));
    let bump = bump_battery(r, 2, 1, cfg.seed).remove(0);
    let perturbed = Combination::new(vec![(1.0, &ubar as &dyn PolarMap), (0.1, &bump as &dyn PolarMap)]);
    let cpe_p = cpe_identity_gap(&perturbed, &ubar, &grid)?;
    s.push(Check::abs("cpe_perturbed", cpe_p.lhs, cpe_p.rhs, 1e-8, Oracle).diagnostic());
    Ok(s)
}

pub fn run_command(cmd: &str, cfg: &ScenarioConfig) -> anyhow::Result<Section> {
    match cmd {
        "construct" => cmd_construct(cfg),
        "verify" => cmd_verify(cfg),
        "minimize" => cmd_minimize(cfg),
        "compare" => cmd_compare(cfg),
        "meyers" => cmd_meyers(cfg),
        "unique" => cmd_unique(cfg),
        other => Err(anyhow!("unknown command '{other}'")),
    }
}

/// Runs `commands` in order, timing each.
pub fn run(cfg: &ScenarioConfig, commands: &[&str]) -> anyhow::Result<RunReport> {
    let mut sections = Vec::new();
    let mut timings = Vec::new();
    for cmd in commands {
        let start = Instant::now();
        sections.push(run_command(cmd, cfg)?);
        timings.push((cmd.to_string(), start.elapsed().as_secs_f64()));
    }
    Ok(RunReport::new(cfg.clone(), sections, timings))
}
