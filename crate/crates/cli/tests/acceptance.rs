//! Acceptance suite: one PASS/FAIL line per criterion for the flagship
//! scenario at the default grid, then a single assertion over all of them.

use onehomog_cli::{run, RunReport, ScenarioConfig, COMMANDS};

struct Criterion {
    id: u32,
    title: &'static str,
    checks: &'static [&'static str],
}

const CRITERIA: &[Criterion] = &[
    Criterion {
        id: 1,
        title: "construction exactness",
        checks: &["construct/amplitude_t", "construct/conservation_residual", "construct/strong_residual"],
    },
    Criterion {
        id: 2,
        title: "odd-dimension linear branch",
        checks: &[
            "construct/odd_kernel_m3",
            "construct/odd_kernel_m5",
            "construct/odd_kernel_m7",
            "construct/odd_linear_strong_m3",
            "construct/odd_linear_strong_m5",
            "construct/odd_linear_strong_m7",
        ],
    },
    Criterion {
        id: 3,
        title: "weak stationarity",
        checks: &["verify/weak_residual", "verify/cof_residual", "verify/cof_vs_lambda_form"],
    },
    Criterion {
        id: 4,
        title: "Fefferman-Stein identity",
        checks: &["verify/fs_identity"],
    },
    Criterion {
        id: 5,
        title: "hypothesis triple",
        checks: &["verify/h1_min_ratio", "verify/h3_liminf"],
    },
    Criterion {
        id: 6,
        title: "Jacobian and norm constants",
        checks: &[
            "construct/unit_covering_det_k2",
            "construct/unit_covering_norm_k2",
            "construct/unit_covering_det_k3",
            "construct/unit_covering_norm_k3",
            "construct/unit_covering_det_k5",
            "construct/unit_covering_norm_k5",
        ],
    },
    Criterion {
        id: 7,
        title: "quadrature oracles",
        checks: &[
            "unique/log_integral_unit",
            "unique/log_integral_r0.5",
            "unique/log_integral_r1",
            "unique/log_integral_r2",
        ],
    },
    Criterion {
        id: 8,
        title: "uniqueness equality case",
        checks: &["unique/pairing_ubar", "unique/slack_ubar", "unique/slack_negated"],
    },
    Criterion {
        id: 9,
        title: "identity audit",
        checks: &["unique/det_expansion", "unique/log_det_ubar"],
    },
    Criterion {
        id: 10,
        title: "E-minimization",
        checks: &[
            "minimize/relative_gradient_init0",
            "minimize/relative_gradient_init1",
            "minimize/relative_gradient_init2",
            "minimize/pairwise_distance",
            "minimize/distance_to_ubar_refined",
            "minimize/energy_ubar",
        ],
    },
    Criterion {
        id: 11,
        title: "orthogonal split",
        checks: &["minimize/orthogonal_split"],
    },
    Criterion {
        id: 12,
        title: "constrained comparison",
        checks: &[
            "compare/gap_s0.1",
            "compare/gap_s0.2",
            "compare/gap_s0.3",
            "compare/gap_s0.4",
            "compare/gap_s0.5",
            "compare/circumference_ratio_s0.1",
            "compare/circumference_ratio_s0.2",
            "compare/circumference_ratio_s0.3",
            "compare/circumference_ratio_s0.4",
            "compare/circumference_ratio_s0.5",
        ],
    },
    Criterion {
        id: 13,
        title: "Meyers verification",
        checks: &[
            "meyers/residual_mu0.25",
            "meyers/residual_mu0.5",
            "meyers/residual_mu0.75",
            "meyers/residual_mu1",
            "meyers/mismatch_ratio",
        ],
    },
];

fn evaluate(report: &RunReport, c: &Criterion) -> (bool, Vec<String>) {
    let mut problems = Vec::new();
    for path in c.checks {
        match report.find(path) {
            None => problems.push(format!("{path}: missing")),
            Some(ch) if !ch.pass || !ch.asserted => problems.push(format!(
                "{path}: value {:e} vs reference {:e} (tol {:e}, slope {:?})",
                ch.value, ch.reference, ch.tolerance, ch.slope
            )),
            Some(_) => {}
        }
    }
    (problems.is_empty(), problems)
}

#[test]
fn acceptance_criteria() {
    onehomog_cli::init_threads();
    let cfg = ScenarioConfig::default();
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let mut bytes = Vec::new();
    let mut first: Option<RunReport> = None;
    for d in &dirs {
        let report = run(&cfg, COMMANDS).expect("suite runs");
        report.write(d.path()).unwrap();
        bytes.push(std::fs::read(d.path().join("report.json")).unwrap());
        first.get_or_insert(report);
    }
    let report = first.unwrap();

    let mut failed = Vec::new();
    for c in CRITERIA {
        let (ok, mut problems) = evaluate(&report, c);
        // the printed log-det constant must be flagged, not asserted
        if c.id == 9 {
            match report.find("unique/log_det_printed") {
                Some(ch) if !ch.asserted && !ch.pass => {}
                _ => problems.push("unique/log_det_printed: not flagged".into()),
            }
        }
        let ok = ok && problems.is_empty();
        println!("criterion {:>2} {:<32} {}", c.id, c.title, if ok { "PASS" } else { "FAIL" });
        for p in &problems {
            println!("    {p}");
        }
        if !ok {
            failed.push(c.id);
        }
    }
    let identical = bytes[0] == bytes[1];
    println!("criterion 14 {:<32} {}", "determinism", if identical { "PASS" } else { "FAIL" });
    if !identical {
        failed.push(14);
    }
    assert!(report.passed(), "run status is fail");
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
