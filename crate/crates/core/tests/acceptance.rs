//! The eight acceptance criteria at their stated tolerances and budgets. Each
//! prints one pass/fail line.

use qc_core::suite::{run, Suite, SuiteConfig};

fn criterion(suite: Suite) {
    let report = run(suite, SuiteConfig { seed: 20_240_601, ..SuiteConfig::default() }).unwrap();
    let ok = report.pass() && report.within_budget();
    println!(
        "criterion {} ({}): {} [{} checks, {:.1}s of {:.0}s]",
        suite.criterion(),
        suite.title(),
        if ok { "PASS" } else { "FAIL" },
        report.checks.len(),
        report.seconds,
        suite.budget()
    );
    for c in report.failures() {
        println!("  failed: {} | {} | tolerance {} | first counterexample: {}", c.name, c.measured, c.tolerance, c.counterexample.as_deref().unwrap_or("-"));
    }
    assert!(report.pass(), "criterion {} has failing checks", suite.criterion());
    assert!(report.within_budget(), "criterion {} took {:.1}s", suite.criterion(), report.seconds);
}

#[test]
fn criterion_1_algebraic_identities() {
    criterion(Suite::Algebra);
}

#[test]
fn criterion_2_flat_model_structure() {
    criterion(Suite::Flat);
}

#[test]
fn criterion_3_parabolic_geodesics() {
    criterion(Suite::Geodesic);
}

#[test]
fn criterion_4_lm_operator() {
    criterion(Suite::Poly);
}

#[test]
fn criterion_5_curvature_calculus() {
    criterion(Suite::Curv);
}

#[test]
fn criterion_6_normalization() {
    criterion(Suite::Normalize);
}

#[test]
fn criterion_7_coordinate_change_order() {
    criterion(Suite::CoordChange);
}

#[test]
fn criterion_8_invariant_reductions() {
    criterion(Suite::Invar);
}
