//! Acceptance criteria AC1 to AC10, plus the supporting checks, one test each.

use std::sync::Mutex;

use normlab::verify::{run_check, VerifyConfig};

// Checks carry runtime budgets, so they must not compete for the CPU.
static SERIAL: Mutex<()> = Mutex::new(());

fn criterion(id: &str) {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let r = run_check(id, &VerifyConfig::default()).expect("known check");
    let tag = if r.passed { "PASS" } else { "FAIL" };
    println!(
        "{tag} {:<12} {:>7.2}s  {}: {}",
        r.id, r.seconds, r.title, r.detail
    );
    assert!(r.passed, "{} failed: {}", r.id, r.detail);
}

#[test]
fn qseq() {
    criterion("QSEQ");
}

#[test]
fn ac1_simple_constants() {
    criterion("AC1");
}

#[test]
fn ac1_section_maximum() {
    criterion("AC1-SECTION");
}

#[test]
fn ac2_max_f_over_k() {
    criterion("AC2");
}

#[test]
fn ac3_rank_one_resolvent() {
    criterion("AC3");
}

#[test]
fn ac4_pseudospectrum_radii() {
    criterion("AC4");
}

#[test]
fn ac4_root_radii() {
    criterion("AC4-ROOT");
}

#[test]
fn ac5_atom_norms() {
    criterion("AC5");
}

#[test]
fn ac6_squeeze() {
    criterion("AC6");
}

#[test]
fn ac7_planting_certificates() {
    criterion("AC7");
}

#[test]
fn ac8_grid_oracle() {
    criterion("AC8");
}

#[test]
fn ac9_p_space_defect() {
    criterion("AC9");
}

#[test]
fn ac10_lower_bound_closing() {
    criterion("AC10");
}
