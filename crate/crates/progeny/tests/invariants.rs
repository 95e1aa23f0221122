//! Exhaustive structural invariants beyond the acceptance gate: IC of the
//! baselines and the symmetrized wrappers, and the candidate-path bounds on
//! the fair mechanism's deepest member.

use progeny::forest::candidate_set;
use progeny::mechanism::{evaluate, MechanismSpec};
use progeny::verify::audit_ic;
use progeny::enumerate;

#[test]
fn uniform_is_ic_exhaustively() {
    assert!(audit_ic(&MechanismSpec::Uniform, 5, 1).unwrap().passed());
}

#[test]
fn symmetrized_wrappers_are_ic_exhaustively() {
    let sym_fair = MechanismSpec::Symmetrized(Box::new(MechanismSpec::Fair));
    let report = audit_ic(&sym_fair, 5, 1).unwrap();
    assert!(report.passed(), "sym:mf IC violations: {}", report.violations.len());
    let sym_exact = MechanismSpec::Symmetrized(Box::new(MechanismSpec::Exact));
    let report = audit_ic(&sym_exact, 5, 1).unwrap();
    assert!(report.passed(), "sym:mb IC violations: {}", report.violations.len());
}

#[test]
fn fair_deepest_candidate_stays_within_its_bounds() {
    // the deepest path member's probability sits between half the log of
    // its doubled progeny over P* and one half
    for n in 1..=6 {
        for f in enumerate::forests(n).unwrap() {
            let d = evaluate(&MechanismSpec::Fair, &f).unwrap();
            let t = f.progeny_table();
            let path = candidate_set(&f);
            let a1 = path.first();
            let lower = 0.5 * (2.0 * t.progeny(a1) as f64 / t.pstar() as f64).log2();
            assert!(
                d.get(a1) >= lower - 1e-12 && d.get(a1) <= 0.5 + 1e-12,
                "vertex {a1} value {} outside [{lower}, 0.5] on {f:?}",
                d.get(a1)
            );
        }
    }
}
