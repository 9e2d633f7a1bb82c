//! Acceptance report: one line per criterion.
//!
//! Run with `cargo test -p qnet --test acceptance -- --nocapture`. A red
//! criterion is reported, not hidden; the per-topic suites carry the
//! assertions.

mod common;

use std::time::Instant;

use common::*;

struct Criterion {
    id: usize,
    title: &'static str,
    checks: Vec<Check>,
}

impl Criterion {
    fn pass(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.pass)
    }

    fn line(&self) -> String {
        let parts: Vec<String> = self
            .checks
            .iter()
            .map(|c| format!("{}{}: {}", if c.pass { "" } else { "[red] " }, c.name, c.detail))
            .collect();
        format!(
            "criterion {}: {} | {} | {}",
            self.id,
            if self.pass() { "PASS" } else { "FAIL" },
            self.title,
            parts.join("; ")
        )
    }
}

fn timed(limit: f64, checks: impl FnOnce() -> Vec<Check>) -> Vec<Check> {
    let start = Instant::now();
    let mut out = checks();
    let secs = start.elapsed().as_secs_f64();
    out.push(Check::new("runtime", secs < limit, format!("{secs:.2} s (limit {limit} s)")));
    out
}

fn criteria() -> Vec<Criterion> {
    vec![
        Criterion {
            id: 1,
            title: "composition golden set",
            checks: timed(10.0, || {
                vec![
                    series_two_cavities(),
                    feedback_two_sided(),
                    vec_elim_network(),
                    beamsplitter_cascade(),
                    counter_vs_co(),
                ]
            }),
        },
        Criterion { id: 2, title: "feedback order independence", checks: vec![feedback_order_suite()] },
        Criterion {
            id: 3,
            title: "master equation dynamics",
            checks: vec![cavity_decay(), driven_steady_state(), thermal_occupation(), trace_preservation()],
        },
        Criterion { id: 4, title: "Fock hierarchy", checks: fock_hierarchy() },
        Criterion {
            id: 5,
            title: "linear analysis",
            checks: vec![cavity_abcd(), opo_matrices(), opo_quadrature_tf(), realizability_all(), abcd_round_trip()],
        },
        Criterion { id: 6, title: "single-photon scattering", checks: vec![reflection_phase(), fock_flux_consistency()] },
        Criterion { id: 7, title: "adiabatic elimination", checks: elimination_checks() },
        Criterion {
            id: 8,
            title: "front end",
            checks: vec![round_trip_corpus(), golden_compose(), malformed_diagnostics()],
        },
    ]
}

// plain main so the report is printed without --nocapture
fn main() {
    let all = criteria();
    for c in &all {
        println!("{}", c.line());
    }
    let green = all.iter().filter(|c| c.pass()).count();
    println!("acceptance: {green}/{} criteria pass", all.len());
}
