mod common;

use common::*;
use qnet::catalog::{build_copropagating_pair, build_counterpropagating_pair, one_sided_cavity};
use qnet::netlang::compile;
use qnet::slh::{concat, feedback_multi, series, SlhTriple};

#[test]
fn two_cavity_series_product() {
    series_two_cavities().assert();
}

#[test]
fn two_sided_cavity_feedback() {
    feedback_two_sided().assert();
}

#[test]
fn four_wire_reduction() {
    vec_elim_network().assert();
}

#[test]
fn four_wire_reduction_detects_wrong_phase() {
    // guards against a comparison that is trivially zero
    let got = compile(&network("vec_elim.qnet").replace("phi = 0.7", "phi = 0.71")).unwrap().triple;
    assert!(got.max_diff(&vec_elim_expected().unwrap()).unwrap() > 1e-3);
}

#[test]
fn beamsplitter_between_cavities() {
    beamsplitter_cascade().assert();
}

#[test]
fn counter_and_co_propagation() {
    counter_vs_co().assert();
}

#[test]
fn propagation_hamiltonians_agree_at_quarter_wave() {
    let phi = std::f64::consts::FRAC_PI_2;
    let a = build_counterpropagating_pair("p", 1.0, 0.4, 0.2, 0.1, phi).unwrap();
    let b = build_copropagating_pair("p", 1.0, 0.4, 0.2, 0.1, phi).unwrap();
    assert!(a.h().approx_eq(b.h(), 1e-12));
    assert!(!a.l()[1].approx_eq(&b.l()[1], 1e-3));
}

#[test]
fn propagation_pair_over_parameters() {
    for &(g1, g2, d1, d2, phi) in &[(0.3, 2.0, 0.0, 0.5, 0.1), (1.5, 1.5, -1.0, 1.0, 3.0), (2.0, 0.1, 0.3, 0.3, -1.2)] {
        let (counter, co, _) = propagation_pair(g1, g2, d1, d2, phi).unwrap();
        assert!(counter < 1e-10 && co < 1e-10, "{counter:e} {co:e}");
    }
}

#[test]
fn feedback_order_independence() {
    feedback_order_suite().assert();
}

#[test]
fn single_loop_orders_per_seed() {
    for seed in 100..105 {
        let d = order_independence(seed, &[(2, 0), (0, 3)]).unwrap();
        assert!(d < 1e-8, "seed {seed}: {d:e}");
    }
}

#[test]
fn series_is_concat_then_feedback() {
    let c1 = one_sided_cavity("c1", 0.8, 0.2, TRUNC).unwrap();
    let c2 = one_sided_cavity("c2", 1.4, -0.5, TRUNC).unwrap();
    let cascade = series(&c2, &c1).unwrap();
    let closed = feedback_multi(&concat(&c1, &c2).unwrap(), &[(0, 1)]).unwrap();
    assert_eq!((closed.outputs.clone(), closed.inputs.clone()), (vec![1], vec![0]));
    assert!(closed.triple.approx_eq(&cascade, 1e-12));
}

#[test]
fn composed_triples_keep_invariants() {
    for g in [
        compile(&network("vec_elim.qnet")).unwrap().triple,
        compile(&network("beamsplitter_cascade.qnet")).unwrap().triple,
        random_four_port(3),
    ] {
        assert!(g.invariants().passes(1e-10), "{:?}", g.invariants());
    }
}

#[test]
fn golden_cascade_json_matches_composition() {
    let golden = std::fs::read_to_string(network_path("golden/two_cavity_cascade.json")).unwrap();
    let g = SlhTriple::from_json_str(&golden).unwrap();
    let c1 = one_sided_cavity("c1", 1.0, 0.3, TRUNC).unwrap();
    let c2 = one_sided_cavity("c2", 2.0, -0.2, TRUNC).unwrap();
    assert!(g.approx_eq(&series(&c2, &c1).unwrap(), 1e-12));
}
