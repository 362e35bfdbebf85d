use bergman_lab::carleson::{embedding_check, EmbeddingGrid, EmbeddingQuery, MeasureSpec};
use bergman_lab::Symbol;
use num_complex::Complex64;

fn norm_and_decision(mu: &MeasureSpec) -> (f64, String, Vec<f64>) {
    let q = EmbeddingQuery::new(2.0, 1.0, 0.25).unwrap();
    let rep = embedding_check(mu, &q, &EmbeddingGrid::default()).unwrap();
    let levels = rep.summary["norm_s_levels"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    (
        rep.summary["norm_s"].as_f64().unwrap(),
        rep.summary["decision"].as_str().unwrap().to_string(),
        levels,
    )
}

fn power_density(a: f64) -> MeasureSpec {
    MeasureSpec::density(Symbol::parse(&format!("(1-abs(w)^2)^(-{a})")).unwrap())
}

#[test]
fn lebesgue_measure_has_unit_norm() {
    let (norm, decision, _) = norm_and_decision(&MeasureSpec::density(Symbol::parse("1").unwrap()));
    assert!((norm - 1.0).abs() < 1e-10, "{norm}");
    assert_eq!(decision, "embedding holds");
}

#[test]
fn decisions_follow_the_integrability_threshold() {
    let mut previous = 0.0;
    for a in [0.1, 0.25, 0.4, 0.6, 0.75, 0.9] {
        let (_, decision, levels) = norm_and_decision(&power_density(a));
        let expected = if 2.0 * a < 1.0 { "embedding holds" } else { "embedding fails" };
        assert_eq!(decision, expected, "a = {a}, levels {levels:?}");
        // nondecreasing in a at a fixed grid
        assert!(levels[0] >= previous, "a = {a}");
        previous = levels[0];
    }
}

#[test]
fn single_atom_at_origin_holds() {
    let mu = MeasureSpec::atoms(vec![(Complex64::new(0.0, 0.0), 1.0)]).unwrap();
    let (_, decision, _) = norm_and_decision(&mu);
    assert_eq!(decision, "embedding holds");
}
