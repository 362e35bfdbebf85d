use bergman_lab::suites::{run_suite, suite_passed, SuiteConfig, SUITES};

#[test]
fn every_suite_passes_with_defaults() {
    let cfg = SuiteConfig::default();
    for name in SUITES {
        let start = std::time::Instant::now();
        let rep = run_suite(name, &cfg).unwrap_or_else(|e| panic!("{name}: {e}"));
        for row in &rep.values {
            println!(
                "{name:24} {:36} residual {:>10.3e}  tol {:>8.1e}  pass {}",
                row["assertion"].as_str().unwrap(),
                row["residual"].as_f64().unwrap_or(f64::NAN),
                row["tolerance"].as_f64().unwrap(),
                row["pass"]
            );
        }
        println!("{name}: {:.2?}", start.elapsed());
        assert!(suite_passed(&rep), "{name} failed");
    }
}
