use std::time::Instant;

use conjugate_core::conjugacy::CheckConfig;
use conjugate_core::suite::{run_suite, Family, SuiteOptions};

#[test]
fn full_suite_is_green() {
    let t = Instant::now();
    let opts = SuiteOptions {
        family: Family::All,
        inject_bad_translator: false,
    };
    let reports = run_suite(opts, &CheckConfig::default()).unwrap();
    for r in &reports {
        println!(
            "{:<5} {:<48} {:>4} {:.3e} <= {:.0e}",
            if r.passed { "ok" } else { "FAIL" },
            r.check_name,
            r.probes,
            r.max_abs_err,
            r.tolerance
        );
    }
    println!("{} reports in {:.2?}", reports.len(), t.elapsed());
    assert!(reports.iter().all(|r| r.passed));
}
