//! Acceptance run: one line per criterion, details for failures.

use micromorph::config::Config;
use micromorph::verify::{self, Report};

type Criterion = (u8, fn(&Config) -> Report);

fn main() {
    let cfg = Config::default();
    let criteria: [Criterion; 11] = [
        (1, verify::unit_laws),
        (2, verify::category_associativity),
        (3, |_| verify::qp_consistency()),
        (4, verify::stationary_phase),
        (5, verify::functoriality),
        (6, verify::hamilton_jacobi),
        (7, verify::energy_monoid),
        (8, verify::moyal),
        (9, |_| verify::gutt_bch()),
        (10, |_| verify::costate_calculus()),
        (11, verify::cutoff_independence),
    ];
    let only: Option<u8> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|s| s.parse().ok());
    let mut failed = 0;
    for (n, run) in criteria {
        if only.is_some_and(|o| o != n) {
            continue;
        }
        let r = run(&cfg);
        let status = if r.passed() { "PASS" } else { "FAIL" };
        println!("criterion {n:>2}: {status}  {} ({:.1}s)", r.name, r.seconds);
        if !r.passed() || std::env::var_os("ACCEPTANCE_VERBOSE").is_some() {
            print!("{r}");
        }
        failed += usize::from(!r.passed());
    }
    if failed > 0 {
        eprintln!("{failed} criteria failed");
        std::process::exit(1);
    }
}
