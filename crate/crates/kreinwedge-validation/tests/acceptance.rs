use std::io::Write;
use std::time::Instant;

use kreinwedge_validation::CRITERIA;

fn main() {
    let start = Instant::now();
    let mut failed = 0;
    for criterion in CRITERIA {
        let t = Instant::now();
        let o = criterion();
        println!("{} [{:.1}s]", o.line(), t.elapsed().as_secs_f64());
        std::io::stdout().flush().ok();
        if !o.pass {
            failed += 1;
        }
    }
    println!("acceptance: {} of {} criteria pass in {:.1}s", CRITERIA.len() - failed, CRITERIA.len(), start.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
