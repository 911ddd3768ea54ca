use anyhow::{bail, Result};
use nos_core::oracle::suites;

pub fn run(seed: u64) -> Result<()> {
    let reports = suites::run_all(seed);
    for r in &reports {
        println!("{r}");
    }
    let failed = reports.iter().filter(|r| !r.passed).count();
    if failed > 0 {
        bail!("{failed} of {} verification suites failed", reports.len());
    }
    println!("all {} suites passed", reports.len());
    Ok(())
}
