//! The full lemma-check suite, at the default scale and dilated by 2^{-2}.

use swirl5d::lemmas::{failures, run_suite, table, SuiteConfig};

fn main() -> swirl5d::Result<()> {
    for k_shift in [0, 2] {
        let results = run_suite(&SuiteConfig { k_shift, ..SuiteConfig::default() })?;
        println!("k_shift = {k_shift}");
        print!("{}", table(&results));
        println!("{} failing\n", failures(&results));
    }
    Ok(())
}
