//! Dimension bounds for regular sums-of-squares decompositions.
//!
//! For a base torus of dimension m: q_min = m(m+1)/2 squares are needed for
//! a pointwise-regular decomposition, the secondary-form construction needs
//! k >= m(m+1)/4, exact characterization needs n >= m(m+1)/6, and the
//! quaternionic target dimension must exceed m0 + m(m+1)/6 with
//! m0 = floor((m+1)/4) - 1.  The Schlafly-style comparison bound
//! k(m+1)(4mk^2 + 2mk + 1) grows much faster in k.

use chernforge::cli::bounds_report;
use chernforge::Result;

fn main() -> Result<()> {
    println!("{:>3} {:>6} {:>7} {:>7} {:>4} {:>10} {:>14}", "m", "q_min", "k_sec", "n_char", "m0", "n_theorem", "schlafly(k=1)");
    for m in [1usize, 2, 3, 4, 6, 8, 12, 16] {
        let r = bounds_report(m, Some(1))?;
        println!(
            "{:>3} {:>6} {:>7} {:>7} {:>4} {:>10} {:>14}",
            r.m,
            r.q_min,
            r.k_secondary_min,
            r.n_exact_char_min,
            r.m0,
            r.n_theorem_min,
            r.schlafly_n_min.unwrap()
        );
    }

    // The full report spells out every rounding convention.
    let r = bounds_report(4, Some(2))?;
    println!("\nm = 4, k = 2 in full:");
    println!("{}", serde_json::to_string_pretty(&r)?);
    Ok(())
}
