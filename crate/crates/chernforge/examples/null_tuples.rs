//! Certified null tuples: starting points for the homotopy solver.
//!
//! Forms omega_i = u_i dv_i satisfy both quadratic sums identically,
//! sum_i d omega_i ^ d omega_i = 0 and sum_i omega_i ^ d omega_i = 0,
//! because d omega_i = du_i ^ dv_i makes every term a wedge with a repeated
//! factor.  A tuple is useful only if it is also regular: the pointwise
//! matrix of minor coordinates of the d omega_i must have full rank
//! m(m+1)/2 everywhere, certified here by a singular value decomposition at
//! every grid node.

use chernforge::regtuples::{generate_null_tuple, q_min};
use chernforge::torusforms::TorusGrid;
use chernforge::Result;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for (m, n, q, h) in [(3usize, 16usize, 6usize, 2usize), (4, 16, 10, 2)] {
        let grid = TorusGrid::new(m, n)?;
        println!("T^{m}: q_min = {}, using q = {q}, band limit {h}", q_min(m));

        let (tuple, cert) = generate_null_tuple(grid, q, h, &mut rng)?;
        let null_d = tuple.sum_of_squares()?.sup_norm();
        let null_dbar = tuple.transgression_sum()?.sup_norm();

        println!("  ||sum d omega ^ d omega||   = {:.3e}", null_d);
        println!("  ||sum omega ^ d omega||     = {:.3e}", null_dbar);
        println!("  cancellation scale          = {:.3e}", tuple.term_scale());
        println!("  certified regular           = {}", cert.certified);
        println!("  min singular value          = {:.3e}", cert.min_sigma);
        println!("  full-rank node fraction     = {}", cert.full_rank_fraction);
        println!("  attempts                    = {}", cert.attempts);
    }

    // Below the threshold no tuple can be regular; the generator refuses.
    let grid = TorusGrid::new(4, 16)?;
    match generate_null_tuple(grid, 9, 2, &mut rng) {
        Err(e) => println!("q = 9 on T^4 rejected as expected: {e}"),
        Ok(_) => println!("unexpected: q below q_min produced a tuple"),
    }
    Ok(())
}
