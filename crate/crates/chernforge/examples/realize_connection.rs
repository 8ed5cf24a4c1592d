//! Realize an exact 4-form as the first Pontrjagin form of a connection.
//!
//! End to end: a random zero-mean band-limited 4-form sigma on T^4 is
//! decomposed into sum_i d omega_i ^ d omega_i, the recovered 1-forms are
//! placed on the diagonal of an sp(q)-valued connection, and p_1 of that
//! connection is compared against sigma.  The final residual therefore
//! measures the whole pipeline, not just the solver.

use chernforge::chernweil::{diag_connection_with_budget, pontryagin1};
use chernforge::decompose::{realize_pontryagin, SolverOptions};
use chernforge::torusforms::trig::random_form;
use chernforge::torusforms::TorusGrid;
use chernforge::{Budget, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<()> {
    let grid = TorusGrid::new(4, 8)?;
    let (q, h) = (10usize, 1usize);
    let mut rng = ChaCha8Rng::seed_from_u64(7);

    let (_, sigma) = random_form(grid, 4, h, 3, 1.0, &mut rng)?;
    println!("target ||sigma|| = {:.3e}", sigma.sup_norm());

    let opts = SolverOptions::default();
    let outcome = realize_pontryagin(&sigma, q, h, &mut rng, &opts)?;

    println!("solver residual      = {:.3e} ({:.3e} relative)",
        outcome.solve.residual_sup, outcome.solve.residual_rel);
    println!("p_1 residual         = {:.3e} ({:.3e} relative)",
        outcome.p1_residual_sup, outcome.p1_residual_rel);
    println!("sp membership defect = {:.3e}", outcome.sp_residual);
    println!("start certificate    = {} (min sv {:.3e})",
        outcome.certificate.certified, outcome.certificate.min_sigma);

    // Reassemble the connection from the recovered tuple and recompute p_1
    // once more; a tuple of q forms needs rank budget q.
    let budget = Budget {
        max_rank: q,
        ..Budget::from_env()
    };
    let conn = diag_connection_with_budget(outcome.solve.tuple.forms(), &budget)?;
    let p1 = pontryagin1(&conn)?;
    let recheck = p1.sub(&sigma)?.sup_norm();
    println!("recomputed p_1 residual = {recheck:.3e}");
    Ok(())
}
