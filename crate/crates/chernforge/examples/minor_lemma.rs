//! Irreducibility of minor determinants over a prime field.
//!
//! Rows of the Plucker matrix are indexed by pairs (k1, k2) of rows of an
//! n x 2 variable block, columns by q independent blocks, and each entry is
//! the 2 x 2 minor x^j_{k1} xbar^j_{k2} - x^j_{k2} xbar^j_{k1}.  Every
//! maximal square subdeterminant is multilinear in the block variables and
//! irreducible; irreducibility is decided by a randomized variable
//! partition test whose one-sided error bound is reported exactly.

use chernforge::minorlemma::{
    codim_monte_carlo, factor_components, lemma_suite, plucker_matrix, FpPoly, Verdict,
};
use chernforge::Result;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<()> {
    // Symbolic determinant of the full 3 x 3 case (N = C(3,2) = 3 rows).
    let pm = plucker_matrix(3, 3)?;
    let det = pm.symbolic_det(&[0, 1, 2])?;
    println!(
        "n = 3: det on columns 1..3 has {} terms in {} variables, multilinear = {}",
        det.num_terms(),
        det.variables().len(),
        det.is_multilinear()
    );

    // The lemma suite checks every maximal subset of q = 4 columns.
    let report = lemma_suite(3, 4, 4, 42)?;
    for s in &report.subsets {
        println!(
            "  columns {:?}: {} terms, verdict {:?}, error bound {:.3e}",
            s.subset, s.num_terms, s.verdict, s.error_bound
        );
    }
    println!(
        "all irreducible = {}, family supports disjoint = {}",
        report.all_irreducible, report.family_supports_disjoint
    );

    // A reducible control: a product of two quadratics splits into the two
    // variable groups, with a quantified failure probability.
    let left = FpPoly::monomial(8, &[(0, 1), (1, 1)], 1)
        .add(&FpPoly::monomial(8, &[(2, 1), (3, 1)], 1))?;
    let right = FpPoly::monomial(8, &[(4, 1), (5, 1)], 1)
        .add(&FpPoly::monomial(8, &[(6, 1), (7, 1)], 1))?;
    let product = left.mul(&right)?;
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    let f = factor_components(&product, 4, &mut rng)?;
    println!(
        "reducible control: verdict {:?}, components {:?}, error bound {:.3e}",
        f.verdict, f.components, f.error_bound
    );
    assert_eq!(f.verdict, Verdict::Splits);

    // Monte Carlo codimension of the locus where the minor matrix drops
    // rank, at the threshold q = m(m+1)/2.
    for (m, q) in [(3usize, 6usize), (4, 10)] {
        let c = codim_monte_carlo(m, q, 500, 44);
        println!(
            "codim check m = {m}, q = {q}: full-rank fraction {} over {} trials (codim {})",
            c.full_rank_fraction, c.trials, c.codimension
        );
    }
    Ok(())
}
