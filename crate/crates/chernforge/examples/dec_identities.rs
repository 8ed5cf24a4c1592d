//! Discrete exterior calculus identities on flat tori.
//!
//! The spectral derivative is exact on resolved trigonometric polynomials,
//! so the classical identities hold to roundoff rather than to a
//! discretization order: d(d u) = 0, the graded Leibniz rule, Stokes on the
//! closed torus (exact top forms integrate to zero), and recovery of an
//! exact form from its Hodge-minimal primitive.

use chernforge::tol;
use chernforge::torusforms::trig::random_form;
use chernforge::torusforms::TorusGrid;
use chernforge::Result;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for m in [3usize, 4] {
        // Products of band-limit-2 forms reach band 4; n = 16 resolves them.
        let grid = TorusGrid::new(m, 16)?;
        println!("T^{m} with {} points per axis", grid.n());

        for degree in 0..m {
            let (_, u) = random_form(grid, degree, 2, 2, 1.0, &mut rng)?;
            let (_, v) = random_form(grid, 1, 2, 2, 1.0, &mut rng)?;

            let dd = u.exterior_d().exterior_d().sup_norm();

            // d(u ^ v) = du ^ v + (-1)^deg(u) u ^ dv.
            let lhs = u.wedge(&v)?.exterior_d();
            let sign = if degree % 2 == 0 { 1.0 } else { -1.0 };
            let mut rhs = u.exterior_d().wedge(&v)?;
            rhs.axpy(sign, &u.wedge(&v.exterior_d())?)?;
            let leibniz = lhs.sub(&rhs)?.sup_norm();

            println!("  degree {degree}: ||d d u|| = {dd:.3e}, Leibniz residual = {leibniz:.3e}");
        }

        // Stokes: the integral of an exact top form vanishes.
        let (_, w) = random_form(grid, m - 1, 2, 2, 1.0, &mut rng)?;
        let stokes = w.exterior_d().integrate()?.abs();
        println!("  Stokes residual (exact top form integral) = {stokes:.3e}");

        // Primitive round trip: sigma = du is exact, and the minimal
        // primitive beta satisfies d beta = sigma again.
        let (_, u) = random_form(grid, 1, 2, 2, 1.0, &mut rng)?;
        let sigma = u.exterior_d();
        let beta = sigma.hodge_primitive(tol::EXACTNESS)?;
        let round = beta.exterior_d().sub(&sigma)?.sup_norm();
        println!("  primitive round trip ||d beta - sigma|| = {round:.3e}");
    }
    Ok(())
}
