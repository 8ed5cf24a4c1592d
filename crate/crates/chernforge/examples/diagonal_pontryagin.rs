//! p_1 of a diagonal connection is a sum of squares.
//!
//! Embedding q exact 1-forms d omega_i on the diagonal of an sp(q)-valued
//! connection gives p_1 = sum_i d omega_i ^ d omega_i exactly, which is the
//! bridge between connections and the sums-of-squares decomposition
//! problem.  A hand-computed witness pins the normalization: for
//! omega_1 = sin(2 pi x_1) dx_2 + sin(2 pi x_3) dx_4 the result is
//! 8 pi^2 cos(2 pi x_1) cos(2 pi x_3) dx_1 ^ dx_2 ^ dx_3 ^ dx_4.

use chernforge::chernweil::{diag_connection, pontryagin1};
use chernforge::regtuples::OneFormTuple;
use chernforge::torusforms::trig::{random_form, Harmonic, TrigSpec, TrigTerm};
use chernforge::torusforms::TorusGrid;
use chernforge::Result;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<()> {
    let grid = TorusGrid::new(4, 16)?;
    let mut rng = ChaCha8Rng::seed_from_u64(4);

    // Random tuple: p_1(diag) against the direct sum of squares.
    let mut forms = Vec::new();
    for _ in 0..4 {
        forms.push(random_form(grid, 1, 2, 2, 1.0, &mut rng)?.1);
    }
    let tuple = OneFormTuple::new(forms)?;
    let conn = diag_connection(tuple.forms())?;
    let p1 = pontryagin1(&conn)?;
    let sos = tuple.sum_of_squares()?;
    println!("||p_1(diag) - sum of squares||  = {:.3e}", p1.sub(&sos)?.sup_norm());
    println!("||sum of squares||              = {:.3e}", sos.sup_norm());

    // Analytic witness through the trigonometric oracle.
    let omega_spec = TrigSpec {
        m: 4,
        degree: 1,
        terms: vec![
            TrigTerm {
                component: vec![2],
                harmonics: vec![Harmonic { k: vec![1, 0, 0, 0], cos: 0.0, sin: 1.0 }],
            },
            TrigTerm {
                component: vec![4],
                harmonics: vec![Harmonic { k: vec![0, 0, 1, 0], cos: 0.0, sin: 1.0 }],
            },
        ],
    };
    omega_spec.validate()?;
    let omega = omega_spec.sample(grid)?;
    let p1 = pontryagin1(&diag_connection(std::slice::from_ref(&omega))?)?;

    // 8 pi^2 cos cos via product-to-sum: 4 pi^2 [cos(x1 + x3) + cos(x1 - x3)].
    let c = 4.0 * std::f64::consts::PI.powi(2);
    let expect_spec = TrigSpec {
        m: 4,
        degree: 4,
        terms: vec![TrigTerm {
            component: vec![1, 2, 3, 4],
            harmonics: vec![
                Harmonic { k: vec![1, 0, 1, 0], cos: c, sin: 0.0 },
                Harmonic { k: vec![1, 0, -1, 0], cos: c, sin: 0.0 },
            ],
        }],
    };
    expect_spec.validate()?;
    let expect = expect_spec.sample(grid)?;
    println!("witness residual vs oracle      = {:.3e}", p1.sub(&expect)?.sup_norm());
    println!("witness sup norm (8 pi^2)       = {:.6}", expect.sup_norm());
    Ok(())
}
