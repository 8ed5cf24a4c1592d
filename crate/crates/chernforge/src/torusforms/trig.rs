//! Exact trigonometric-polynomial forms.
//!
//! A [`TrigSpec`] describes a differential form on `T^m` analytically: each
//! term names a component `dx_{a_1} ^ ... ^ dx_{a_p}` (axes are 1-based in
//! the serialized format, matching the usual coordinate labels) and a list
//! of harmonics `cos * cos(2 pi k.x) + sin * sin(2 pi k.x)` with integer
//! wavevectors `k`.  Differentiation and wedge products are closed
//! operations on this class and are computed symbolically, so a `TrigSpec`
//! doubles as an independent oracle for the grid-based pipeline and as the
//! JSON interchange format for forms.

use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::TAU;

use super::{merge_sign, DiffForm, FormBasis, TorusGrid};
use crate::error::{Error, Result};

/// One harmonic: `cos * cos(2 pi k.x) + sin * sin(2 pi k.x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Harmonic {
    pub k: Vec<i64>,
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

/// One component of a form with its harmonic expansion.  `component` lists
/// ascending 1-based axis indices; empty for 0-forms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrigTerm {
    pub component: Vec<usize>,
    pub harmonics: Vec<Harmonic>,
}

/// Analytic differential form with trig-polynomial coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrigSpec {
    pub m: usize,
    pub degree: usize,
    pub terms: Vec<TrigTerm>,
}

impl TrigSpec {
    pub fn zero(m: usize, degree: usize) -> Self {
        TrigSpec {
            m,
            degree,
            terms: Vec::new(),
        }
    }

    /// A degree-0 constant.
    pub fn constant(m: usize, value: f64) -> Self {
        TrigSpec {
            m,
            degree: 0,
            terms: vec![TrigTerm {
                component: Vec::new(),
                harmonics: vec![Harmonic {
                    k: vec![0; m],
                    cos: value,
                    sin: 0.0,
                }],
            }],
        }
    }

    /// Validate structural invariants: ascending in-range components of the
    /// right length, wavevectors of length m.
    pub fn validate(&self) -> Result<()> {
        for term in &self.terms {
            if term.component.len() != self.degree {
                return Err(Error::Validation(format!(
                    "component {:?} does not match degree {}",
                    term.component, self.degree
                )));
            }
            for w in term.component.windows(2) {
                if w[0] >= w[1] {
                    return Err(Error::Validation(format!(
                        "component axes {:?} must be strictly ascending",
                        term.component
                    )));
                }
            }
            if let Some(&last) = term.component.last() {
                if last > self.m || term.component[0] == 0 {
                    return Err(Error::Validation(format!(
                        "component axes {:?} must lie in 1..={}",
                        term.component, self.m
                    )));
                }
            }
            for h in &term.harmonics {
                if h.k.len() != self.m {
                    return Err(Error::Validation(format!(
                        "wavevector {:?} must have length {}",
                        h.k, self.m
                    )));
                }
            }
        }
        Ok(())
    }

    /// Largest harmonic in sup norm across all terms.
    pub fn max_harmonic(&self) -> usize {
        self.terms
            .iter()
            .flat_map(|t| t.harmonics.iter())
            .flat_map(|h| h.k.iter().map(|k| k.unsigned_abs() as usize))
            .max()
            .unwrap_or(0)
    }

    /// Merge duplicate (component, wavevector) pairs, canonicalize the sign
    /// of each wavevector (first nonzero entry positive), and drop zero
    /// coefficients.  Canonical specs compare well for equality.
    pub fn normalize(&self) -> TrigSpec {
        let mut acc: BTreeMap<(Vec<usize>, Vec<i64>), (f64, f64)> = BTreeMap::new();
        for term in &self.terms {
            for h in &term.harmonics {
                let (k, c, s) = canonical_harmonic(&h.k, h.cos, h.sin);
                let slot = acc.entry((term.component.clone(), k)).or_insert((0.0, 0.0));
                slot.0 += c;
                slot.1 += s;
            }
        }
        let mut by_comp: BTreeMap<Vec<usize>, Vec<Harmonic>> = BTreeMap::new();
        for ((comp, k), (c, s)) in acc {
            if c == 0.0 && s == 0.0 {
                continue;
            }
            by_comp.entry(comp).or_default().push(Harmonic { k, cos: c, sin: s });
        }
        TrigSpec {
            m: self.m,
            degree: self.degree,
            terms: by_comp
                .into_iter()
                .map(|(component, harmonics)| TrigTerm { component, harmonics })
                .collect(),
        }
    }

    /// Sup norm of coefficients after normalization; zero iff the spec is
    /// the zero form.
    pub fn coeff_sup(&self) -> f64 {
        self.normalize()
            .terms
            .iter()
            .flat_map(|t| t.harmonics.iter())
            .map(|h| h.cos.abs().max(h.sin.abs()))
            .fold(0.0, f64::max)
    }

    /// Mean (harmonic part) of each component, keyed by component axes.
    pub fn component_means(&self) -> Vec<(Vec<usize>, f64)> {
        self.normalize()
            .terms
            .iter()
            .map(|t| {
                let mean = t
                    .harmonics
                    .iter()
                    .filter(|h| h.k.iter().all(|&k| k == 0))
                    .map(|h| h.cos)
                    .sum();
                (t.component.clone(), mean)
            })
            .collect()
    }

    /// Evaluate one term's coefficient function at a point.
    fn eval_harmonics(harmonics: &[Harmonic], x: &[f64]) -> f64 {
        harmonics
            .iter()
            .map(|h| {
                let phase: f64 =
                    TAU * h.k.iter().zip(x).map(|(&k, &xi)| k as f64 * xi).sum::<f64>();
                h.cos * phase.cos() + h.sin * phase.sin()
            })
            .sum()
    }

    /// Evaluate the coefficient of a component (ascending 0-based axes) at
    /// an arbitrary point.
    pub fn eval_component(&self, axes0: &[usize], x: &[f64]) -> f64 {
        let target: Vec<usize> = axes0.iter().map(|a| a + 1).collect();
        self.terms
            .iter()
            .filter(|t| t.component == target)
            .map(|t| Self::eval_harmonics(&t.harmonics, x))
            .sum()
    }

    /// Sample on a grid by direct pointwise evaluation of every harmonic.
    pub fn sample(&self, grid: TorusGrid) -> Result<DiffForm> {
        self.validate()?;
        if self.m != grid.m() {
            return Err(Error::GridMismatch(
                format!("spec on T^{}", self.m),
                format!("grid on T^{}", grid.m()),
            ));
        }
        let basis = FormBasis::get(grid.m(), self.degree);
        let mut form = DiffForm::zeros(grid, self.degree);
        for term in &self.terms {
            let mask = term
                .component
                .iter()
                .fold(0u32, |acc, &a| acc | (1 << (a - 1)));
            let pos = basis.pos[mask as usize];
            if pos == usize::MAX {
                return Err(Error::Validation(format!(
                    "component {:?} invalid for degree {}",
                    term.component, self.degree
                )));
            }
            let comp = &mut form.comps_mut()[pos];
            for i in 0..grid.points() {
                let x = grid.coords(i);
                comp.data_mut()[i] += Self::eval_harmonics(&term.harmonics, &x);
            }
        }
        Ok(form)
    }

    /// Symbolic exterior derivative.
    pub fn exterior_d(&self) -> TrigSpec {
        let mut terms = Vec::new();
        for term in &self.terms {
            let axes0: Vec<usize> = term.component.iter().map(|a| a - 1).collect();
            let mask = axes0.iter().fold(0u32, |acc, &a| acc | (1 << a));
            for a in 0..self.m {
                if mask & (1 << a) != 0 {
                    continue;
                }
                let sign = super::insert_sign(a, mask);
                let mut component: Vec<usize> = term.component.clone();
                component.push(a + 1);
                component.sort_unstable();
                let harmonics: Vec<Harmonic> = term
                    .harmonics
                    .iter()
                    .map(|h| {
                        let factor = sign * TAU * h.k[a] as f64;
                        // d/dx_a (c cos + s sin) = kappa_a (s cos - c sin).
                        Harmonic {
                            k: h.k.clone(),
                            cos: factor * h.sin,
                            sin: -factor * h.cos,
                        }
                    })
                    .collect();
                terms.push(TrigTerm { component, harmonics });
            }
        }
        TrigSpec {
            m: self.m,
            degree: self.degree + 1,
            terms,
        }
        .normalize()
    }

    /// Symbolic wedge product via product-to-sum identities.
    pub fn wedge(&self, other: &TrigSpec) -> Result<TrigSpec> {
        if self.m != other.m {
            return Err(Error::GridMismatch(
                format!("T^{}", self.m),
                format!("T^{}", other.m),
            ));
        }
        let mut terms = Vec::new();
        for t1 in &self.terms {
            let m1 = t1.component.iter().fold(0u32, |acc, &a| acc | (1 << (a - 1)));
            for t2 in &other.terms {
                let m2 = t2.component.iter().fold(0u32, |acc, &a| acc | (1 << (a - 1)));
                if m1 & m2 != 0 {
                    continue;
                }
                let sign = merge_sign(m1, m2);
                let mut component: Vec<usize> =
                    t1.component.iter().chain(&t2.component).copied().collect();
                component.sort_unstable();
                let mut harmonics = Vec::new();
                for h1 in &t1.harmonics {
                    for h2 in &t2.harmonics {
                        let (c1, s1, c2, s2) = (h1.cos, h1.sin, h2.cos, h2.sin);
                        let k_sum: Vec<i64> =
                            h1.k.iter().zip(&h2.k).map(|(a, b)| a + b).collect();
                        let k_diff: Vec<i64> =
                            h1.k.iter().zip(&h2.k).map(|(a, b)| a - b).collect();
                        harmonics.push(Harmonic {
                            k: k_sum,
                            cos: sign * 0.5 * (c1 * c2 - s1 * s2),
                            sin: sign * 0.5 * (c1 * s2 + s1 * c2),
                        });
                        harmonics.push(Harmonic {
                            k: k_diff,
                            cos: sign * 0.5 * (c1 * c2 + s1 * s2),
                            sin: sign * 0.5 * (s1 * c2 - c1 * s2),
                        });
                    }
                }
                terms.push(TrigTerm { component, harmonics });
            }
        }
        Ok(TrigSpec {
            m: self.m,
            degree: self.degree + other.degree,
            terms,
        }
        .normalize())
    }

    pub fn add(&self, other: &TrigSpec) -> Result<TrigSpec> {
        if self.m != other.m || self.degree != other.degree {
            return Err(Error::Validation(
                "cannot add specs of different shape".into(),
            ));
        }
        let mut terms = self.terms.clone();
        terms.extend(other.terms.clone());
        Ok(TrigSpec {
            m: self.m,
            degree: self.degree,
            terms,
        }
        .normalize())
    }

    pub fn scaled(&self, s: f64) -> TrigSpec {
        let mut out = self.clone();
        for t in &mut out.terms {
            for h in &mut t.harmonics {
                h.cos *= s;
                h.sin *= s;
            }
        }
        out
    }
}

/// Canonicalize a harmonic: flip the wavevector sign so the first nonzero
/// entry is positive (cos is even, sin is odd under the flip).
fn canonical_harmonic(k: &[i64], cos: f64, sin: f64) -> (Vec<i64>, f64, f64) {
    match k.iter().find(|&&v| v != 0) {
        Some(&first) if first < 0 => (k.iter().map(|v| -v).collect(), cos, -sin),
        Some(_) => (k.to_vec(), cos, sin),
        // k = 0: sin(0) = 0, keep only the cosine offset.
        None => (k.to_vec(), cos, 0.0),
    }
}

/// Draw a random zero-mean band-limited p-form: for every component,
/// `harmonics` distinct nonzero wavevectors with `|k|_inf <= h` and
/// standard-normal coefficients scaled by `amplitude`.  Returns the spec
/// and its sampled grid form.
pub fn random_form<R: Rng>(
    grid: TorusGrid,
    degree: usize,
    h: usize,
    harmonics: usize,
    amplitude: f64,
    rng: &mut R,
) -> Result<(TrigSpec, DiffForm)> {
    grid.check_resolves(h)?;
    let spec = random_trig_spec(grid.m(), degree, h, harmonics, amplitude, rng);
    let form = spec.sample(grid)?;
    Ok((spec, form))
}

/// Random zero-mean band-limited spec without sampling it.
pub fn random_trig_spec<R: Rng>(
    m: usize,
    degree: usize,
    h: usize,
    harmonics: usize,
    amplitude: f64,
    rng: &mut R,
) -> TrigSpec {
    assert!(h >= 1, "band limit h must be >= 1");
    let basis = FormBasis::get(m, degree);
    let mut terms = Vec::new();
    let normal = |rng: &mut R| {
        let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
        let u2: f64 = rng.gen_range(0.0..TAU);
        (-2.0 * u1.ln()).sqrt() * u2.cos()
    };
    for c in 0..basis.len() {
        let component: Vec<usize> = basis.axes(c).iter().map(|a| a + 1).collect();
        let mut seen = std::collections::BTreeSet::new();
        let mut hs = Vec::new();
        let mut guard = 0;
        while hs.len() < harmonics && guard < 1000 {
            guard += 1;
            let k: Vec<i64> = (0..m)
                .map(|_| rng.gen_range(-(h as i64)..=h as i64))
                .collect();
            if k.iter().all(|&v| v == 0) {
                continue;
            }
            let (ck, _, _) = canonical_harmonic(&k, 0.0, 0.0);
            if !seen.insert(ck.clone()) {
                continue;
            }
            hs.push(Harmonic {
                k: ck,
                cos: amplitude * normal(rng),
                sin: amplitude * normal(rng),
            });
        }
        terms.push(TrigTerm {
            component,
            harmonics: hs,
        });
    }
    TrigSpec { m, degree, terms }.normalize()
}

/// Inner product of the coefficient arrays of two scalar trig functions is
/// not needed; equality in tests goes through [`TrigSpec::normalize`] and
/// [`TrigSpec::coeff_sup`] of the difference.
pub fn specs_close(a: &TrigSpec, b: &TrigSpec, tol: f64) -> bool {
    match a.add(&b.scaled(-1.0)) {
        Ok(diff) => diff.coeff_sup() <= tol,
        Err(_) => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn d_of_sin_spec_matches_cos_spec() {
        // d sin(2 pi x_1) = 2 pi cos(2 pi x_1) dx_1 on T^2.
        let spec = TrigSpec {
            m: 2,
            degree: 0,
            terms: vec![TrigTerm {
                component: vec![],
                harmonics: vec![Harmonic {
                    k: vec![1, 0],
                    cos: 0.0,
                    sin: 1.0,
                }],
            }],
        };
        let d = spec.exterior_d();
        let expect = TrigSpec {
            m: 2,
            degree: 1,
            terms: vec![TrigTerm {
                component: vec![1],
                harmonics: vec![Harmonic {
                    k: vec![1, 0],
                    cos: TAU,
                    sin: 0.0,
                }],
            }],
        };
        assert!(specs_close(&d, &expect, 1e-12));
    }

    #[test]
    fn dd_is_zero_symbolically() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        use rand::SeedableRng;
        let spec = random_trig_spec(4, 1, 3, 5, 1.0, &mut rng);
        let dd = spec.exterior_d().exterior_d();
        // Cancellation is exact up to float associativity in the 2 pi k
        // prefactors.
        assert!(dd.coeff_sup() < 1e-12, "dd = {dd:?}");
    }

    #[test]
    fn wedge_of_cosines_uses_product_to_sum() {
        // cos(2 pi x_1) dx_1 ^ cos(2 pi x_2) dx_2
        //   = [cos(2 pi (x_1+x_2)) + cos(2 pi (x_1-x_2))] / 2 dx_1^dx_2.
        let a = TrigSpec {
            m: 2,
            degree: 1,
            terms: vec![TrigTerm {
                component: vec![1],
                harmonics: vec![Harmonic { k: vec![1, 0], cos: 1.0, sin: 0.0 }],
            }],
        };
        let b = TrigSpec {
            m: 2,
            degree: 1,
            terms: vec![TrigTerm {
                component: vec![2],
                harmonics: vec![Harmonic { k: vec![0, 1], cos: 1.0, sin: 0.0 }],
            }],
        };
        let w = a.wedge(&b).unwrap();
        let expect = TrigSpec {
            m: 2,
            degree: 2,
            terms: vec![TrigTerm {
                component: vec![1, 2],
                harmonics: vec![
                    Harmonic { k: vec![1, 1], cos: 0.5, sin: 0.0 },
                    Harmonic { k: vec![1, -1], cos: 0.5, sin: 0.0 },
                ],
            }],
        };
        assert!(specs_close(&w, &expect, 1e-12));
        // Antisymmetry of the wedge on 1-forms.
        let ba = b.wedge(&a).unwrap();
        assert!(specs_close(&w, &ba.scaled(-1.0), 1e-12));
    }

    #[test]
    fn sampling_matches_pointwise_evaluation() {
        use rand::SeedableRng;
        let grid = TorusGrid::new(3, 8).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(10);
        let spec = random_trig_spec(3, 2, 2, 4, 1.5, &mut rng);
        let form = spec.sample(grid).unwrap();
        let basis = form.basis();
        for c in 0..basis.len() {
            let axes = basis.axes(c);
            for idx in [0usize, 5, 100, 511] {
                let x = grid.coords(idx);
                let direct = spec.eval_component(&axes, &x);
                assert!((form.comp(c).data()[idx] - direct).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn wedge_consistency_between_symbolic_and_grid_paths() {
        use rand::SeedableRng;
        let grid = TorusGrid::new(3, 16).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let (sa, fa) = random_form(grid, 1, 2, 3, 1.0, &mut rng).unwrap();
        let (sb, fb) = random_form(grid, 1, 2, 3, 1.0, &mut rng).unwrap();
        let symbolic = sa.wedge(&sb).unwrap().sample(grid).unwrap();
        let gridwise = fa.wedge(&fb).unwrap();
        let scale = gridwise.sup_norm().max(1.0);
        assert!(symbolic.sub(&gridwise).unwrap().sup_norm() < 1e-11 * scale);
    }

    #[test]
    fn json_round_trip_and_unknown_field_rejection() {
        let spec = TrigSpec {
            m: 4,
            degree: 4,
            terms: vec![TrigTerm {
                component: vec![1, 2, 3, 4],
                harmonics: vec![
                    Harmonic { k: vec![1, 0, 1, 0], cos: 4.0 * PI * PI, sin: 0.0 },
                    Harmonic { k: vec![1, 0, -1, 0], cos: 4.0 * PI * PI, sin: 0.0 },
                ],
            }],
        };
        let json = serde_json::to_string(&spec).unwrap();
        let back: TrigSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(spec, back);
        let bad = r#"{"m":2,"degree":0,"terms":[],"extra":1}"#;
        assert!(serde_json::from_str::<TrigSpec>(bad).is_err());
    }

    #[test]
    fn validation_rejects_bad_components() {
        let spec = TrigSpec {
            m: 2,
            degree: 1,
            terms: vec![TrigTerm {
                component: vec![3],
                harmonics: vec![],
            }],
        };
        assert!(spec.validate().is_err());
        let spec = TrigSpec {
            m: 2,
            degree: 2,
            terms: vec![TrigTerm {
                component: vec![2, 1],
                harmonics: vec![],
            }],
        };
        assert!(spec.validate().is_err());
    }

    #[test]
    fn random_specs_are_zero_mean_and_band_limited() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        let spec = random_trig_spec(4, 2, 2, 6, 1.0, &mut rng);
        assert!(spec.max_harmonic() <= 2);
        for (_, mean) in spec.component_means() {
            assert_eq!(mean, 0.0);
        }
    }
}
