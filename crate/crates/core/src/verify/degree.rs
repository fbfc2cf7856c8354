//! Finite differences and the polynomial-degree probe.
//!
//! Scalar fields are plain closures `Fn(&DVector<f64>) -> Result<f64, VerifyError>`
//! so that a field may report points where it is undefined.

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::VerifyError;
use crate::distribution::ModelDistribution;
use crate::operator::Subspace;
use crate::par;

/// |ν̂(y)| at or below this value leaves the neighbourhood where log ν̂ is used.
pub const CF_FLOOR: f64 = 1e-6;
/// Relative zero test for finite differences.
pub const PROBE_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DegreeProbe {
    Degree(usize),
    NotPolynomial,
}

impl DegreeProbe {
    pub fn degree(self) -> Option<usize> {
        match self {
            DegreeProbe::Degree(m) => Some(m),
            DegreeProbe::NotPolynomial => None,
        }
    }
}

fn binomial(m: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (m - i) as f64 / (i + 1) as f64)
}

/// Δ_h^m P(y) from the values P(y), P(y+h), …, P(y+mh).
fn difference_of_values(values: &[f64], m: usize) -> f64 {
    (0..=m)
        .map(|k| {
            let sign = if (m - k).is_multiple_of(2) { 1.0 } else { -1.0 };
            sign * binomial(m, k) * values[k]
        })
        .sum()
}

/// Δ_h^m P(y) = Σ_{k=0}^{m} (−1)^{m−k} C(m,k) P(y + kh).
pub fn finite_difference<P>(p: P, h: &DVector<f64>, order: usize, y: &DVector<f64>) -> Result<f64, VerifyError>
where
    P: Fn(&DVector<f64>) -> Result<f64, VerifyError>,
{
    if order == 0 {
        return Err(VerifyError::InvalidArgument("difference order must be at least 1".into()));
    }
    if h.len() != y.len() {
        return Err(VerifyError::DimensionMismatch { expected: y.len(), actual: h.len() });
    }
    let values = (0..=order)
        .map(|k| p(&(y + h * k as f64)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(difference_of_values(&values, order))
}

/// Uniform draw from the open ball of radius `r` in ℝⁿ.
fn in_ball(rng: &mut impl Rng, dim: usize, r: f64) -> DVector<f64> {
    loop {
        let g = DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
        let norm = g.norm();
        if norm == 0.0 {
            continue;
        }
        let radius = r * rng.random::<f64>().powf(1.0 / dim as f64);
        let x = g * (radius / norm);
        if x.norm() < r {
            return x;
        }
    }
}

/// Smallest m ≤ `max_degree` with |Δ_h^{m+1}P(y)| ≤ 1e-8·max(1, max|P|) on
/// every trial, where the trials (y, h) are drawn once from the ball of radius
/// `region_radius` and max|P| runs over all evaluated points.
pub fn degree_probe<P>(
    p: P,
    dim: usize,
    region_radius: f64,
    max_degree: usize,
    trial_count: usize,
    seed: u64,
) -> Result<DegreeProbe, VerifyError>
where
    P: Fn(&DVector<f64>) -> Result<f64, VerifyError>,
{
    if !(region_radius > 0.0) || trial_count == 0 {
        return Err(VerifyError::InvalidArgument("region_radius and trial_count must be positive".into()));
    }
    let mut rng = par::stream_rng(seed, 0);
    let order = max_degree + 1;
    let mut table = Vec::with_capacity(trial_count);
    let mut scale = 1.0f64;
    for _ in 0..trial_count {
        let y = in_ball(&mut rng, dim, region_radius);
        let h = in_ball(&mut rng, dim, region_radius);
        let values = (0..=order)
            .map(|k| p(&(&y + &h * k as f64)))
            .collect::<Result<Vec<_>, _>>()?;
        scale = values.iter().fold(scale, |s, v| s.max(v.abs()));
        table.push(values);
    }
    let tol = PROBE_TOLERANCE * scale;
    for m in 0..=max_degree {
        if table.iter().all(|values| difference_of_values(values, m + 1).abs() <= tol) {
            return Ok(DegreeProbe::Degree(m));
        }
    }
    Ok(DegreeProbe::NotPolynomial)
}

/// log ν̂(y) for ν = μ ∗ μ̄, that is ln |μ̂(y)|².
pub fn log_symmetrized_cf(mu: &ModelDistribution, y: &DVector<f64>) -> Result<f64, VerifyError> {
    if y.len() != mu.dim() {
        return Err(VerifyError::DimensionMismatch { expected: mu.dim(), actual: y.len() });
    }
    let nu = mu.cf(y).norm_sqr();
    if !(nu > CF_FLOOR) {
        return Err(VerifyError::domain(y, format!("symmetrized characteristic function {nu:e} is below the floor")));
    }
    Ok(nu.ln())
}

/// The restriction z ↦ P(Qz) of P to S, in coordinates of S's orthonormal basis Q.
pub fn on_subspace<'a, P>(p: P, s: &'a Subspace) -> impl Fn(&DVector<f64>) -> Result<f64, VerifyError> + 'a
where
    P: Fn(&DVector<f64>) -> Result<f64, VerifyError> + 'a,
{
    move |z| {
        if z.len() != s.dim() {
            return Err(VerifyError::DimensionMismatch { expected: s.dim(), actual: z.len() });
        }
        p(&s.embed(z))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distribution::GaussianComponent;
    use crate::operator::{image_of_i_plus_adjoint, jordan_cell};
    use nalgebra::DMatrix;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    type Field = fn(&DVector<f64>) -> Result<f64, VerifyError>;

    #[test]
    fn textbook_differences() {
        let linear: Field = |y| Ok(2.0 * y[0] - 3.0 * y[1]);
        let square: Field = |y| Ok(y.norm_squared());
        let cube: Field = |y| Ok(y[0].powi(3));
        let y = v(&[0.3, -0.7]);
        assert!(finite_difference(linear, &v(&[0.5, 0.25]), 2, &y).unwrap().abs() < 1e-14);
        assert!(finite_difference(square, &v(&[0.5, 0.25]), 3, &y).unwrap().abs() < 1e-14);
        let h1 = 0.4;
        let d = finite_difference(cube, &v(&[h1, 0.0]), 3, &y).unwrap();
        assert!((d - 6.0 * h1 * h1 * h1).abs() < 1e-13);
    }

    #[test]
    fn difference_recursion() {
        let p: Field = |y| Ok((y[0] * 1.3).sin() + y[1].exp());
        let h = v(&[0.2, -0.1]);
        let y = v(&[0.1, 0.4]);
        for m in 2..6 {
            let direct = finite_difference(p, &h, m, &y).unwrap();
            let lower = |z: &DVector<f64>| finite_difference(p, &h, m - 1, z);
            let nested = finite_difference(lower, &h, 1, &y).unwrap();
            assert!((direct - nested).abs() < 1e-9, "m={m}");
        }
    }

    #[test]
    fn domain_errors_propagate() {
        let partial: Field = |y| if y[0] > 0.5 { Err(VerifyError::domain(y, "outside")) } else { Ok(0.0) };
        let r = finite_difference(partial, &v(&[0.2]), 3, &v(&[0.0]));
        assert!(matches!(r, Err(VerifyError::Domain { .. })));
    }

    #[test]
    fn probe_detects_degree() {
        let zero: Field = |_| Ok(0.0);
        let quad: Field = |y| Ok(-(y.norm_squared()));
        let quartic: Field = |y| Ok(-(y.norm_squared()) - 0.1 * y[0].powi(4));
        assert_eq!(degree_probe(zero, 2, 0.3, 4, 200, 1).unwrap(), DegreeProbe::Degree(0));
        assert_eq!(degree_probe(quad, 2, 0.3, 4, 200, 1).unwrap(), DegreeProbe::Degree(2));
        assert_eq!(degree_probe(quartic, 2, 0.3, 2, 200, 1).unwrap(), DegreeProbe::NotPolynomial);
        assert_eq!(degree_probe(quartic, 2, 0.3, 4, 200, 1).unwrap(), DegreeProbe::Degree(4));
    }

    #[test]
    fn symmetrized_gaussian_and_point_mass() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 0.5]);
        let g = GaussianComponent::new(a.clone(), v(&[0.3, -1.0])).unwrap();
        let mu = crate::distribution::convolve(&ModelDistribution::from_gaussian(g), &ModelDistribution::point_mass(v(&[2.0, 1.0]))).unwrap();
        let y = v(&[0.2, -0.1]);
        let expected = -2.0 * (&a * &y).dot(&y);
        assert!((log_symmetrized_cf(&mu, &y).unwrap() - expected).abs() < 1e-14);
        let via_symmetrize = mu.symmetrize().unwrap().cf(&y);
        assert!((via_symmetrize.re.ln() - expected).abs() < 1e-12);
        assert!(via_symmetrize.im.abs() < 1e-12);
        assert_eq!(log_symmetrized_cf(&mu, &v(&[0.0, 0.0])).unwrap(), 0.0);

        let field = |y: &DVector<f64>| log_symmetrized_cf(&mu, y);
        assert_eq!(degree_probe(field, 2, 0.3, 4, 200, 3).unwrap(), DegreeProbe::Degree(2));
        let point = ModelDistribution::point_mass(v(&[2.0, 1.0]));
        let field = |y: &DVector<f64>| log_symmetrized_cf(&point, y);
        assert_eq!(degree_probe(field, 2, 0.3, 4, 200, 3).unwrap(), DegreeProbe::Degree(0));
    }

    #[test]
    fn vanishing_cf_is_a_domain_error() {
        let mu = ModelDistribution::from_gaussian(GaussianComponent::centered(DMatrix::identity(1, 1)).unwrap());
        // |μ̂(y)|² = e^{−2y²} drops below 1e-6 once y² > 3·ln 10.
        assert!(log_symmetrized_cf(&mu, &v(&[2.0])).is_ok());
        assert!(matches!(log_symmetrized_cf(&mu, &v(&[3.0])), Err(VerifyError::Domain { .. })));
    }

    #[test]
    fn restriction_to_h_for_jordan_cell() {
        let alpha = jordan_cell(2).unwrap();
        let h = image_of_i_plus_adjoint(&alpha);
        assert_eq!(h.dim(), 1);
        let quartic_off_h = move |y: &DVector<f64>| -> Result<f64, VerifyError> { Ok(y[1] * y[1] + y[0].powi(4)) };
        // H is spanned by e₂, so the quartic term in y₁ vanishes on it.
        let restricted = on_subspace(quartic_off_h, &h);
        assert_eq!(degree_probe(&restricted, 1, 0.3, 4, 200, 5).unwrap(), DegreeProbe::Degree(2));
        assert!(matches!(restricted(&v(&[0.0, 0.0])), Err(VerifyError::DimensionMismatch { .. })));
    }
}
