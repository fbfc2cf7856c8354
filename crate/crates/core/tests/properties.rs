use heyde::classify::{classify2d, classify_general, CaseTag};
use heyde::distribution::{convolve, Atom, DiscreteMeasure, GaussianComponent, ModelDistribution};
use heyde::operator::{decompose, restrict, LinearOperator};
use heyde::verify::{finite_difference, VerifyError};
use heyde::witness::{shift_pair, solve_matrix_equation, PSD_TOL};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn invertible(n: usize) -> impl Strategy<Value = LinearOperator> {
    prop::collection::vec(-3.0f64..3.0, n * n)
        .prop_filter_map("singular", move |v| LinearOperator::new(DMatrix::from_row_slice(n, n, &v)).ok())
}

fn integer_invertible(n: usize) -> impl Strategy<Value = LinearOperator> {
    prop::collection::vec(-3i32..=3, n * n).prop_filter_map("singular", move |v| {
        let f: Vec<f64> = v.iter().map(|&x| x as f64).collect();
        LinearOperator::new(DMatrix::from_row_slice(n, n, &f)).ok()
    })
}

fn vector(n: usize, r: f64) -> impl Strategy<Value = DVector<f64>> {
    prop::collection::vec(-r..r, n).prop_map(DVector::from_vec)
}

fn distribution(n: usize) -> impl Strategy<Value = ModelDistribution> {
    (
        prop::collection::vec(-1.0f64..1.0, n * n),
        prop::collection::vec(vector(n, 2.0), 1..4),
        vector(n, 1.0),
    )
        .prop_map(move |(g, points, shift)| {
            let b = DMatrix::from_row_slice(n, n, &g);
            let a = &b * b.transpose() * 0.5;
            let gauss = GaussianComponent::centered(a).unwrap();
            let w = 1.0 / points.len() as f64;
            let atoms = points.into_iter().map(|point| Atom { point, weight: w }).collect();
            let discrete = DiscreteMeasure::new(n, atoms).unwrap();
            ModelDistribution::new(n, Some(gauss), Some(discrete), shift).unwrap()
        })
}

/// Unimodular 2×2 integer matrix as a product of elementary shears.
fn unimodular() -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec((any::<bool>(), -2i32..=2), 1..4).prop_map(|steps| {
        let mut s = DMatrix::identity(2, 2);
        for (upper, k) in steps {
            let mut e = DMatrix::identity(2, 2);
            if upper {
                e[(0, 1)] = k as f64;
            } else {
                e[(1, 0)] = k as f64;
            }
            s *= e;
        }
        s
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn decomposition_of_random_operators(alpha in (1usize..=4).prop_flat_map(invertible)) {
        let d = decompose(&alpha).unwrap();
        let r = d.invariant_report(&alpha);
        prop_assert!(r.holds(1e-8), "{:?}", r);
    }

    #[test]
    fn decomposition_of_integer_operators(alpha in (1usize..=4).prop_flat_map(integer_invertible)) {
        let n = alpha.dim();
        let d = decompose(&alpha).unwrap();
        prop_assert_eq!(d.f.dim() + d.g.dim(), n);
        prop_assert!(d.k.dim() <= d.f.dim());
        if !d.k.is_zero() {
            let rk = restrict(&alpha, &d.k).unwrap();
            prop_assert!((rk + DMatrix::identity(d.k.dim(), d.k.dim())).amax() <= 1e-10);
        }
        prop_assert!(d.invariant_report(&alpha).holds(1e-8));
    }

    #[test]
    fn convolution_multiplies_cfs(mu in distribution(2), nu in distribution(2), y in vector(2, 2.0)) {
        let c = convolve(&mu, &nu).unwrap();
        prop_assert!((c.cf(&y) - mu.cf(&y) * nu.cf(&y)).norm() <= 1e-12);
    }

    #[test]
    fn reflection_and_symmetrization(mu in distribution(2), y in vector(2, 2.0)) {
        prop_assert!((mu.reflect().cf(&y) - mu.cf(&y).conj()).norm() <= 1e-12);
        let nu = mu.symmetrize().unwrap().cf(&y);
        prop_assert!(nu.im.abs() <= 1e-12);
        prop_assert!((nu.re - mu.cf(&y).norm_sqr()).abs() <= 1e-12);
    }

    #[test]
    fn shifts_solve_the_linear_constraint(alpha in invertible(3), x in vector(3, 5.0)) {
        let (x1, x2) = shift_pair(&alpha, &x);
        prop_assert!((&x1 + alpha.apply(&x2)).amax() <= 1e-12);
    }

    #[test]
    fn matrix_equation_solutions(alpha in (1usize..=3).prop_flat_map(invertible)) {
        let m = alpha.matrix();
        let s = solve_matrix_equation(m);
        prop_assert!(!s.basis_pairs.is_empty());
        for b in &s.basis_pairs {
            prop_assert!(b.equation_residual(m) <= 1e-10);
        }
        match &s.psd_witness {
            Some(w) => {
                prop_assert!(s.psd_cone_nonempty && w.is_psd(PSD_TOL) && !w.is_zero());
                prop_assert!(w.equation_residual(m) <= 1e-6 * w.a1.amax().max(1.0));
            }
            None => prop_assert!(!s.psd_cone_nonempty),
        }
    }

    #[test]
    fn plane_classification_is_basis_covariant(alpha in integer_invertible(2), s in unimodular()) {
        let inv = s.clone().try_inverse().unwrap();
        let conj = (&s * alpha.matrix() * &inv).map(|x| x.round());
        let beta = LinearOperator::new(conj).unwrap();
        let (a, b) = (classify2d(&alpha).unwrap(), classify2d(&beta).unwrap());
        prop_assert_eq!(a.case_tag, b.case_tag);
        prop_assert_eq!(a.k.dim(), b.k.dim());
        prop_assert_eq!(a.g.dim(), b.g.dim());
        let dims = |f: &heyde::classify::SolutionFamily| f.gaussian_support_options.iter().map(|o| o.dim()).collect::<Vec<_>>();
        prop_assert_eq!(dims(&a), dims(&b));
        // K maps through S.
        for v in a.k.basis_vectors() {
            prop_assert!(b.k.contains(&(&s * v), 1e-9));
        }
    }

    #[test]
    fn general_and_plane_agree_on_case_split(alpha in integer_invertible(2)) {
        let fine = classify2d(&alpha).unwrap();
        let coarse = classify_general(&alpha).unwrap();
        prop_assert_eq!(coarse.case_tag == CaseTag::GaussianGeneral, fine.k.is_zero());
        let d = decompose(&alpha).unwrap();
        prop_assert_eq!(coarse.singular_flag, d.f.dim() > d.k.dim());
    }

    #[test]
    fn finite_difference_recursion(c in prop::collection::vec(-2.0f64..2.0, 4), h in vector(2, 0.5), y in vector(2, 1.0), m in 2usize..6) {
        let p = move |z: &DVector<f64>| -> Result<f64, VerifyError> {
            Ok(c[0] * z[0].powi(3) + c[1] * z[0] * z[1] + c[2] * (z[1]).sin() + c[3])
        };
        let direct = finite_difference(&p, &h, m, &y).unwrap();
        let nested = finite_difference(|z: &DVector<f64>| finite_difference(&p, &h, m - 1, z), &h, 1, &y).unwrap();
        prop_assert!((direct - nested).abs() <= 1e-9);
    }

    #[test]
    fn arbitrary_equal_means_minus_identity(alpha in integer_invertible(2)) {
        let f = classify2d(&alpha).unwrap();
        if f.case_tag == CaseTag::ArbitraryEqual {
            prop_assert!((alpha.matrix() + DMatrix::identity(2, 2)).amax() <= 1e-10);
        }
        if f.singular_flag {
            let d = decompose(&alpha).unwrap();
            prop_assert!(d.f.dim() > d.k.dim());
        }
    }
}
