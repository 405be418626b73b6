mod common;

use common::{simpson, simpson_panels};
use nonlocal_burgers::kernels::{
    moment_a, moment_b, validate_kernel_pair, KernelFn, KernelPair, MomentMethod, SampleSet,
};
use nonlocal_burgers::Error;

fn oracle_moments(pair: &KernelPair, radius: f64, cuts: &[f64]) -> (f64, f64) {
    let mut panels = vec![-radius];
    panels.extend(cuts.iter().copied().filter(|c| c.abs() < radius));
    panels.push(radius);
    panels.sort_by(f64::total_cmp);
    let a = 0.5 * simpson_panels(&|z| pair.k.eval(z) * z * z, &panels, 1e-14);
    let b = simpson_panels(&|z| pair.g.eval(z) * z, &panels, 1e-14);
    (a, b)
}

#[test]
fn exponential_moments_match_quadrature_oracle() {
    for sigma in [0.5, 1.0, 2.0] {
        let pair = KernelPair::new(KernelFn::exponential(sigma), KernelFn::exponential_derivative(sigma));
        let (a, b) = oracle_moments(&pair, 60.0 * sigma, &[0.0]);
        assert!((moment_a(&pair, MomentMethod::Auto).unwrap() - a).abs() < 1e-10);
        assert!((moment_b(&pair, MomentMethod::Auto).unwrap() - b).abs() < 1e-10);
        assert!((a - sigma * sigma).abs() < 1e-10);
        assert!((b + 1.0).abs() < 1e-10);
    }
}

#[test]
fn gaussian_and_tophat_moments() {
    let pair = KernelPair::new(KernelFn::gaussian(0.7), KernelFn::gaussian_derivative(0.7));
    let (a, b) = oracle_moments(&pair, 12.0, &[0.0]);
    assert!((moment_a(&pair, MomentMethod::Quadrature).unwrap() - a).abs() < 1e-10);
    assert!((moment_b(&pair, MomentMethod::Quadrature).unwrap() - b).abs() < 1e-10);

    let pair = KernelPair::new(KernelFn::tophat(1.0), KernelFn::linear(1.0).scaled(-0.5));
    let (a, b) = oracle_moments(&pair, 1.0, &[0.0]);
    assert!((a - 1.0 / 6.0).abs() < 1e-12);
    assert!((b + 1.0 / 3.0).abs() < 1e-12);
    let r = validate_kernel_pair(&pair, &SampleSet::default_for(&pair), 1e-10).unwrap();
    assert!((r.a - a).abs() < 1e-10 && (r.b - b).abs() < 1e-10);
    assert!((r.c_gk - 1.0).abs() < 1e-12);
    assert!(r.hypotheses.all());
}

#[test]
fn tabulated_kernel_moments_by_quadrature() {
    // Triangle K = 1 - |x| on [-1, 1] and G = -x(1 - |x|).
    let k: Vec<[f64; 2]> = vec![[-1.0, 0.0], [0.0, 1.0], [1.0, 0.0]];
    let g: Vec<[f64; 2]> = (0..=40)
        .map(|i| {
            let x = -1.0 + i as f64 / 20.0;
            [x, -x * (1.0 - x.abs())]
        })
        .collect();
    let pair = KernelPair::new(KernelFn::tabulated(k), KernelFn::tabulated(g));
    let cuts: Vec<f64> = (0..=40).map(|i| -1.0 + i as f64 / 20.0).collect();
    let (a, b) = oracle_moments(&pair, 1.0, &cuts);
    assert!((a - 1.0 / 12.0).abs() < 1e-12);
    assert!((moment_a(&pair, MomentMethod::Auto).unwrap() - a).abs() < 1e-10);
    assert!((moment_b(&pair, MomentMethod::Auto).unwrap() - b).abs() < 1e-10);
}

#[test]
fn dilation_scales_moments() {
    let base = KernelPair::exponential();
    let (a0, b0) = (
        moment_a(&base, MomentMethod::Quadrature).unwrap(),
        moment_b(&base, MomentMethod::Quadrature).unwrap(),
    );
    for lambda in [0.25, 0.5, 2.0, 3.0] {
        let pair = base.rescaled(lambda);
        let a = moment_a(&pair, MomentMethod::Quadrature).unwrap();
        let b = moment_b(&pair, MomentMethod::Quadrature).unwrap();
        assert!((a - a0 / (lambda * lambda)).abs() < 1e-10, "{lambda}");
        assert!((b - b0 / lambda).abs() < 1e-10, "{lambda}");
        let mass = simpson(&|z| pair.k.eval(z), 0.0, 60.0 / lambda, 1e-14) * 2.0;
        assert!((mass - 1.0).abs() < 1e-10);
    }
}

#[test]
fn structural_hypotheses_are_detected() {
    let not_odd = KernelPair::new(KernelFn::exponential(1.0), KernelFn::exponential(1.0).scaled(0.5));
    let r = validate_kernel_pair(&not_odd, &SampleSet::default_for(&not_odd), 1e-10).unwrap();
    assert!(!r.hypotheses.g_odd);

    let heavy = KernelPair::new(KernelFn::exponential(1.0).scaled(2.0), KernelFn::zero());
    let r = validate_kernel_pair(&heavy, &SampleSet::default_for(&heavy), 1e-10).unwrap();
    assert!(!r.hypotheses.k_unit_mass);

    let wide_g = KernelPair::new(KernelFn::tophat(1.0), KernelFn::linear(2.0));
    let err = validate_kernel_pair(&wide_g, &SampleSet::symmetric(3.0, 300), 1e-10).unwrap_err();
    assert!(matches!(err, Error::DominationFailure { .. }));
}
