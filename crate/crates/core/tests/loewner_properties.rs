use num_complex::Complex64;
use proptest::prelude::*;
use slelab::loewner::{forward_map, inverse_map};
use slelab::{build_chain, sample_brownian};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// g_t(z) = z + 2t/z + O(|z|⁻²) for every Loewner chain.
    #[test]
    fn half_plane_capacity_grows_linearly(
        kappa in 0.0f64..8.0,
        seed in any::<u64>(),
        arg in 0.1f64..3.0,
        k in 1usize..=400,
    ) {
        let chain = build_chain(&sample_brownian(kappa, 1.0, 400, seed).unwrap()).unwrap();
        let t = k as f64 / 400.0;
        let r = 1e4;
        let z = Complex64::from_polar(r, arg);
        let g = forward_map(&chain, z, k, chain.default_swallow_tol()).unwrap().image().unwrap();
        let cap = ((g - z) * z).re;
        prop_assert!((cap - 2.0 * t).abs() <= 50.0 / r, "cap {} vs {}", cap, 2.0 * t);
    }

    #[test]
    fn inverse_map_lands_in_the_upper_half_plane(
        kappa in 0.0f64..10.0,
        seed in any::<u64>(),
        x in -3.0f64..3.0,
        y in 0.01f64..3.0,
    ) {
        let chain = build_chain(&sample_brownian(kappa, 1.0, 300, seed).unwrap()).unwrap();
        let w = inverse_map(&chain, Complex64::new(x, y), 300).unwrap();
        prop_assert!(w.im > 0.0);
        prop_assert!(w.is_finite());
    }
}
