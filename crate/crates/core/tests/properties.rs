//! Property-based invariants over the numeric core.

use lightnorm::bfp::{bfp_bit_size, pack_tensor, unpack_tensor};
use lightnorm::minifloat::{
    catalog, fp10a, fp32, fp64, fp8, fp_add, fp_mul, quantize, FpEnv, FpFormat,
};
use lightnorm::norm::{bn_forward, rn_forward, AffineParams, NormConfig, Variant};
use lightnorm::tensor::Tensor;
use proptest::prelude::*;

fn small_formats() -> impl Strategy<Value = FpFormat> {
    prop_oneof![
        Just(fp8()),
        Just(fp10a()),
        Just(lightnorm::minifloat::fp10b()),
        Just(lightnorm::minifloat::fp16()),
        Just(lightnorm::minifloat::bfloat16()),
        Just(fp32()),
    ]
}

fn finite_input() -> impl Strategy<Value = f64> {
    // magnitudes spanning well past every catalog format's range
    (any::<i32>().prop_map(|e| (e % 40) as f64), -1.0f64..1.0)
        .prop_map(|(e, m)| (1.0 + m.abs()) * 2f64.powf(e) * m.signum())
        .prop_filter("nonzero finite", |v| v.is_finite())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn quantize_idempotent(x in finite_input(), fmt in small_formats()) {
        let q = quantize(x, &fmt).unwrap();
        prop_assert_eq!(quantize(q, &fmt).unwrap().to_bits(), q.to_bits());
    }

    #[test]
    fn quantize_monotone(a in finite_input(), b in finite_input(), fmt in small_formats()) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(quantize(lo, &fmt).unwrap() <= quantize(hi, &fmt).unwrap());
    }

    #[test]
    fn quantize_sign_symmetric(x in finite_input(), fmt in small_formats()) {
        let q = quantize(x, &fmt).unwrap();
        let qn = quantize(-x, &fmt).unwrap();
        prop_assert_eq!((-q).to_bits(), qn.to_bits());
    }

    #[test]
    fn small_integers_exact(n in -32i64..=32, fmt in small_formats()) {
        // |n| <= 2^(m+1) is exactly representable (FP8: m=2 -> up to 8)
        let limit = 1i64 << (fmt.man_bits + 1);
        let n = n.clamp(-limit, limit);
        prop_assert_eq!(quantize(n as f64, &fmt).unwrap(), n as f64);
    }

    #[test]
    fn add_commutes(a in finite_input(), b in finite_input(), fmt in small_formats()) {
        let a = quantize(a, &fmt).unwrap();
        let b = quantize(b, &fmt).unwrap();
        prop_assert_eq!(
            fp_add(a, b, &fmt).unwrap().to_bits(),
            fp_add(b, a, &fmt).unwrap().to_bits()
        );
    }

    #[test]
    fn zse_gap_law(a in finite_input(), b in finite_input(), fmt in small_formats()) {
        // exponent gap beyond m+2 guarantees the small addend vanishes
        let a = quantize(a, &fmt).unwrap();
        let b = quantize(b, &fmt).unwrap();
        prop_assume!(a != 0.0 && b != 0.0);
        let ea = a.abs().log2().floor() as i32;
        let eb = b.abs().log2().floor() as i32;
        prop_assume!(ea - eb > fmt.zse_gap());
        prop_assert_eq!(fp_add(a, b, &fmt).unwrap().to_bits(), a.to_bits());
    }

    #[test]
    fn fp32_emulation_matches_native(bits_a in any::<u32>(), bits_b in any::<u32>()) {
        // constrain exponents to the normal mid-range (no subnormal/overflow)
        let clamp = |bits: u32| {
            let e = 67 + (bits >> 23 & 0xff) % 120; // biased 67..=186
            f32::from_bits((bits & 0x807f_ffff) | (e << 23))
        };
        let (a, b) = (clamp(bits_a), clamp(bits_b));
        let fmt = fp32();
        let sum = a + b;
        if sum == 0.0 || sum.abs() >= f32::MIN_POSITIVE {
            let em = fp_add(a, b, &fmt).unwrap();
            prop_assert_eq!(em.to_bits(), sum.to_bits());
        }
        let prod = a * b;
        if prod.is_finite() && (prod == 0.0 || prod.abs() >= f32::MIN_POSITIVE) {
            let em = fp_mul(a, b, &fmt).unwrap();
            prop_assert_eq!(em.to_bits(), prod.to_bits());
        }
    }

    #[test]
    fn bfp_round_trip_and_size(vals in prop::collection::vec(-100.0f64..100.0, 16), k in 1usize..=8) {
        let fmt = fp10a();
        let q: Vec<f64> = vals.iter().map(|&v| quantize(v, &fmt).unwrap()).collect();
        let t = Tensor::new(vec![16, 1], q.clone()).unwrap();
        let packed = pack_tensor(&t, &fmt, k).unwrap();
        prop_assert_eq!(packed.total_bits, bfp_bit_size(16, &fmt, k));
        let back = unpack_tensor(&packed).unwrap();
        // error bounded by half an ulp at each block's shared exponent
        for (chunk, (orig, rec)) in q.chunks(k).zip(back.data.chunks(k)).enumerate() {
            let es = packed.blocks[chunk].shared_exp;
            let half_ulp = 2f64.powi(es - fmt.man_bits as i32 - 1);
            for (o, r) in chunk_pairs(orig, rec) {
                prop_assert!((o - r).abs() <= half_ulp, "err {} > {half_ulp}", (o - r).abs());
            }
        }
    }

    #[test]
    fn bfp_error_monotone_in_group_size(vals in prop::collection::vec(-64.0f64..64.0, 32)) {
        let fmt = fp10a();
        let q: Vec<f64> = vals.iter().map(|&v| quantize(v, &fmt).unwrap()).collect();
        let t = Tensor::new(vec![32, 1], q.clone()).unwrap();
        let err = |k: usize| -> f64 {
            let back = unpack_tensor(&pack_tensor(&t, &fmt, k).unwrap()).unwrap();
            q.iter().zip(back.data.iter()).map(|(a, b)| (a - b).abs()).sum()
        };
        // nested blocks: a coarser shared exponent can only lose information
        let (e2, e4, e8) = (err(2), err(4), err(8));
        prop_assert!(e2 <= e4 + 1e-12 && e4 <= e8 + 1e-12, "{e2} {e4} {e8}");
    }

    #[test]
    fn bfp_power_of_two_covariant(vals in prop::collection::vec(-32.0f64..32.0, 8), j in -3i32..=3) {
        let fmt = fp10a();
        let q: Vec<f64> = vals.iter().map(|&v| quantize(v, &fmt).unwrap()).collect();
        let s = 2f64.powi(j);
        let scaled: Vec<f64> = q.iter().map(|&v| v * s).collect();
        let t1 = Tensor::new(vec![8, 1], q).unwrap();
        let t2 = Tensor::new(vec![8, 1], scaled).unwrap();
        let b1 = unpack_tensor(&pack_tensor(&t1, &fmt, 4).unwrap()).unwrap();
        let b2 = unpack_tensor(&pack_tensor(&t2, &fmt, 4).unwrap()).unwrap();
        for (a, b) in b1.data.iter().zip(b2.data.iter()) {
            prop_assert_eq!((a * s).to_bits(), b.to_bits());
        }
    }
}

fn chunk_pairs<'a>(a: &'a [f64], b: &'a [f64]) -> impl Iterator<Item = (f64, f64)> + 'a {
    a.iter().copied().zip(b.iter().copied())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn restructured_equals_conventional_at_fp64(
        vals in prop::collection::vec(-10.0f64..10.0, 64),
    ) {
        let t = Tensor::new(vec![16, 4], vals).unwrap();
        let p = AffineParams::identity(4);
        let conv = NormConfig::new(Variant::Conventional, fp64(), fp64());
        let restr = NormConfig::new(Variant::Restructured, fp64(), fp64());
        let (ya, _) = bn_forward(&t, &p, &conv).unwrap();
        let (yb, _) = bn_forward(&t, &p, &restr).unwrap();
        for (a, b) in ya.data.iter().zip(yb.data.iter()) {
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
        }
    }

    #[test]
    fn bn_affine_covariance(
        vals in prop::collection::vec(-5.0f64..5.0, 32),
        gamma in 0.25f64..4.0,
        beta in -2.0f64..2.0,
    ) {
        let t = Tensor::new(vec![32, 1], vals).unwrap();
        let cfg = NormConfig::new(Variant::Conventional, fp64(), fp64());
        let ident = AffineParams::identity(1);
        let scaled = AffineParams { gamma: vec![gamma], beta: vec![beta] };
        let (y0, _) = bn_forward(&t, &ident, &cfg).unwrap();
        let (y1, _) = bn_forward(&t, &scaled, &cfg).unwrap();
        for (a, b) in y0.data.iter().zip(y1.data.iter()) {
            prop_assert!((gamma * a + beta - b).abs() < 1e-12);
        }
    }

    #[test]
    fn rn_shift_invariance(
        vals in prop::collection::vec(-5.0f64..5.0, 32),
        shift in -8.0f64..8.0,
    ) {
        // range statistics see only deviations: adding a constant moves μ and
        // leaves the normalized output (nearly) unchanged at FP64
        let t1 = Tensor::new(vec![32, 1], vals.clone()).unwrap();
        let t2 = Tensor::new(vec![32, 1], vals.iter().map(|v| v + shift).collect()).unwrap();
        let cfg = NormConfig::new(Variant::Range, fp64(), fp64());
        let p = AffineParams::identity(1);
        let (y1, _) = rn_forward(&t1, &p, &cfg).unwrap();
        let (y2, _) = rn_forward(&t2, &p, &cfg).unwrap();
        for (a, b) in y1.data.iter().zip(y2.data.iter()) {
            prop_assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }
}

#[test]
fn env_div_and_sqrt_policies_hold_for_all_catalog_formats() {
    for fmt in catalog() {
        let env = FpEnv::new(fmt.clone());
        assert_eq!(env.div(0.0, 0.0), 0.0, "{}", fmt.name);
        assert_eq!(env.div(1.0, 0.0), fmt.max_value(), "{}", fmt.name);
        assert_eq!(env.div(-1.0, 0.0), -fmt.max_value(), "{}", fmt.name);
        assert_eq!(env.sqrt(-4.0), 0.0, "{}", fmt.name);
    }
}
