use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::*;
use crate::error::Error;
use crate::harness::{eval, eval_bool, run_local, Backend};
use crate::ring::{decode_fixed, encode_fixed, FixedCodec, RingElem};
use crate::runtime::Party;
use crate::tensor::{share_fixed, share_tensor, SharedTensor};

const SIM: Backend = Backend::Simulated;

fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

fn ring_input(vals: &[u64], r: &mut ChaCha20Rng) -> [SharedTensor; 3] {
    let v: Vec<RingElem> = vals.iter().map(|&x| RingElem(x)).collect();
    share_tensor(&v, vec![v.len()], r).unwrap()
}

fn fixed_input(vals: &[f64], r: &mut ChaCha20Rng) -> [SharedTensor; 3] {
    share_fixed(vals, vec![vals.len()], r).unwrap()
}

fn decode_all(v: &[RingElem]) -> Vec<f64> {
    v.iter().map(|&r| decode_fixed(r)).collect()
}

#[test]
fn mul_small_integers_and_zero() {
    let mut r = rng(1);
    let x = ring_input(&[3, 123456789], &mut r);
    let y = ring_input(&[4, 0], &mut r);
    let (z, stats) = eval(SIM, 1, &[x, y], |p, t| mul(p, t[0], t[1])).unwrap();
    assert_eq!(z, vec![RingElem(12), RingElem(0)]);
    assert_eq!(stats.bytes_per_party(), [16, 16, 16]);
    assert_eq!(stats.rounds(), 1);
}

#[test]
fn mul_matches_wrapping_product() {
    let mut r = rng(2);
    let a: Vec<u64> = (0..2000).map(|_| r.random()).collect();
    let b: Vec<u64> = (0..2000).map(|_| r.random()).collect();
    let inputs = [ring_input(&a, &mut r), ring_input(&b, &mut r)];
    let (z, _) = eval(SIM, 2, &inputs, |p, t| mul(p, t[0], t[1])).unwrap();
    for i in 0..a.len() {
        assert_eq!(z[i].0, a[i].wrapping_mul(b[i]));
    }
}

#[test]
fn trunc_of_product_recovers_six() {
    let mut r = rng(3);
    let x = fixed_input(&[2.0, 0.0], &mut r);
    let y = fixed_input(&[3.0, 0.0], &mut r);
    let (z, stats) = eval(SIM, 3, &[x, y], |p, t| mul_fixed(p, t[0], t[1])).unwrap();
    assert!((decode_fixed(z[0]) - 6.0).abs() <= 2f64.powi(-18));
    assert!(decode_fixed(z[1]).abs() <= 2f64.powi(-18));
    // One reshare for the product, then party 0 alone sends for the truncation.
    assert_eq!(stats.bytes_per_party(), [32, 16, 16]);
    assert_eq!(stats.rounds(), 2);
}

#[test]
fn trunc_error_is_at_most_one_unit() {
    let mut r = rng(4);
    let n = 10_000;
    let vals: Vec<i64> = (0..n).map(|_| r.random_range(-(1i64 << 40)..(1i64 << 40))).collect();
    let raw: Vec<u64> = vals.iter().map(|&v| v as u64).collect();
    let x = ring_input(&raw, &mut r);
    let (z, _) = eval(SIM, 4, &[x], |p, t| trunc(p, t[0], 18)).unwrap();
    for (v, z) in vals.iter().zip(&z) {
        let d = z.as_signed() - v.div_euclid(1 << 18);
        assert!((0..=1).contains(&d), "{v} -> {}", z.as_signed());
    }
}

#[test]
fn mul_fixed_by_one_is_identity() {
    let mut r = rng(5);
    let vals: Vec<f64> = (0..500).map(|_| r.random_range(-1000.0..1000.0)).collect();
    let ones = vec![1.0; vals.len()];
    let inputs = [fixed_input(&vals, &mut r), fixed_input(&ones, &mut r)];
    let (z, _) = eval(SIM, 5, &inputs, |p, t| mul_fixed(p, t[0], t[1])).unwrap();
    for (v, z) in vals.iter().zip(decode_all(&z)) {
        assert!((v - z).abs() <= 2f64.powi(-17));
    }
}

#[test]
fn square_agrees_with_mul_fixed() {
    let mut r = rng(6);
    let mut vals: Vec<f64> = (0..10_000).map(|_| r.random_range(-500.0..500.0)).collect();
    vals[0] = 3.0;
    vals[1] = 0.0;
    let x = fixed_input(&vals, &mut r);
    let (sq, stats) = eval(SIM, 6, std::slice::from_ref(&x), |p, t| square(p, t[0])).unwrap();
    let (mf, _) = eval(SIM, 6, &[x.clone(), x], |p, t| mul_fixed(p, t[0], t[1])).unwrap();
    let (sq, mf) = (decode_all(&sq), decode_all(&mf));
    assert!((sq[0] - 9.0).abs() <= 2f64.powi(-17));
    assert_eq!(sq[1], 0.0);
    for i in 0..vals.len() {
        assert!((sq[i] - mf[i]).abs() <= 2f64.powi(-17));
    }
    assert_eq!(stats.rounds(), 2);
}

#[test]
fn a2b_gives_binary_expansion() {
    let mut r = rng(7);
    let mut vals: Vec<u64> = (0..3000).map(|_| r.random()).collect();
    vals[0] = 5;
    vals[1] = 1 << 63;
    vals[2] = 0;
    vals[3] = u64::MAX;
    let x = ring_input(&vals, &mut r);
    let (bits, stats) = eval_bool(SIM, 7, &[x], |p, t| a2b(p, t[0])).unwrap();
    assert_eq!(bits[0] & 0b111, 0b101);
    assert_eq!(bits[1], 1 << 63);
    assert_eq!(bits, vals);
    assert_eq!(stats.rounds(), 8);
}

#[test]
fn lt_examples() {
    let mut r = rng(8);
    let x = fixed_input(&[3.0, 5.0, -4.1, -4.0], &mut r);
    let y = fixed_input(&[5.0, 5.0, -4.0, -4.1], &mut r);
    let (b, _) = eval_bool(SIM, 8, &[x, y], |p, t| lt(p, t[0], t[1])).unwrap();
    assert_eq!(b, vec![1, 0, 1, 0]);
}

#[test]
fn lt_with_public_operands() {
    let mut r = rng(9);
    let x = fixed_input(&[-5.0, -3.0, 2.0, 4.0], &mut r);
    let four = encode_fixed(-4.0).unwrap();
    let three = encode_fixed(3.0).unwrap();
    let (b, _) = eval_bool(SIM, 9, std::slice::from_ref(&x), |p, t| lt(p, t[0], four)).unwrap();
    assert_eq!(b, vec![1, 0, 0, 0]);
    let (b, _) = eval_bool(SIM, 9, &[x], |p, t| lt(p, three, t[0])).unwrap();
    assert_eq!(b, vec![0, 0, 0, 1]);
}

#[test]
fn lt_eq_trichotomy() {
    let mut r = rng(10);
    let n = 2000;
    let a: Vec<f64> = (0..n).map(|_| r.random_range(-50.0..50.0)).collect();
    let b: Vec<f64> = (0..n)
        .map(|i| if i % 5 == 0 { a[i] } else { r.random_range(-50.0..50.0) })
        .collect();
    let inputs = [fixed_input(&a, &mut r), fixed_input(&b, &mut r)];
    let (xy, _) = eval_bool(SIM, 10, &inputs, |p, t| lt(p, t[0], t[1])).unwrap();
    let (yx, _) = eval_bool(SIM, 11, &inputs, |p, t| lt(p, t[1], t[0])).unwrap();
    let (e, stats) = eval_bool(SIM, 12, &inputs, |p, t| eq(p, t[0], t[1])).unwrap();
    let codec = FixedCodec::default();
    for i in 0..n {
        assert_eq!(xy[i] + yx[i] + e[i], 1);
        let (ea, eb) = (codec.encode(a[i]).unwrap(), codec.encode(b[i]).unwrap());
        assert_eq!(e[i] == 1, ea == eb);
        assert_eq!(xy[i] == 1, ea.as_signed() < eb.as_signed());
    }
    assert_eq!(stats.rounds(), 14);
}

#[test]
fn eq_examples() {
    let mut r = rng(13);
    let x = ring_input(&[7, 7, 0, u64::MAX], &mut r);
    let y = ring_input(&[7, 8, 1 << 63, u64::MAX], &mut r);
    let (b, _) = eval_bool(SIM, 13, &[x, y], |p, t| eq(p, t[0], t[1])).unwrap();
    assert_eq!(b, vec![1, 0, 0, 1]);
}

fn bit_input(bits: &[u64], r: &mut ChaCha20Rng) -> [SharedTensor; 3] {
    ring_input(bits, r)
}

/// Shared bits derived from ring sharings of 0/1 through `lt(0, b)`.
fn as_bool(p: &mut Party, b: &SharedTensor) -> crate::error::Result<crate::tensor::BoolTensor> {
    lt(p, RingElem::ZERO, b)
}

#[test]
fn mul_ba_selects_exactly() {
    let mut r = rng(14);
    let n = 3000;
    let mut bits: Vec<u64> = (0..n).map(|_| r.random_range(0..2)).collect();
    let mut xs: Vec<u64> = (0..n).map(|_| r.random()).collect();
    bits[0] = 0;
    bits[1] = 1;
    xs[1] = encode_fixed(2.5).unwrap().0;
    let inputs = [bit_input(&bits, &mut r), ring_input(&xs, &mut r)];
    let (z, _) = eval(SIM, 14, &inputs, |p, t| {
        let b = as_bool(p, t[0])?;
        mul_ba(p, &b, t[1])
    })
    .unwrap();
    for i in 0..n {
        assert_eq!(z[i].0, bits[i] * xs[i]);
    }
    assert_eq!(z[1], encode_fixed(2.5).unwrap());
}

#[test]
fn mul_ba_costs_three_rounds() {
    let out = run_local(SIM, 15, |p| {
        let b = crate::tensor::BoolTensor::from_vec(vec![Default::default(); 10]);
        let x = SharedTensor::zeros(vec![10]);
        p.measure(|p| mul_ba(p, &b, &x)).map(|(_, s)| s)
    })
    .unwrap();
    for s in out.outputs {
        assert_eq!(s.rounds, 3);
        assert_eq!(s.bytes_sent, 240);
    }
}

#[test]
fn max_examples_and_ties() {
    let mut r = rng(16);
    let x = fixed_input(&[1.0, 5.0, 3.0], &mut r);
    let (m, _) = eval(SIM, 16, &[x], |p, t| max(p, t[0])).unwrap();
    assert_eq!(decode_fixed(m[0]), 5.0);
    let x = fixed_input(&[2.25; 7], &mut r);
    let (m, _) = eval(SIM, 17, &[x], |p, t| max(p, t[0])).unwrap();
    assert_eq!(decode_fixed(m[0]), 2.25);
    let x = fixed_input(&[4.0], &mut r);
    let (m, _) = eval(SIM, 18, &[x], |p, t| max(p, t[0])).unwrap();
    assert_eq!(decode_fixed(m[0]), 4.0);
}

#[test]
fn max_of_empty_is_an_error() {
    let err = run_local(SIM, 19, |p| max(p, &SharedTensor::zeros(vec![0]))).unwrap_err();
    assert!(matches!(err, Error::EmptyInput(_)));
}

#[test]
fn max_rows_is_an_element_and_dominates() {
    let mut r = rng(20);
    for n in [2usize, 3, 17, 64, 255, 256] {
        let rows = 6;
        let vals: Vec<f64> = (0..rows * n).map(|_| r.random_range(-100.0..100.0)).collect();
        let x = share_fixed(&vals, vec![rows, n], &mut r).unwrap();
        let (m, _) = eval(SIM, n as u64, &[x], |p, t| max_rows(p, t[0])).unwrap();
        for row in 0..rows {
            let enc: Vec<i64> = vals[row * n..(row + 1) * n]
                .iter()
                .map(|&v| encode_fixed(v).unwrap().as_signed())
                .collect();
            assert_eq!(m[row].as_signed(), *enc.iter().max().unwrap());
        }
    }
}

#[test]
fn recip_examples() {
    let mut r = rng(21);
    let x = fixed_input(&[2.0, 1.0, 7.3], &mut r);
    let (z, stats) = eval(SIM, 21, &[x], |p, t| recip(p, t[0])).unwrap();
    let z = decode_all(&z);
    let tol = 2f64.powi(-10);
    assert!((z[0] - 0.5).abs() / 0.5 <= tol);
    assert!((z[1] - 1.0).abs() <= tol);
    assert!((z[2] - 1.0 / 7.3).abs() * 7.3 <= tol);
    assert_eq!(stats.rounds(), 30);
}

#[test]
fn recip_relative_error_across_domain() {
    let mut r = rng(22);
    let codec = FixedCodec::default();
    let vals: Vec<f64> = (0..2000)
        .map(|_| codec.decode(codec.encode(2f64.powf(r.random_range(-9.0..18.0))).unwrap()))
        .collect();
    let x = fixed_input(&vals, &mut r);
    let (z, _) = eval(SIM, 22, &[x], |p, t| recip(p, t[0])).unwrap();
    for (v, z) in vals.iter().zip(decode_all(&z)) {
        let want = 1.0 / v;
        // Outputs below a few ulp are limited by the output grid.
        let err = (z - want).abs();
        assert!(
            err / want <= 2f64.powi(-10) || err <= 2f64.powi(-18),
            "1/{v}: {z} vs {want}"
        );
    }
}

#[test]
fn rsqrt_examples() {
    let mut r = rng(23);
    let x = fixed_input(&[4.0, 1.0, 10.0], &mut r);
    let (z, stats) = eval(SIM, 23, &[x], |p, t| rsqrt(p, t[0])).unwrap();
    let z = decode_all(&z);
    let tol = 2f64.powi(-9);
    assert!((z[0] - 0.5).abs() / 0.5 <= tol);
    assert!((z[1] - 1.0).abs() <= tol);
    assert!((z[2] - 10f64.powf(-0.5)).abs() / 10f64.powf(-0.5) <= tol);
    assert_eq!(stats.rounds(), 33);
}

#[test]
fn rsqrt_relative_error_across_domain() {
    let mut r = rng(24);
    let codec = FixedCodec::default();
    let vals: Vec<f64> = (0..2000)
        .map(|_| codec.decode(codec.encode(2f64.powf(r.random_range(-10.0..14.0))).unwrap()))
        .collect();
    let x = fixed_input(&vals, &mut r);
    let (z, _) = eval(SIM, 24, &[x], |p, t| rsqrt(p, t[0])).unwrap();
    for (v, z) in vals.iter().zip(decode_all(&z)) {
        let want = v.powf(-0.5);
        assert!((z - want).abs() / want <= 2f64.powi(-9), "{v}: {z} vs {want}");
    }
}

#[test]
fn rsqrt_large_inputs_within_output_grid() {
    let mut r = rng(25);
    let vals: Vec<f64> = (0..200).map(|_| 2f64.powf(r.random_range(14.0..19.99))).collect();
    let x = fixed_input(&vals, &mut r);
    let (z, _) = eval(SIM, 25, &[x], |p, t| rsqrt(p, t[0])).unwrap();
    for (v, z) in vals.iter().zip(decode_all(&z)) {
        assert!((z - v.powf(-0.5)).abs() <= 4.0 * 2f64.powi(-18));
    }
}

#[test]
fn neg_exp_examples() {
    let mut r = rng(26);
    let x = fixed_input(&[-15.0, 0.0, -1.0, -100.0], &mut r);
    let (z, _) = eval(SIM, 26, &[x], |p, t| neg_exp(p, t[0])).unwrap();
    assert_eq!(z[0], RingElem::ZERO);
    assert_eq!(z[3], RingElem::ZERO);
    let z = decode_all(&z);
    assert!((z[1] - 1.0).abs() <= 2f64.powi(-12));
    assert!((z[2] - (1.0 - 1.0 / 32.0f64).powi(32)).abs() <= 2f64.powi(-10));
}

#[test]
fn neg_exp_is_monotone_on_grid() {
    let mut r = rng(27);
    let step = 2f64.powi(-8);
    let vals: Vec<f64> = (0..(14.0 / step) as usize).map(|i| -14.0 + i as f64 * step).collect();
    let x = fixed_input(&vals, &mut r);
    let (z, _) = eval(SIM, 27, &[x], |p, t| neg_exp(p, t[0])).unwrap();
    let z = decode_all(&z);
    for w in z.windows(2) {
        assert!(w[0] <= w[1] + 2f64.powi(-15));
    }
}

#[test]
fn communication_depends_only_on_shape() {
    let mut r = rng(28);
    let a = fixed_input(&[1.0, 2.0, 3.0, 4.0], &mut r);
    let b = fixed_input(&[-7.0, 0.0, 1e5, 0.5], &mut r);
    let (_, s1) = eval(SIM, 28, &[a], |p, t| recip(p, t[0])).unwrap();
    let (_, s2) = eval(SIM, 29, &[b], |p, t| recip(p, t[0])).unwrap();
    assert_eq!(s1.parties, s2.parties);
}

#[test]
fn open_and_consistency_check() {
    let mut r = rng(30);
    let x = ring_input(&[11, 22, 33], &mut r);
    let out = run_local(SIM, 30, |p| {
        let mine = &x[p.id().index()];
        check_consistency(p, mine)?;
        open(p, mine)
    })
    .unwrap();
    for o in &out.outputs {
        assert_eq!(o, &vec![RingElem(11), RingElem(22), RingElem(33)]);
    }

    let mut bad = x.clone();
    bad[1].data_mut()[2].hi += RingElem(1);
    let err = run_local(SIM, 31, |p| check_consistency(p, &bad[p.id().index()])).unwrap_err();
    // Party 1's hi is component 2, held by party 2 as lo.
    assert!(matches!(err, Error::ShareConsistency { component: 2 }));
}

#[test]
fn trunc_of_unmasked_public_values_is_exact() {
    // Public constants have a zero third component, so nothing randomises the
    // split; negative values must still shift correctly.
    let vals: Vec<i64> = vec![-1, -2, -31, -32, -33, 0, 1, 31, 32, -(1 << 40) - 5, (1 << 40) + 5];
    let ring: Vec<RingElem> = vals.iter().map(|&v| RingElem::from_signed(v)).collect();
    let out = run_local(SIM, 9, |p| {
        let x = SharedTensor::from_public(p.id(), vec![ring.len()], &ring)?;
        trunc(p, &x, 5)
    })
    .unwrap();
    let got = crate::tensor::reconstruct_tensor(&out.outputs).unwrap();
    let want: Vec<RingElem> = vals.iter().map(|&v| RingElem::from_signed(v >> 5)).collect();
    assert_eq!(got, want);
}
