//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use trinfer_core::cost;
use trinfer_core::harness::{eval, eval_bool, run_local, secure_logits, Backend};
use trinfer_core::nonlinear::{secure_embedding, secure_gelu, secure_layernorm, secure_softmax, LayerNormMode};
use trinfer_core::oracle::{
    approx_error_stats, argmax, forward_ref, gelu_exact, gelu_piecewise, layernorm_ref, softmax_clipped_ref,
    softmax_ref, OracleMode,
};
use trinfer_core::primitives::{eq, lt, max_rows, mul, mul_ba, open, trunc};
use trinfer_core::ring::{decode_fixed, encode_fixed, RingElem};
use trinfer_core::runtime::CommStats;
use trinfer_core::tensor::{share_bool_tensor, share_fixed, share_tensor, SharedTensor};
use trinfer_core::transformer::{ForwardOptions, ModelConfig, ModelWeights};

const SIM: Backend = Backend::Simulated;
const TCP: Backend = Backend::TcpLocal;
const ULP: f64 = 1.0 / (1u64 << 18) as f64;

fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

fn quantize(v: f64) -> f64 {
    decode_fixed(encode_fixed(v).unwrap())
}

fn decoded(v: &[RingElem]) -> Vec<f64> {
    v.iter().map(|&r| decode_fixed(r)).collect()
}

fn max_abs(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn ring_shares(vals: &[RingElem], r: &mut ChaCha20Rng) -> [SharedTensor; 3] {
    share_tensor(vals, vec![vals.len()], r).unwrap()
}

struct Report {
    failed: Vec<u32>,
}

impl Report {
    fn line(&mut self, n: u32, name: &str, ok: bool, detail: String, elapsed: Duration) {
        let verdict = if ok { "PASS" } else { "FAIL" };
        println!(
            "criterion {n} [{name}]: {verdict} ({detail}; {:.1}s)",
            elapsed.as_secs_f64()
        );
        if !ok {
            self.failed.push(n);
        }
    }
}

// Criterion 1

fn gelu_fidelity() -> (bool, String) {
    let s = approx_error_stats("gelu_piecewise", gelu_exact, gelu_piecewise, (-4.0, 3.0), 1_000_000);
    let ok = s.max_err < 0.01403 && s.mean_err < 0.00168 && s.median_err < 4.41e-5;
    (
        ok,
        format!(
            "max {:.6} mean {:.6} median {:.3e}",
            s.max_err, s.mean_err, s.median_err
        ),
    )
}

// Criterion 2

struct GeluRun {
    x: Vec<f64>,
    y: Vec<RingElem>,
    stats: CommStats,
}

fn gelu_run(backend: Backend) -> GeluRun {
    let mut r = rng(2);
    let x: Vec<f64> = (0..100_000).map(|_| r.random_range(-6.0..5.0)).collect();
    let shares = share_fixed(&x, vec![x.len()], &mut r).unwrap();
    let (y, stats) = eval(backend, 2, &[shares], |p, t| secure_gelu(p, t[0])).unwrap();
    GeluRun { x, y, stats }
}

fn gelu_check(run: &GeluRun) -> (bool, String) {
    let xq: Vec<f64> = run.x.iter().map(|&v| quantize(v)).collect();
    let y = decoded(&run.y);
    let pw: Vec<f64> = xq.iter().map(|&v| gelu_piecewise(v)).collect();
    let ex: Vec<f64> = run.x.iter().map(|&v| gelu_exact(v)).collect();
    let (e_pw, e_ex) = (max_abs(&y, &pw), max_abs(&y, &ex));
    let ok = e_pw <= 2f64.powi(-10) && e_ex <= 0.0145;
    (
        ok,
        format!("vs piecewise {e_pw:.3e} (<= 2^-10), vs exact {e_ex:.5} (<= 0.0145)"),
    )
}

// Criterion 3

struct SoftmaxRun {
    rows: Vec<Vec<f64>>,
    n: usize,
    y: Vec<RingElem>,
    stats: CommStats,
}

fn softmax_runs(backend: Backend) -> Vec<SoftmaxRun> {
    [4usize, 64, 128]
        .into_iter()
        .enumerate()
        .map(|(i, n)| {
            let mut r = rng(30 + i as u64);
            let rows: Vec<Vec<f64>> = (0..1000)
                .map(|_| (0..n).map(|_| r.random_range(-10.0..10.0)).collect())
                .collect();
            let flat: Vec<f64> = rows.concat();
            let shares = share_fixed(&flat, vec![1000, n], &mut r).unwrap();
            let (y, stats) = eval(backend, 3, &[shares], |p, t| secure_softmax(p, t[0])).unwrap();
            SoftmaxRun { rows, n, y, stats }
        })
        .collect()
}

fn softmax_check(runs: &[SoftmaxRun]) -> (bool, String) {
    let mut ok = true;
    let mut parts = Vec::new();
    for run in runs {
        let y = decoded(&run.y);
        let in_range = y.iter().all(|&v| (0.0..=1.0).contains(&v));
        let (mut sum_err, mut clip_err, mut true_err) = (0.0f64, 0.0f64, 0.0f64);
        for (row, out) in run.rows.iter().zip(y.chunks(run.n)) {
            let q: Vec<f64> = row.iter().map(|&v| quantize(v)).collect();
            sum_err = sum_err.max((out.iter().sum::<f64>() - 1.0).abs());
            clip_err = clip_err.max(max_abs(out, &softmax_clipped_ref(&q, ULP, 5, -14.0)));
            true_err = true_err.max(max_abs(out, &softmax_ref(row)));
        }
        let row_ok = in_range && sum_err <= 2f64.powi(-9) && clip_err <= 2f64.powi(-10) && true_err <= 2f64.powi(-7);
        ok &= row_ok;
        parts.push(format!(
            "n={}: range {} sum {sum_err:.2e} clipped {clip_err:.2e} true {true_err:.4}",
            run.n,
            if in_range { "ok" } else { "BAD" }
        ));
    }
    (ok, format!("{}; limits 2^-9 / 2^-10 / 2^-7", parts.join(", ")))
}

// Criterion 4

fn layernorm_check() -> (bool, String) {
    let mut r = rng(4);
    let n = 64;
    let x: Vec<f64> = (0..1000 * n).map(|_| r.random_range(-4.0..4.0)).collect();
    let g: Vec<f64> = (0..n).map(|_| r.random_range(0.5..1.5)).collect();
    let b: Vec<f64> = (0..n).map(|_| r.random_range(-0.5..0.5)).collect();
    let inputs = [
        share_fixed(&x, vec![1000, n], &mut r).unwrap(),
        share_fixed(&g, vec![n], &mut r).unwrap(),
        share_fixed(&b, vec![n], &mut r).unwrap(),
    ];
    let (y, _) = eval(SIM, 4, &inputs, |p, t| {
        secure_layernorm(p, t[0], t[1], t[2], LayerNormMode::Standard)
    })
    .unwrap();
    let y = decoded(&y);
    let gq: Vec<f64> = g.iter().map(|&v| quantize(v)).collect();
    let bq: Vec<f64> = b.iter().map(|&v| quantize(v)).collect();
    let mut err = 0.0f64;
    for (row, out) in x.chunks(n).zip(y.chunks(n)) {
        let q: Vec<f64> = row.iter().map(|&v| quantize(v)).collect();
        err = err.max(max_abs(
            out,
            &layernorm_ref(&q, &gq, &bq, LayerNormMode::Standard, 1e-5),
        ));
    }
    (err <= 2f64.powi(-8), format!("max abs {err:.3e} (<= 2^-8)"))
}

// Criterion 5

const CASES: usize = 100_000;

fn exact_primitives() -> (bool, String) {
    let mut r = rng(5);
    let mut bad = Vec::new();

    // mul: wrapping ring products.
    let a: Vec<RingElem> = (0..CASES).map(|_| RingElem(r.random())).collect();
    let b: Vec<RingElem> = (0..CASES).map(|_| RingElem(r.random())).collect();
    let inputs = [ring_shares(&a, &mut r), ring_shares(&b, &mut r)];
    let (z, _) = eval(SIM, 51, &inputs, |p, t| mul(p, t[0], t[1])).unwrap();
    let mul_bad = z
        .iter()
        .zip(a.iter().zip(&b))
        .filter(|(z, (a, b))| **z != **a * **b)
        .count();

    // mul_ba: bit times ring element.
    let bits: Vec<u64> = (0..CASES).map(|_| r.random_range(0..2)).collect();
    let bit_shares = share_bool_tensor(&bits, &mut r);
    let out = run_local(SIM, 52, |p| {
        mul_ba(p, &bit_shares[p.id().index()], &inputs[0][p.id().index()])
    })
    .unwrap();
    let z = trinfer_core::tensor::reconstruct_tensor(&out.outputs).unwrap();
    let mul_ba_bad = z
        .iter()
        .zip(bits.iter().zip(&a))
        .filter(|(z, (&bit, &a))| **z != if bit == 1 { a } else { RingElem::ZERO })
        .count();

    // lt and eq on values with room for the difference.
    let bound = 1i64 << 62;
    let x: Vec<i64> = (0..CASES).map(|_| r.random_range(-bound..bound)).collect();
    let y: Vec<i64> = x
        .iter()
        .map(|&v| match r.random_range(0..4) {
            0 => v,
            1 => v.saturating_add(1).min(bound - 1),
            _ => r.random_range(-bound..bound),
        })
        .collect();
    let xr: Vec<RingElem> = x.iter().map(|&v| RingElem::from_signed(v)).collect();
    let yr: Vec<RingElem> = y.iter().map(|&v| RingElem::from_signed(v)).collect();
    let inputs = [ring_shares(&xr, &mut r), ring_shares(&yr, &mut r)];
    let (got, _) = eval_bool(SIM, 53, &inputs, |p, t| lt(p, t[0], t[1])).unwrap();
    let lt_bad = got
        .iter()
        .zip(x.iter().zip(&y))
        .filter(|(g, (a, b))| **g != u64::from(a < b))
        .count();
    let (got, _) = eval_bool(SIM, 54, &inputs, |p, t| eq(p, t[0], t[1])).unwrap();
    let eq_bad = got
        .iter()
        .zip(x.iter().zip(&y))
        .filter(|(g, (a, b))| **g != u64::from(a == b))
        .count();

    // max over rows of five, with frequent ties.
    let m = 5;
    let vals: Vec<i64> = (0..CASES * m)
        .map(|i| {
            if i % 3 == 0 {
                r.random_range(-3..3)
            } else {
                r.random_range(-(1i64 << 40)..(1i64 << 40))
            }
        })
        .collect();
    let ring: Vec<RingElem> = vals.iter().map(|&v| RingElem::from_signed(v)).collect();
    let inputs = [share_tensor(&ring, vec![CASES, m], &mut r).unwrap()];
    let (got, _) = eval(SIM, 55, &inputs, |p, t| max_rows(p, t[0])).unwrap();
    let max_bad = got
        .iter()
        .zip(vals.chunks(m))
        .filter(|(g, row)| g.as_signed() != *row.iter().max().unwrap())
        .count();

    // Embedding lookups, in chunks to bound memory.
    let (vocab, d) = (16, 4);
    let table: Vec<RingElem> = (0..vocab * d).map(|_| RingElem(r.random())).collect();
    let mut emb_bad = 0;
    for chunk in 0..10 {
        let ids: Vec<u64> = (0..CASES / 10).map(|_| r.random_range(0..vocab as u64)).collect();
        let id_ring: Vec<RingElem> = ids.iter().map(|&v| RingElem(v)).collect();
        let inputs = [
            ring_shares(&id_ring, &mut r),
            share_tensor(&table, vec![vocab, d], &mut r).unwrap(),
        ];
        let (got, _) = eval(SIM, 560 + chunk, &inputs, |p, t| secure_embedding(p, t[0], t[1])).unwrap();
        emb_bad += ids
            .iter()
            .zip(got.chunks(d))
            .filter(|(&id, row)| *row != &table[id as usize * d..(id as usize + 1) * d])
            .count();
    }

    // trunc: result - floor(x / 2^18) must be 0 or 1.
    let t: Vec<i64> = (0..CASES)
        .map(|_| r.random_range(-(1i64 << 45)..(1i64 << 45)))
        .collect();
    let tr: Vec<RingElem> = t.iter().map(|&v| RingElem::from_signed(v)).collect();
    let inputs = [ring_shares(&tr, &mut r)];
    let (got, _) = eval(SIM, 57, &inputs, |p, t| trunc(p, t[0], 18)).unwrap();
    let mut over_one = 0;
    let mut wraps = 0;
    for (g, &v) in got.iter().zip(&t) {
        let diff = g.as_signed().wrapping_sub(v >> 18);
        if !(0..=1).contains(&diff) {
            if diff.unsigned_abs() > 1 << 20 {
                wraps += 1;
            } else {
                over_one += 1;
            }
        }
    }

    for (name, n) in [
        ("mul", mul_bad),
        ("mul_ba", mul_ba_bad),
        ("lt", lt_bad),
        ("eq", eq_bad),
        ("max", max_bad),
        ("embedding", emb_bad),
        ("trunc>1ulp", over_one),
        ("trunc wrap", wraps),
    ] {
        if n > 0 {
            bad.push(format!("{name}: {n} mismatches"));
        }
    }
    let ok = bad.is_empty();
    let detail = if ok {
        format!("{CASES} cases each for mul, mul_ba, lt, eq, max, embedding, trunc; no mismatches")
    } else {
        bad.join(", ")
    };
    (ok, detail)
}

// Criterion 6

const SEEDS: u64 = 100;
const SEQ: usize = 8;

struct ForwardRun {
    logits: Vec<Vec<f64>>,
    stats: Vec<CommStats>,
}

fn forward_case(seed: u64) -> (ModelWeights, Vec<usize>) {
    let cfg = ModelConfig::tiny();
    let w = ModelWeights::random(&cfg, 1000 + seed).unwrap();
    let mut r = rng(2000 + seed);
    let toks = (0..SEQ).map(|_| r.random_range(0..cfg.vocab_size)).collect();
    (w, toks)
}

fn forward_runs(backend: Backend, seeds: u64) -> ForwardRun {
    let cfg = ModelConfig::tiny();
    let mut logits = Vec::new();
    let mut stats = Vec::new();
    for seed in 0..seeds {
        let (w, toks) = forward_case(seed);
        let (y, st) = secure_logits(backend, seed, 3000 + seed, &w, &cfg, &toks, ForwardOptions::default()).unwrap();
        logits.push(y);
        stats.push(st);
    }
    ForwardRun { logits, stats }
}

fn forward_check(run: &ForwardRun) -> (bool, String) {
    let cfg = ModelConfig::tiny();
    let v = cfg.vocab_size;
    let (mut err_m, mut err_e) = (0.0f64, 0.0f64);
    let (mut agree_m, mut agree_e) = (0, 0);
    for (seed, y) in run.logits.iter().enumerate() {
        let (w, toks) = forward_case(seed as u64);
        let mirrored = forward_ref(&w, &cfg, &toks, OracleMode::Mirrored).unwrap();
        let exact = forward_ref(&w, &cfg, &toks, OracleMode::Exact).unwrap();
        err_m = err_m.max(max_abs(y, &mirrored));
        err_e = err_e.max(max_abs(y, &exact));
        let last = |l: &[f64]| argmax(&l[(SEQ - 1) * v..]);
        agree_m += usize::from(last(y) == last(&mirrored));
        agree_e += usize::from(last(y) == last(&exact));
    }
    let ok = err_m <= 1e-2 && agree_m >= 95;
    (
        ok,
        format!(
            "max abs {err_m:.3e} (<= 1e-2), next token {agree_m}/{SEEDS}; exact-math model: {err_e:.3e}, {agree_e}/{SEEDS}"
        ),
    )
}

// Criterion 7

fn accounting_check() -> (bool, String) {
    let mut r = rng(7);
    let mut ok = true;
    let mut notes = Vec::new();
    for n in [1usize, 17, 1000] {
        let a: Vec<RingElem> = (0..n).map(|_| RingElem(r.random())).collect();
        let inputs = [ring_shares(&a, &mut r), ring_shares(&a, &mut r)];
        let (_, st) = eval(SIM, 7, &inputs, |p, t| mul(p, t[0], t[1])).unwrap();
        ok &= st.bytes_per_party() == [8 * n as u64; 3] && st.rounds() == 1;
        let out = run_local(SIM, 7, |p| open(p, &inputs[0][p.id().index()])).unwrap();
        ok &= out.stats.bytes_per_party() == [8 * n as u64; 3] && out.stats.rounds() == 1;
    }
    notes.push(format!("mul/open 8n bytes, 1 round: {}", if ok { "yes" } else { "no" }));
    let cfg = ModelConfig::tiny();
    let (w, toks) = forward_case(0);
    let (_, st) = secure_logits(SIM, 0, 3000, &w, &cfg, &toks, ForwardOptions::default()).unwrap();
    let want = cost::forward(SEQ, &cfg, false);
    let fwd_ok = want.matches(&st);
    ok &= fwd_ok;
    notes.push(format!(
        "forward measured {:?} B / {} rounds, model {:?} B / {} rounds",
        st.bytes_per_party(),
        st.rounds(),
        want.bytes,
        want.rounds
    ));
    (ok, notes.join("; "))
}

// Criterion 8

fn transport_check(gelu_sim: &GeluRun, softmax_sim: &[SoftmaxRun], fwd_sim: &ForwardRun) -> (bool, String) {
    let gelu_tcp = gelu_run(TCP);
    let g_ok = gelu_tcp.y == gelu_sim.y && gelu_tcp.stats == gelu_sim.stats;
    let softmax_tcp = softmax_runs(TCP);
    let s_ok = softmax_tcp
        .iter()
        .zip(softmax_sim)
        .all(|(a, b)| a.y == b.y && a.stats == b.stats);
    let fwd_tcp = forward_runs(TCP, SEEDS);
    let f_ok = fwd_tcp.logits == fwd_sim.logits && fwd_tcp.stats == fwd_sim.stats;
    let yn = |b: bool| if b { "identical" } else { "DIFFERENT" };
    (
        g_ok && s_ok && f_ok,
        format!("gelu {}, softmax {}, forward x{SEEDS} {}", yn(g_ok), yn(s_ok), yn(f_ok)),
    )
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let v = f();
    (v, t.elapsed())
}

fn main() {
    // Under `cargo test -- --list` and similar, do nothing.
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let mut rep = Report { failed: Vec::new() };

    let ((ok, d), t) = timed(gelu_fidelity);
    let within = t < Duration::from_secs(10);
    rep.line(1, "GeLU polynomial fidelity", ok && within, d, t);

    let (gelu_sim, t) = timed(|| gelu_run(SIM));
    let (ok, d) = gelu_check(&gelu_sim);
    let within = t < Duration::from_secs(120);
    rep.line(2, "secure GeLU", ok && within, d, t);

    let (softmax_sim, t) = timed(|| softmax_runs(SIM));
    let (ok, d) = softmax_check(&softmax_sim);
    rep.line(3, "secure softmax", ok, d, t);

    let ((ok, d), t) = timed(layernorm_check);
    rep.line(4, "secure LayerNorm", ok, d, t);

    let ((ok, d), t) = timed(exact_primitives);
    rep.line(5, "primitive exactness", ok, d, t);

    let (fwd_sim, t) = timed(|| forward_runs(SIM, SEEDS));
    let (ok, d) = forward_check(&fwd_sim);
    rep.line(6, "tiny transformer parity", ok, d, t);

    let ((ok, d), t) = timed(accounting_check);
    rep.line(7, "communication accounting", ok, d, t);

    let ((ok, d), t) = timed(|| transport_check(&gelu_sim, &softmax_sim, &fwd_sim));
    rep.line(8, "transport equivalence", ok, d, t);

    if rep.failed.is_empty() {
        println!("acceptance: all criteria passed");
    } else {
        println!("acceptance: failed criteria {:?}", rep.failed);
        std::process::exit(1);
    }
}
