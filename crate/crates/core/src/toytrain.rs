//! Desk-scale trainer: a small MLP with normalization layers and manual
//! backprop, used to surface group-size sensitivity and forward/backward
//! format-pairing sensitivity end to end.
//!
//! Everything outside the norm layers runs in f64 (master weights included),
//! so any degradation is attributable to the normalization configuration.
//! Training is single-threaded with fixed accumulation orders: identical
//! (seed, config) gives bit-identical traces.
//!
//! The bundled `gaussian-clusters` task is deliberately scale-heterogeneous:
//! 96% of the mass sits in four tight clusters on a small inner ring (classes
//! 0/1 on antipodal pairs) and 4% in four wide clusters on a ring 32× larger
//! (classes 2/3). Features mixing the two scales are exactly what block
//! floating point is sensitive to — a rare large magnitude in a group drags
//! the shared exponent up and crushes the small-scale signal, with
//! probability growing in the group size.

use crate::bfp::{pack_tensor, unpack_tensor};
use crate::minifloat::{fp64, FpEnv, MinifloatError};
use crate::norm::{
    bn_backward, bn_forward, lightnorm_backward, lightnorm_forward, rn_backward, rn_forward,
    AffineParams, NormCache, NormConfig, NormError, Variant,
};
use crate::tensor::Tensor;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub const LR: f64 = 0.05;
pub const BATCH: usize = 128;
pub const HIDDEN: usize = 32;

#[derive(Debug)]
pub enum ToyError {
    UnknownKind(String),
    TooSmall(usize),
    Norm(NormError),
    Minifloat(MinifloatError),
}

impl std::fmt::Display for ToyError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ToyError::UnknownKind(k) => write!(f, "unknown dataset kind: {k}"),
            ToyError::TooSmall(n) => write!(f, "dataset needs n >= 100, got {n}"),
            ToyError::Norm(e) => write!(f, "{e}"),
            ToyError::Minifloat(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for ToyError {}

impl From<NormError> for ToyError {
    fn from(e: NormError) -> Self {
        ToyError::Norm(e)
    }
}

impl From<MinifloatError> for ToyError {
    fn from(e: MinifloatError) -> Self {
        ToyError::Minifloat(e)
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub kind: String,
    pub classes: usize,
    pub train_x: Tensor,
    pub train_y: Vec<usize>,
    pub test_x: Tensor,
    pub test_y: Vec<usize>,
}

/// Reproducible labeled 2-D dataset with an 80/20 split.
///
/// * `gaussian-clusters` — the two-scale, 4-class task described above
///   (inner ring r=0.10 spread 0.02, outer ring r=3.2 spread 0.4, 4% outer).
/// * `two-spirals` — two interleaved spirals, 2 classes, not linearly
///   separable.
pub fn make_dataset(kind: &str, n: usize, seed: u64) -> Result<Dataset, ToyError> {
    if n < 100 {
        return Err(ToyError::TooSmall(n));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut xs, mut ys, classes) = (Vec::with_capacity(2 * n), Vec::with_capacity(n), 0usize);
    let classes = match kind {
        "gaussian-clusters" => {
            let _ = classes;
            let (r_in, s_in, r_out, s_out, frac_out) = (0.10, 0.02, 3.2, 0.4, 0.04);
            let quarter = std::f64::consts::FRAC_PI_2;
            for _ in 0..n {
                let outer = rng.gen::<f64>() < frac_out;
                let c = rng.gen_range(0..4usize);
                let (r, s, base, label) = if outer {
                    (r_out, s_out, quarter / 2.0, 2 + c % 2)
                } else {
                    (r_in, s_in, 0.0, c % 2)
                };
                let a = base + quarter * c as f64;
                let n1: f64 = StandardNormal.sample(&mut rng);
                let n2: f64 = StandardNormal.sample(&mut rng);
                xs.push(r * a.cos() + s * n1);
                xs.push(r * a.sin() + s * n2);
                ys.push(label);
            }
            4
        }
        "two-spirals" => {
            for i in 0..n {
                let cls = i % 2;
                let u = rng.gen::<f64>();
                let r = 0.3 + 2.7 * u;
                let a = 4.0 * std::f64::consts::PI * u + std::f64::consts::PI * cls as f64;
                let n1: f64 = StandardNormal.sample(&mut rng);
                let n2: f64 = StandardNormal.sample(&mut rng);
                xs.push(r * a.cos() + 0.05 * n1);
                xs.push(r * a.sin() + 0.05 * n2);
                ys.push(cls);
            }
            2
        }
        other => return Err(ToyError::UnknownKind(other.to_string())),
    };
    let n_train = n * 4 / 5;
    let (train_x, test_x) = xs.split_at(2 * n_train);
    let (train_y, test_y) = ys.split_at(n_train);
    Ok(Dataset {
        kind: kind.to_string(),
        classes,
        train_x: Tensor::new(vec![n_train, 2], train_x.to_vec()).expect("split shape"),
        train_y: train_y.to_vec(),
        test_x: Tensor::new(vec![n - n_train, 2], test_x.to_vec()).expect("split shape"),
        test_y: test_y.to_vec(),
    })
}

/// One-vs-rest least-squares linear classifier accuracy (the baseline bar).
pub fn linear_baseline(ds: &Dataset) -> f64 {
    let n = ds.train_y.len();
    // design matrix [x0 x1 1], normal equations (3x3, multiple RHS)
    let feat = |x: &Tensor, i: usize| [x.data[2 * i], x.data[2 * i + 1], 1.0];
    let mut ata = [[0.0f64; 3]; 3];
    let mut atb = vec![[0.0f64; 3]; ds.classes];
    for i in 0..n {
        let f = feat(&ds.train_x, i);
        for r in 0..3 {
            for c in 0..3 {
                ata[r][c] += f[r] * f[c];
            }
            atb[ds.train_y[i]][r] += f[r];
        }
    }
    // Gaussian elimination with partial pivoting on the shared 3x3 system
    let mut w = vec![[0.0f64; 3]; ds.classes];
    let mut a = ata;
    let mut rhs: Vec<[f64; 3]> = (0..3)
        .map(|r| {
            let mut row = [0.0; 3];
            for (k, b) in atb.iter().enumerate().take(3.min(ds.classes)) {
                row[k] = b[r];
            }
            row
        })
        .collect();
    // support up to 4 classes: solve column blocks of 3, then the remainder
    let extra: Vec<f64> = if ds.classes > 3 { (0..3).map(|r| atb[3][r]).collect() } else { vec![] };
    let mut extra_col = [0.0f64; 3];
    for (r, v) in extra.iter().enumerate() {
        extra_col[r] = *v;
    }
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap()).unwrap();
        a.swap(col, piv);
        rhs.swap(col, piv);
        extra_col.swap(col, piv);
        for r in 0..3 {
            if r != col && a[col][col] != 0.0 {
                let f = a[r][col] / a[col][col];
                for c in 0..3 {
                    a[r][c] -= f * a[col][c];
                }
                for c in 0..3 {
                    rhs[r][c] -= f * rhs[col][c];
                }
                extra_col[r] -= f * extra_col[col];
            }
        }
    }
    for r in 0..3 {
        let d = if a[r][r] != 0.0 { a[r][r] } else { 1.0 };
        for (k, wk) in w.iter_mut().enumerate() {
            wk[r] = if k < 3 { rhs[r][k] / d } else { extra_col[r] / d };
        }
    }
    let m = ds.test_y.len();
    let mut correct = 0usize;
    for i in 0..m {
        let f = feat(&ds.test_x, i);
        let pred = w
            .iter()
            .map(|wk| wk[0] * f[0] + wk[1] * f[1] + wk[2] * f[2])
            .enumerate()
            .max_by(|x, y| x.1.partial_cmp(&y.1).unwrap())
            .unwrap()
            .0;
        if pred == ds.test_y[i] {
            correct += 1;
        }
    }
    correct as f64 / m as f64
}

/// affine → norm → ReLU, twice, then a linear classifier; f64 master weights.
#[derive(Debug, Clone)]
pub struct ToyModel {
    pub hidden: usize,
    pub classes: usize,
    pub w1: Vec<f64>, // (2, hidden)
    pub b1: Vec<f64>,
    pub w2: Vec<f64>, // (hidden, hidden)
    pub b2: Vec<f64>,
    pub w3: Vec<f64>, // (hidden, classes)
    pub b3: Vec<f64>,
    pub norm1: AffineParams,
    pub norm2: AffineParams,
}

impl ToyModel {
    pub fn new(hidden: usize, classes: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1000));
        let mut init = |rows: usize, cols: usize| -> Vec<f64> {
            let s = 1.0 / (rows as f64).sqrt();
            (0..rows * cols)
                .map(|_| s * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
                .collect()
        };
        ToyModel {
            hidden,
            classes,
            w1: init(2, hidden),
            b1: vec![0.0; hidden],
            w2: init(hidden, hidden),
            b2: vec![0.0; hidden],
            w3: init(hidden, classes),
            b3: vec![0.0; classes],
            norm1: AffineParams::identity(hidden),
            norm2: AffineParams::identity(hidden),
        }
    }

    pub fn finite(&self) -> bool {
        self.w1
            .iter()
            .chain(&self.w2)
            .chain(&self.w3)
            .chain(&self.norm1.gamma)
            .chain(&self.norm2.gamma)
            .all(|v| v.is_finite())
    }
}

fn matmul(x: &Tensor, w: &[f64], cols: usize) -> Tensor {
    let rows = x.shape[0];
    let inner = x.shape[1];
    let mut out = vec![0.0; rows * cols];
    for r in 0..rows {
        for i in 0..inner {
            let xv = x.data[r * inner + i];
            for c in 0..cols {
                out[r * cols + c] += xv * w[i * cols + c];
            }
        }
    }
    Tensor { shape: vec![rows, cols], data: out }
}

/// x^T @ g, giving the (inner, cols) weight gradient.
fn matmul_tn(x: &Tensor, g: &Tensor) -> Vec<f64> {
    let (rows, inner, cols) = (x.shape[0], x.shape[1], g.shape[1]);
    let mut out = vec![0.0; inner * cols];
    for r in 0..rows {
        for i in 0..inner {
            let xv = x.data[r * inner + i];
            for c in 0..cols {
                out[i * cols + c] += xv * g.data[r * cols + c];
            }
        }
    }
    out
}

/// g @ w^T, giving the (rows, inner) input gradient.
fn matmul_nt(g: &Tensor, w: &[f64], inner: usize) -> Tensor {
    let (rows, cols) = (g.shape[0], g.shape[1]);
    let mut out = vec![0.0; rows * inner];
    for r in 0..rows {
        for c in 0..cols {
            let gv = g.data[r * cols + c];
            for i in 0..inner {
                out[r * inner + i] += gv * w[i * cols + c];
            }
        }
    }
    Tensor { shape: vec![rows, inner], data: out }
}

fn add_bias(t: &mut Tensor, b: &[f64]) {
    let cols = t.shape[1];
    for (i, v) in t.data.iter_mut().enumerate() {
        *v += b[i % cols];
    }
}

/// Dispatch a norm forward by variant, unpacking lightnorm's BFP output.
pub fn norm_forward(
    x: &Tensor,
    p: &AffineParams,
    cfg: &NormConfig,
) -> Result<(Tensor, NormCache), NormError> {
    match cfg.variant {
        Variant::Conventional | Variant::Restructured => bn_forward(x, p, cfg),
        Variant::Range => rn_forward(x, p, cfg),
        Variant::Lightnorm => {
            let (packed, cache) = lightnorm_forward(x, p, cfg)?;
            Ok((unpack_tensor(&packed)?, cache))
        }
    }
}

/// Dispatch a norm backward; lightnorm routes the upstream gradient through
/// BFP storage (quantize to the backward format, pack, unpack on the far
/// side).
pub fn norm_backward(
    dy: &Tensor,
    cache: &NormCache,
    cfg: &NormConfig,
) -> Result<(Tensor, Vec<f64>, Vec<f64>), NormError> {
    match cfg.variant {
        Variant::Conventional | Variant::Restructured => bn_backward(dy, cache, cfg),
        Variant::Range => rn_backward(dy, cache, cfg),
        Variant::Lightnorm => {
            let env = FpEnv::new(cfg.bw_format.clone());
            let q = Tensor {
                shape: dy.shape.clone(),
                data: dy.data.iter().map(|&v| env.quantize(v)).collect(),
            };
            let packed = pack_tensor(&q, &cfg.bw_format, cfg.group_size)?;
            let (dx, dg, db) = lightnorm_backward(&packed, cache, cfg)?;
            Ok((unpack_tensor(&dx)?, dg, db))
        }
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct EpochStat {
    pub epoch: usize,
    pub train_loss: f64,
    pub test_accuracy: f64,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct TrainRun {
    pub seed: u64,
    pub dataset: String,
    pub config: NormConfig,
    pub epochs: usize,
    pub trace: Vec<EpochStat>,
    pub final_accuracy: f64,
    /// Loss went non-finite; training stopped early (reported, not thrown).
    pub diverged: bool,
}

impl TrainRun {
    /// Test accuracy averaged over the last `window` epochs — a lower-variance
    /// summary than the final epoch alone.
    pub fn tail_accuracy(&self, window: usize) -> f64 {
        let tail: Vec<f64> = self
            .trace
            .iter()
            .rev()
            .take(window.max(1))
            .map(|e| e.test_accuracy)
            .collect();
        if tail.is_empty() {
            return self.final_accuracy;
        }
        tail.iter().sum::<f64>() / tail.len() as f64
    }
}

struct BatchState {
    a1: Tensor,
    h1: Tensor,
    r1: Tensor,
    c1: NormCache,
    h2: Tensor,
    r2: Tensor,
    c2: NormCache,
    logits: Tensor,
}

fn forward(model: &ToyModel, cfg: &NormConfig, xb: &Tensor) -> Result<BatchState, NormError> {
    let mut a1 = matmul(xb, &model.w1, model.hidden);
    add_bias(&mut a1, &model.b1);
    let (h1, c1) = norm_forward(&a1, &model.norm1, cfg)?;
    let r1 = Tensor { shape: h1.shape.clone(), data: h1.data.iter().map(|&v| v.max(0.0)).collect() };
    let mut a2 = matmul(&r1, &model.w2, model.hidden);
    add_bias(&mut a2, &model.b2);
    let (h2, c2) = norm_forward(&a2, &model.norm2, cfg)?;
    let r2 = Tensor { shape: h2.shape.clone(), data: h2.data.iter().map(|&v| v.max(0.0)).collect() };
    let mut logits = matmul(&r2, &model.w3, model.classes);
    add_bias(&mut logits, &model.b3);
    Ok(BatchState { a1, h1, r1, c1, h2, r2, c2, logits })
}

fn accuracy(model: &ToyModel, cfg: &NormConfig, x: &Tensor, y: &[usize]) -> Result<f64, NormError> {
    let n = y.len();
    let mut correct = 0usize;
    let mut counted = 0usize;
    let mut i = 0;
    while i < n {
        let end = (i + BATCH).min(n);
        if end - i < 2 {
            break;
        }
        let xb = Tensor::new(vec![end - i, 2], x.data[2 * i..2 * end].to_vec()).expect("slice");
        let st = forward(model, cfg, &xb)?;
        for (r, &label) in y[i..end].iter().enumerate() {
            let row = &st.logits.data[r * model.classes..(r + 1) * model.classes];
            let pred = row
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap()
                .0;
            if pred == label {
                correct += 1;
            }
            counted += 1;
        }
        i = end;
    }
    Ok(correct as f64 / counted.max(1) as f64)
}

/// SGD training loop. Only the norm layers run under `cfg`; everything else
/// is f64. Divergence sets the `diverged` flag and stops early.
pub fn train(
    model: &mut ToyModel,
    ds: &Dataset,
    cfg: &NormConfig,
    epochs: usize,
    seed: u64,
) -> Result<TrainRun, ToyError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(2000));
    let n_train = ds.train_y.len();
    let mut run = TrainRun {
        seed,
        dataset: ds.kind.clone(),
        config: cfg.clone(),
        epochs,
        trace: Vec::with_capacity(epochs),
        final_accuracy: 0.0,
        diverged: false,
    };
    let mut order: Vec<usize> = (0..n_train).collect();
    'epochs: for epoch in 0..epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut loss_batches = 0usize;
        for chunk in order.chunks(BATCH) {
            if chunk.len() < 2 {
                continue;
            }
            let nb = chunk.len();
            let mut xb = Tensor::zeros(vec![nb, 2]);
            for (r, &i) in chunk.iter().enumerate() {
                xb.data[2 * r] = ds.train_x.data[2 * i];
                xb.data[2 * r + 1] = ds.train_x.data[2 * i + 1];
            }
            let st = forward(model, cfg, &xb)?;

            // softmax cross-entropy and its gradient
            let mut g = Tensor::zeros(vec![nb, model.classes]);
            let mut loss = 0.0;
            for r in 0..nb {
                let row = &st.logits.data[r * model.classes..(r + 1) * model.classes];
                let mx = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let exps: Vec<f64> = row.iter().map(|v| (v - mx).exp()).collect();
                let z: f64 = exps.iter().sum();
                let label = ds.train_y[chunk[r]];
                loss += z.ln() - (row[label] - mx);
                for c in 0..model.classes {
                    g.data[r * model.classes + c] =
                        (exps[c] / z - if c == label { 1.0 } else { 0.0 }) / nb as f64;
                }
            }
            loss /= nb as f64;
            if !loss.is_finite() {
                run.diverged = true;
                break 'epochs;
            }
            loss_sum += loss;
            loss_batches += 1;

            let dw3 = matmul_tn(&st.r2, &g);
            let db3: Vec<f64> = (0..model.classes)
                .map(|c| (0..nb).map(|r| g.data[r * model.classes + c]).sum())
                .collect();
            let mut dh2 = matmul_nt(&g, &model.w3, model.hidden);
            for (v, h) in dh2.data.iter_mut().zip(st.h2.data.iter()) {
                if *h <= 0.0 {
                    *v = 0.0;
                }
            }
            let (da2, dg2, db2n) = norm_backward(&dh2, &st.c2, cfg)?;
            let dw2 = matmul_tn(&st.r1, &da2);
            let db2: Vec<f64> = (0..model.hidden)
                .map(|c| (0..nb).map(|r| da2.data[r * model.hidden + c]).sum())
                .collect();
            let mut dh1 = matmul_nt(&da2, &model.w2, model.hidden);
            for (v, h) in dh1.data.iter_mut().zip(st.h1.data.iter()) {
                if *h <= 0.0 {
                    *v = 0.0;
                }
            }
            let (da1, dg1, db1n) = norm_backward(&dh1, &st.c1, cfg)?;
            let dw1 = matmul_tn(&xb, &da1);
            let db1: Vec<f64> = (0..model.hidden)
                .map(|c| (0..nb).map(|r| da1.data[r * model.hidden + c]).sum())
                .collect();
            let _ = &st.a1;

            let step = |p: &mut [f64], g: &[f64]| {
                for (pv, gv) in p.iter_mut().zip(g) {
                    *pv -= LR * gv;
                }
            };
            step(&mut model.w1, &dw1);
            step(&mut model.b1, &db1);
            step(&mut model.w2, &dw2);
            step(&mut model.b2, &db2);
            step(&mut model.w3, &dw3);
            step(&mut model.b3, &db3);
            step(&mut model.norm1.gamma, &dg1);
            step(&mut model.norm1.beta, &db1n);
            step(&mut model.norm2.gamma, &dg2);
            step(&mut model.norm2.beta, &db2n);
        }
        if !model.finite() {
            run.diverged = true;
            break;
        }
        let acc = accuracy(model, cfg, &ds.test_x, &ds.test_y)?;
        run.trace.push(EpochStat {
            epoch,
            train_loss: loss_sum / loss_batches.max(1) as f64,
            test_accuracy: acc,
        });
    }
    run.final_accuracy = if run.diverged {
        0.0
    } else {
        accuracy(model, cfg, &ds.test_x, &ds.test_y)?
    };
    Ok(run)
}

/// Build dataset + model and train: the one-call entry the CLI uses.
pub fn run_toy(
    cfg: &NormConfig,
    kind: &str,
    n: usize,
    epochs: usize,
    seed: u64,
) -> Result<TrainRun, ToyError> {
    let ds = make_dataset(kind, n, seed)?;
    let mut model = ToyModel::new(HIDDEN, ds.classes, seed);
    train(&mut model, &ds, cfg, epochs, seed)
}

/// Central-finite-difference check of a norm layer's input and γ/β gradients
/// under the loss L = Σ dY ⊙ Y. Returns the worst relative error. For the
/// range variants, positions holding a channel's min or max are skipped (the
/// range function has a kink there).
pub fn grad_check(
    x: &Tensor,
    p: &AffineParams,
    cfg: &NormConfig,
    dy: &Tensor,
) -> Result<f64, ToyError> {
    let is_range = matches!(cfg.variant, Variant::Range | Variant::Lightnorm);
    let loss = |x: &Tensor, p: &AffineParams| -> Result<f64, ToyError> {
        let (y, _) = norm_forward(x, p, cfg)?;
        Ok(y.data.iter().zip(dy.data.iter()).map(|(a, b)| a * b).sum())
    };
    let (_, cache) = norm_forward(x, p, cfg)?;
    let (dx, dgamma, dbeta) = norm_backward(dy, &cache, cfg)?;

    let mut worst = 0.0f64;
    let mut check = |analytic: f64, num: f64| {
        let rel = (analytic - num).abs() / num.abs().max(analytic.abs()).max(1e-6);
        worst = worst.max(rel);
    };
    let h = 1e-5;
    for c in 0..x.channels() {
        let skip: std::collections::HashSet<usize> = if is_range {
            let st = &cache.stats[c];
            st.argmin.iter().chain(st.argmax.iter()).copied().collect()
        } else {
            Default::default()
        };
        for (pos, i) in x.channel_indices(c).enumerate() {
            if skip.contains(&pos) {
                continue;
            }
            let mut xp = x.clone();
            xp.data[i] += h;
            let lp = loss(&xp, p)?;
            xp.data[i] = x.data[i] - h;
            let lm = loss(&xp, p)?;
            check(dx.data[i], (lp - lm) / (2.0 * h));
        }
        let mut pp = p.clone();
        pp.gamma[c] += h;
        let lp = loss(x, &pp)?;
        pp.gamma[c] = p.gamma[c] - h;
        let lm = loss(x, &pp)?;
        check(dgamma[c], (lp - lm) / (2.0 * h));
        let mut pp = p.clone();
        pp.beta[c] += h;
        let lp = loss(x, &pp)?;
        pp.beta[c] = p.beta[c] - h;
        let lm = loss(x, &pp)?;
        check(dbeta[c], (lp - lm) / (2.0 * h));
    }
    Ok(worst)
}

/// The five ablation conditions behind the headline comparison.
pub fn ablation_configs() -> Vec<(String, NormConfig)> {
    use crate::minifloat::{fp10a, fp10b};
    use crate::norm::GradientRule;
    let mut bn = NormConfig::new(Variant::Conventional, fp64(), fp64());
    bn.acc_format = None;
    let light = |k: usize| {
        let mut c = NormConfig::lightnorm();
        c.group_size = k;
        c.gradient_rule = GradientRule::Calculus;
        // wide accumulator, narrow operands — same reading as the distortion
        // sweep: reductions run in the scalar unit, storage stays narrow
        c.acc_format = Some(crate::minifloat::fp32());
        c
    };
    let mut swapped = light(4);
    swapped.fw_format = fp10b();
    swapped.bw_format = fp10a();
    vec![
        ("bn-f64".into(), bn),
        ("light-k4".into(), light(4)),
        ("light-k8".into(), light(8)),
        ("light-k16".into(), light(16)),
        ("pair-swapped".into(), swapped),
    ]
}
