//! Normalization variants over per-channel mini-batch tensors.
//!
//! Four variants share one code path:
//!
//! * `Conventional` — y = γ·(x−μ)/√(Var+ε)+β with Var = E[(X−E[X])²] (two
//!   statistics passes plus the normalize pass);
//! * `Restructured` — same output, Var = E[X²]−E[X]² gathered in a single
//!   statistics pass (negative round-off clamped to zero);
//! * `Range` — the standard deviation is replaced by σ̂ = C(B)·(max−min) with
//!   C(B) = 1/√(2·ln B), statistics (μ, min, max) in one streaming pass;
//! * `Lightnorm` — range normalization at FP10-A forward / FP10-B backward with
//!   outputs (and the cached activations) stored in block floating point.
//!
//! Emulation granularity is per operation: inputs are quantized on entry and
//! every intermediate result is re-quantized to the active format, mirroring a
//! fixed-width datapath. Accumulations are strictly sequential in channel
//! raster order. `NormConfig::acc_format` optionally widens only the
//! accumulators (the "everything else stays at FP32" reading); `None` folds
//! them at the operand format.

use crate::bfp::{pack_tensor, unpack_tensor, BfpError, BfpTensor};
use crate::minifloat::{fp10a, fp10b, FpEnv, FpFormat, MinifloatError};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Conventional,
    Restructured,
    Range,
    Lightnorm,
}

impl std::str::FromStr for Variant {
    type Err = NormError;
    fn from_str(s: &str) -> Result<Self, NormError> {
        match s.to_lowercase().as_str() {
            "conventional" => Ok(Variant::Conventional),
            "restructured" => Ok(Variant::Restructured),
            "range" => Ok(Variant::Range),
            "lightnorm" => Ok(Variant::Lightnorm),
            _ => Err(NormError::BadConfig(format!("unknown variant: {s}"))),
        }
    }
}

/// Which local-gradient rule the range-norm backward uses.
///
/// `ScalarUnit` is the hardware rule implemented verbatim: the per-channel
/// scalars are −γ/(σ+ε) and σ^(−3/2)·γ·C(B)/2, the former multiplying
/// ((1/N)·Σdy + dy_i). This is *not* the calculus gradient of the range-
/// normalized output — see the diagnostic produced by
/// [`crate::toytrain::grad_check`] — and training with it does not converge.
/// `Calculus` is the analytically derived gradient; the trainer defaults to it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GradientRule {
    ScalarUnit,
    Calculus,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct NormConfig {
    pub variant: Variant,
    pub fw_format: FpFormat,
    pub bw_format: FpFormat,
    pub epsilon: f64,
    /// BFP group size (lightnorm only).
    pub group_size: usize,
    /// Mini-batch size fed to C(B).
    pub batch_size: usize,
    /// Optional wider accumulator format; `None` accumulates at the operand format.
    pub acc_format: Option<FpFormat>,
    /// Feed the per-channel element count to C instead of the mini-batch size.
    pub c_of_element_count: bool,
    pub gradient_rule: GradientRule,
}

impl NormConfig {
    pub fn new(variant: Variant, fw: FpFormat, bw: FpFormat) -> Self {
        NormConfig {
            variant,
            fw_format: fw,
            bw_format: bw,
            epsilon: 1e-5,
            group_size: 4,
            batch_size: 128,
            acc_format: None,
            c_of_element_count: false,
            gradient_rule: GradientRule::ScalarUnit,
        }
    }

    /// Lightnorm defaults: FP10-A forward, FP10-B backward, groups of 4.
    pub fn lightnorm() -> Self {
        NormConfig::new(Variant::Lightnorm, fp10a(), fp10b())
    }
}

#[derive(Debug)]
pub enum NormError {
    EmptyChannel,
    ShapeMismatch(String),
    BadConfig(String),
    Minifloat(MinifloatError),
    Bfp(BfpError),
}

impl std::fmt::Display for NormError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NormError::EmptyChannel => write!(f, "channel needs at least 2 elements"),
            NormError::ShapeMismatch(s) => write!(f, "shape mismatch: {s}"),
            NormError::BadConfig(s) => write!(f, "bad config: {s}"),
            NormError::Minifloat(e) => write!(f, "{e}"),
            NormError::Bfp(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for NormError {}

impl From<MinifloatError> for NormError {
    fn from(e: MinifloatError) -> Self {
        NormError::Minifloat(e)
    }
}

impl From<BfpError> for NormError {
    fn from(e: BfpError) -> Self {
        NormError::Bfp(e)
    }
}

/// `C(B) = 1/sqrt(2 ln B)`.
pub fn c_of_b(b: usize) -> Result<f64, NormError> {
    if b < 2 {
        return Err(NormError::BadConfig(format!("C(B) needs B >= 2, got {b}")));
    }
    Ok(1.0 / (2.0 * (b as f64).ln()).sqrt())
}

/// The preset lookup table of C(B) values the scalar unit stores.
pub fn c_of_b_lut() -> Vec<(usize, f64)> {
    [16usize, 32, 64, 128, 256, 1024]
        .iter()
        .map(|&b| (b, c_of_b(b).expect("B >= 2")))
        .collect()
}

/// Per-channel trainable affine parameters.
#[derive(Debug, Clone)]
pub struct AffineParams {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
}

impl AffineParams {
    pub fn identity(channels: usize) -> Self {
        AffineParams { gamma: vec![1.0; channels], beta: vec![0.0; channels] }
    }
}

/// Per-channel statistics as computed under the forward format.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ChannelStats {
    pub mu: f64,
    /// Std-dev for BN variants; C(B)·range for range variants (without ε).
    pub sigma: f64,
    pub x_min: f64,
    pub x_max: f64,
    /// Positions (in channel raster order) tied for the minimum / maximum.
    #[serde(skip)]
    pub argmin: Vec<usize>,
    #[serde(skip)]
    pub argmax: Vec<usize>,
}

/// Everything backward needs; no re-read of X is required (the statistics,
/// centered values, and pre-affine normalized values are all cached).
#[derive(Debug, Clone)]
pub struct NormCache {
    pub stats: Vec<ChannelStats>,
    /// Pre-affine normalized values x̂ (BFP-aligned for lightnorm).
    pub normalized: Tensor,
    /// x − μ at the forward format (BFP-aligned for lightnorm).
    pub centered: Tensor,
    /// The denominator actually divided by (√(Var+ε) or σ̂+ε).
    pub denom: Vec<f64>,
    pub gamma: Vec<f64>,
    pub cfg: NormConfig,
}

/// Raw single-pass accumulators over one channel.
#[derive(Debug, Clone, Copy)]
pub struct StreamStats {
    pub n: usize,
    pub sum: f64,
    pub sum_sq: f64,
    pub min: f64,
    pub max: f64,
}

/// One strictly sequential traversal collecting Σx, Σx², min, max. The
/// single-read contract lives here: callers hand over an iterator, so the
/// statistics pass structurally cannot touch an element twice. Σx² squares at
/// the operand format and accumulates both sums in `acc`.
pub fn channel_stream_stats(
    it: impl Iterator<Item = f64>,
    env: &FpEnv,
    acc: &FpEnv,
) -> StreamStats {
    let mut s = StreamStats { n: 0, sum: 0.0, sum_sq: 0.0, min: f64::INFINITY, max: f64::NEG_INFINITY };
    for x in it {
        s.n += 1;
        s.sum = acc.add(s.sum, x);
        s.sum_sq = acc.add(s.sum_sq, env.mul(x, x));
        if x < s.min {
            s.min = x;
        }
        if x > s.max {
            s.max = x;
        }
    }
    s
}

fn envs(cfg: &NormConfig, fmt: &FpFormat) -> (FpEnv, FpEnv) {
    let env = FpEnv::new(fmt.clone());
    let acc = FpEnv::new(cfg.acc_format.clone().unwrap_or_else(|| fmt.clone()));
    (env, acc)
}

fn c_argument(cfg: &NormConfig, channel_len: usize) -> usize {
    if cfg.c_of_element_count {
        channel_len
    } else {
        cfg.batch_size
    }
}

/// Forward pass for the BN variants (`Conventional` | `Restructured`).
pub fn bn_forward(
    x: &Tensor,
    p: &AffineParams,
    cfg: &NormConfig,
) -> Result<(Tensor, NormCache), NormError> {
    match cfg.variant {
        Variant::Conventional | Variant::Restructured => forward_impl(x, p, cfg),
        _ => Err(NormError::BadConfig("bn_forward needs a BN variant".into())),
    }
}

/// Forward pass for range normalization.
pub fn rn_forward(
    x: &Tensor,
    p: &AffineParams,
    cfg: &NormConfig,
) -> Result<(Tensor, NormCache), NormError> {
    match cfg.variant {
        Variant::Range | Variant::Lightnorm => forward_impl(x, p, cfg),
        _ => Err(NormError::BadConfig("rn_forward needs a range variant".into())),
    }
}

fn forward_impl(
    x: &Tensor,
    p: &AffineParams,
    cfg: &NormConfig,
) -> Result<(Tensor, NormCache), NormError> {
    let channels = x.channels();
    let n = x.channel_len();
    if n < 2 {
        return Err(NormError::EmptyChannel);
    }
    if p.gamma.len() != channels || p.beta.len() != channels {
        return Err(NormError::ShapeMismatch(format!(
            "{} channels vs {} gamma / {} beta",
            channels,
            p.gamma.len(),
            p.beta.len()
        )));
    }
    if cfg.epsilon <= 0.0 {
        return Err(NormError::BadConfig("epsilon must be > 0".into()));
    }
    let (env, acc) = envs(cfg, &cfg.fw_format);
    let eps = env.quantize(cfg.epsilon);
    let n_q = env.quantize(n as f64);
    let is_range = matches!(cfg.variant, Variant::Range | Variant::Lightnorm);
    let c_q = if is_range {
        env.quantize(c_of_b(c_argument(cfg, n))?)
    } else {
        0.0
    };

    let mut y = Tensor::zeros(x.shape.clone());
    let mut normalized = Tensor::zeros(x.shape.clone());
    let mut centered = Tensor::zeros(x.shape.clone());
    let mut stats = Vec::with_capacity(channels);
    let mut denoms = Vec::with_capacity(channels);
    let mut gamma_q = Vec::with_capacity(channels);

    for c in 0..channels {
        let idxs: Vec<usize> = x.channel_indices(c).collect();
        let xq: Vec<f64> = idxs
            .iter()
            .map(|&i| crate::minifloat::quantize(x.data[i], &cfg.fw_format))
            .collect::<Result<_, _>>()?;
        let g = env.quantize(p.gamma[c]);
        let b = env.quantize(p.beta[c]);

        // statistics pass (one traversal; conventional takes a second pass for
        // the centered squares below)
        let s = channel_stream_stats(xq.iter().copied(), &env, &acc);
        let mu = env.quantize(acc.div(s.sum, n_q));
        let (sigma, denom) = if is_range {
            let range = env.sub(s.max, s.min);
            let sigma = env.mul(c_q, range);
            (sigma, env.add(sigma, eps))
        } else {
            let var = match cfg.variant {
                Variant::Conventional => {
                    let mut sum_sq = 0.0;
                    for &v in &xq {
                        let d = env.sub(v, mu);
                        sum_sq = acc.add(sum_sq, env.mul(d, d));
                    }
                    env.quantize(acc.div(sum_sq, n_q))
                }
                Variant::Restructured => {
                    let ex2 = env.quantize(acc.div(s.sum_sq, n_q));
                    let v = env.sub(ex2, env.mul(mu, mu));
                    if v < 0.0 {
                        0.0
                    } else {
                        v
                    }
                }
                _ => unreachable!(),
            };
            let sigma = env.sqrt(var);
            (sigma, env.sqrt(env.add(var, eps)))
        };

        let mut argmin = Vec::new();
        let mut argmax = Vec::new();
        for (pos, (&i, &v)) in idxs.iter().zip(xq.iter()).enumerate() {
            if is_range {
                if v == s.min {
                    argmin.push(pos);
                }
                if v == s.max {
                    argmax.push(pos);
                }
            }
            let d = env.sub(v, mu);
            let xhat = env.div(d, denom);
            if cfg.variant != Variant::Lightnorm {
                y.data[i] = env.add(env.mul(g, xhat), b);
            }
            normalized.data[i] = xhat;
            centered.data[i] = d;
        }
        stats.push(ChannelStats { mu, sigma, x_min: s.min, x_max: s.max, argmin, argmax });
        denoms.push(denom);
        gamma_q.push(g);
    }

    let mut cache = NormCache {
        stats,
        normalized,
        centered,
        denom: denoms,
        gamma: gamma_q,
        cfg: cfg.clone(),
    };
    if cfg.variant == Variant::Lightnorm {
        // x̂ is what the hardware stores: align it (and the centered cache) to
        // BFP first, then apply the affine to the values as read back
        cache.normalized = bfp_align(&cache.normalized, &cfg.fw_format, cfg.group_size)?;
        cache.centered = bfp_align(&cache.centered, &cfg.fw_format, cfg.group_size)?;
        for c in 0..channels {
            let g = cache.gamma[c];
            let b = env.quantize(p.beta[c]);
            for i in x.channel_indices(c) {
                y.data[i] = env.add(env.mul(g, cache.normalized.data[i]), b);
            }
        }
    }
    Ok((y, cache))
}

/// Pack+unpack: the tensor as it comes back from BFP storage.
fn bfp_align(t: &Tensor, fmt: &FpFormat, k: usize) -> Result<Tensor, NormError> {
    Ok(unpack_tensor(&pack_tensor(t, fmt, k)?)?)
}

/// Range-norm forward with the output stored to (simulated) DRAM as BFP.
pub fn lightnorm_forward(
    x: &Tensor,
    p: &AffineParams,
    cfg: &NormConfig,
) -> Result<(BfpTensor, NormCache), NormError> {
    if cfg.variant != Variant::Lightnorm {
        return Err(NormError::BadConfig("lightnorm_forward needs variant=lightnorm".into()));
    }
    let (y, cache) = forward_impl(x, p, cfg)?;
    Ok((pack_tensor(&y, &cfg.fw_format, cfg.group_size)?, cache))
}

/// Backward for the BN variants (shared schedule):
/// dβ = Σdy, dγ = Σdy·x̂, dx_i = γ/√(Var+ε)·(dy_i − dβ/N − x̂_i·dγ/N).
pub fn bn_backward(
    dy: &Tensor,
    cache: &NormCache,
    cfg: &NormConfig,
) -> Result<(Tensor, Vec<f64>, Vec<f64>), NormError> {
    if !matches!(cfg.variant, Variant::Conventional | Variant::Restructured) {
        return Err(NormError::BadConfig("bn_backward needs a BN variant".into()));
    }
    if dy.shape != cache.normalized.shape {
        return Err(NormError::ShapeMismatch(format!(
            "dY {:?} vs cache {:?}",
            dy.shape, cache.normalized.shape
        )));
    }
    let (env, acc) = envs(cfg, &cfg.bw_format);
    let n = dy.channel_len();
    let n_q = env.quantize(n as f64);
    let mut dx = Tensor::zeros(dy.shape.clone());
    let mut dgamma = Vec::new();
    let mut dbeta = Vec::new();
    for c in 0..dy.channels() {
        let idxs: Vec<usize> = dy.channel_indices(c).collect();
        let dyq: Vec<f64> = idxs
            .iter()
            .map(|&i| crate::minifloat::quantize(dy.data[i], &cfg.bw_format))
            .collect::<Result<_, _>>()?;
        let xhat: Vec<f64> = idxs.iter().map(|&i| env.quantize(cache.normalized.data[i])).collect();
        let mut db = 0.0;
        let mut dg = 0.0;
        for (dyi, xh) in dyq.iter().zip(xhat.iter()) {
            db = acc.add(db, *dyi);
            dg = acc.add(dg, env.mul(*dyi, *xh));
        }
        let db = env.quantize(db);
        let dg = env.quantize(dg);
        let scale = env.div(env.quantize(cache.gamma[c]), env.quantize(cache.denom[c]));
        let mean_db = env.div(db, n_q);
        let mean_dg = env.div(dg, n_q);
        for ((&i, dyi), xh) in idxs.iter().zip(dyq.iter()).zip(xhat.iter()) {
            let inner = env.sub(env.sub(*dyi, mean_db), env.mul(*xh, mean_dg));
            dx.data[i] = env.mul(scale, inner);
        }
        dgamma.push(dg);
        dbeta.push(db);
    }
    Ok((dx, dgamma, dbeta))
}

/// Backward for range normalization.
///
/// Under [`GradientRule::ScalarUnit`] the per-channel scalars are
/// `s1 = −γ/(σ̂+ε)` and `s2 = σ̂^(−3/2)·γ·C(B)/2` (computed once, in this op
/// order: `s2 = ((1/(σ̂·√σ̂))·γ)·(C·0.5)`), the per-element first term is
/// `s1·((1/N)·Σdy + dy_i)`, and the channel-wide second term `s2·Σdy_j·(x_j−μ)`
/// is added at the argmin position(s) and subtracted at the argmax position(s),
/// split evenly when extrema tie. Under [`GradientRule::Calculus`] the terms
/// are `γ/(σ̂+ε)·(dy_i − (1/N)Σdy)` and `γ·C(B)/(σ̂+ε)²·Σdy_j·(x_j−μ)` with the
/// same min/max placement. dγ = Σdy·x̂ and dβ = Σdy in both cases.
pub fn rn_backward(
    dy: &Tensor,
    cache: &NormCache,
    cfg: &NormConfig,
) -> Result<(Tensor, Vec<f64>, Vec<f64>), NormError> {
    if !matches!(cfg.variant, Variant::Range | Variant::Lightnorm) {
        return Err(NormError::BadConfig("rn_backward needs a range variant".into()));
    }
    if dy.shape != cache.normalized.shape {
        return Err(NormError::ShapeMismatch(format!(
            "dY {:?} vs cache {:?}",
            dy.shape, cache.normalized.shape
        )));
    }
    let (env, acc) = envs(cfg, &cfg.bw_format);
    let n = dy.channel_len();
    let n_q = env.quantize(n as f64);
    let c_q = env.quantize(c_of_b(c_argument(cfg, n))?);
    let mut dx = Tensor::zeros(dy.shape.clone());
    let mut dgamma = Vec::new();
    let mut dbeta = Vec::new();
    for c in 0..dy.channels() {
        let st = &cache.stats[c];
        if st.argmin.is_empty() || st.argmax.is_empty() {
            return Err(NormError::BadConfig("cache is missing argmin/argmax masks".into()));
        }
        let idxs: Vec<usize> = dy.channel_indices(c).collect();
        let dyq: Vec<f64> = idxs
            .iter()
            .map(|&i| crate::minifloat::quantize(dy.data[i], &cfg.bw_format))
            .collect::<Result<_, _>>()?;
        let xhat: Vec<f64> = idxs.iter().map(|&i| env.quantize(cache.normalized.data[i])).collect();
        let cent: Vec<f64> = idxs.iter().map(|&i| env.quantize(cache.centered.data[i])).collect();
        let gamma = env.quantize(cache.gamma[c]);
        let denom = env.quantize(cache.denom[c]); // σ̂ + ε
        let sigma = env.quantize(st.sigma);

        let mut db = 0.0;
        let mut dg = 0.0;
        let mut dyd = 0.0;
        for ((dyi, xh), d) in dyq.iter().zip(xhat.iter()).zip(cent.iter()) {
            db = acc.add(db, *dyi);
            dg = acc.add(dg, env.mul(*dyi, *xh));
            dyd = acc.add(dyd, env.mul(*dyi, *d));
        }
        let db = env.quantize(db);
        let dg = env.quantize(dg);
        let dyd = env.quantize(dyd);
        let mean_dy = env.div(db, n_q);

        let (per_elem, corr): (Box<dyn Fn(f64) -> f64>, f64) = match cfg.gradient_rule {
            GradientRule::ScalarUnit => {
                let s1 = env.div(-gamma, denom);
                let inv_pow = env.div(1.0, env.mul(sigma, env.sqrt(sigma)));
                let s2 = env.mul(env.mul(inv_pow, gamma), env.mul(c_q, 0.5));
                let corr = env.mul(s2, dyd);
                let envc = env.clone();
                (Box::new(move |dyi| envc.mul(s1, envc.add(mean_dy, dyi))), corr)
            }
            GradientRule::Calculus => {
                let s1 = env.div(gamma, denom);
                let s2 = env.div(env.mul(gamma, c_q), env.mul(denom, denom));
                let corr = env.mul(s2, dyd);
                let envc = env.clone();
                (Box::new(move |dyi| envc.mul(s1, envc.sub(dyi, mean_dy))), corr)
            }
        };

        let min_share = env.div(corr, env.quantize(st.argmin.len() as f64));
        let max_share = env.div(corr, env.quantize(st.argmax.len() as f64));
        for (pos, (&i, dyi)) in idxs.iter().zip(dyq.iter()).enumerate() {
            let mut v = per_elem(*dyi);
            if st.argmin.contains(&pos) {
                v = env.add(v, min_share);
            }
            if st.argmax.contains(&pos) {
                v = env.sub(v, max_share);
            }
            dx.data[i] = v;
        }
        dgamma.push(dg);
        dbeta.push(db);
    }
    Ok((dx, dgamma, dbeta))
}

/// Backward through the BFP storage boundary: unpack dY, run [`rn_backward`]
/// at the backward format, pack dX. dγ/dβ stay scalar (nothing to group).
pub fn lightnorm_backward(
    dy: &BfpTensor,
    cache: &NormCache,
    cfg: &NormConfig,
) -> Result<(BfpTensor, Vec<f64>, Vec<f64>), NormError> {
    if cfg.variant != Variant::Lightnorm {
        return Err(NormError::BadConfig("lightnorm_backward needs variant=lightnorm".into()));
    }
    let dy_plain = unpack_tensor(dy)?;
    let (dx, dg, db) = rn_backward(&dy_plain, cache, cfg)?;
    Ok((pack_tensor(&dx, &cfg.bw_format, cfg.group_size)?, dg, db))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minifloat::fp32;

    use crate::minifloat::fp64;

    fn cfg64(variant: Variant) -> NormConfig {
        NormConfig::new(variant, fp64(), fp64())
    }

    #[test]
    fn c_of_b_values() {
        // 1/sqrt(2 ln 128) = 0.32101...; quoted figures round it to 0.32
        let c = c_of_b(128).unwrap();
        assert!((c - 0.32101346666110925).abs() < 1e-15);
        assert!((c * 100.0).round() / 100.0 == 0.32);
        assert!((c_of_b(256).unwrap() - 0.3003).abs() < 1e-4);
        let lut = c_of_b_lut();
        assert_eq!(lut.len(), 6);
        assert_eq!(lut[3], (128, c));
        assert!(c_of_b(1).is_err());
    }

    #[test]
    fn bn_forward_degenerate_and_exact() {
        let p = AffineParams::identity(1);
        let t = Tensor::new(vec![4, 1], vec![3.0, 3.0, 3.0, 3.0]).unwrap();
        let (y, _) = bn_forward(&t, &p, &cfg64(Variant::Conventional)).unwrap();
        assert!(y.data.iter().all(|&v| v == 0.0));

        let t = Tensor::new(vec![2, 1], vec![-1.0, 1.0]).unwrap();
        let mut cfg = cfg64(Variant::Conventional);
        cfg.epsilon = 1e-300;
        let (y, _) = bn_forward(&t, &p, &cfg).unwrap();
        assert!((y.data[0] + 1.0).abs() < 1e-9 && (y.data[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rn_forward_hand_example() {
        // X = [-1, 1], B=128: σ̂ = 0.32·2 = 0.64, Y ≈ ±1.5625
        let p = AffineParams::identity(1);
        let t = Tensor::new(vec![2, 1], vec![-1.0, 1.0]).unwrap();
        let mut cfg = cfg64(Variant::Range);
        cfg.epsilon = 1e-300;
        let (y, cache) = rn_forward(&t, &p, &cfg).unwrap();
        let c = c_of_b(128).unwrap();
        assert!((cache.stats[0].sigma - 2.0 * c).abs() < 1e-12);
        assert!((y.data[1] - 1.0 / (2.0 * c)).abs() < 1e-9);
        assert!((y.data[1] - 1.5625).abs() < 0.01);
    }

    #[test]
    fn rn_constant_channel_gives_beta() {
        let p = AffineParams { gamma: vec![2.0], beta: vec![0.75] };
        let t = Tensor::new(vec![4, 1], vec![1.5, 1.5, 1.5, 1.5]).unwrap();
        let (y, _) = rn_forward(&t, &p, &cfg64(Variant::Range)).unwrap();
        assert!(y.data.iter().all(|&v| v == 0.75));
    }

    #[test]
    fn restructured_matches_conventional_fp64() {
        let p = AffineParams::identity(2);
        let data: Vec<f64> = (0..64).map(|i| ((i * 37 % 19) as f64 - 9.0) * 0.37).collect();
        let t = Tensor::new(vec![32, 2], data).unwrap();
        let (ya, _) = bn_forward(&t, &p, &cfg64(Variant::Conventional)).unwrap();
        let (yb, _) = bn_forward(&t, &p, &cfg64(Variant::Restructured)).unwrap();
        for (a, b) in ya.data.iter().zip(yb.data.iter()) {
            assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
        }
    }

    #[test]
    fn backward_zero_upstream() {
        let p = AffineParams::identity(1);
        let t = Tensor::new(vec![4, 1], vec![0.5, -0.25, 1.0, 0.125]).unwrap();
        let cfg = cfg64(Variant::Range);
        let (_, cache) = rn_forward(&t, &p, &cfg).unwrap();
        let zeros = Tensor::zeros(vec![4, 1]);
        let (dx, dg, db) = rn_backward(&zeros, &cache, &cfg).unwrap();
        assert!(dx.data.iter().all(|&v| v == 0.0));
        assert_eq!((dg[0], db[0]), (0.0, 0.0));
    }

    #[test]
    fn interior_elements_get_first_term_only() {
        let p = AffineParams::identity(1);
        let t = Tensor::new(vec![3, 1], vec![-1.0, 0.0, 1.0]).unwrap();
        let cfg = cfg64(Variant::Range);
        let (_, cache) = rn_forward(&t, &p, &cfg).unwrap();
        let dy = Tensor::new(vec![3, 1], vec![1.0, 1.0, 1.0]).unwrap();
        let (dx, _, _) = rn_backward(&dy, &cache, &cfg).unwrap();
        // interior element: s1 * (mean_dy + dy) = -γ/(σ̂+ε) * 2
        let sigma = cache.stats[0].sigma;
        let expect = -(1.0 / (sigma + 1e-5)) * 2.0;
        assert!((dx.data[1] - expect).abs() < 1e-12);
    }

    #[test]
    fn lightnorm_round_trip_and_bit_size() {
        let p = AffineParams::identity(32);
        let data: Vec<f64> = (0..2048).map(|i| ((i % 97) as f64 - 48.0) * 0.021).collect();
        let t = Tensor::new(vec![1, 32, 8, 8], data).unwrap();
        let cfg = NormConfig::lightnorm();
        let (packed, cache) = lightnorm_forward(&t, &p, &cfg).unwrap();
        assert_eq!(packed.total_bits, 2048 * 5 + 512 * 5);
        // unpacked output equals the BFP alignment of γ·x̂+β; with identity
        // affine that is the aligned normalized cache
        let y = unpack_tensor(&packed).unwrap();
        for (a, b) in y.data.iter().zip(cache.normalized.data.iter()) {
            assert_eq!(a, b);
        }
        let dyp = pack_tensor(&Tensor::zeros(t.shape.clone()), &cfg.bw_format, 4).unwrap();
        let (dxp, dg, db) = lightnorm_backward(&dyp, &cache, &cfg).unwrap();
        assert!(unpack_tensor(&dxp).unwrap().data.iter().all(|&v| v == 0.0));
        assert_eq!(dg.len(), 32);
        assert!(db.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_read_statistics() {
        // the stats pass consumes a counting iterator exactly once per element
        let env = FpEnv::new(fp32());
        let count = std::cell::Cell::new(0usize);
        let vals = [1.0f64, 2.0, 3.0, 4.0];
        let s = channel_stream_stats(
            vals.iter().map(|&v| {
                count.set(count.get() + 1);
                v
            }),
            &env,
            &env,
        );
        assert_eq!(count.get(), 4);
        assert_eq!(s.sum, 10.0);
        assert_eq!((s.min, s.max), (1.0, 4.0));
    }
}
