//! Block floating point: groups of values sharing one exponent.
//!
//! A block of up to `k` format-representable values stores the shared exponent
//! `e_s = floor(log2 max|x_i|)` and, per element, a sign and the significand
//! aligned to `e_s` (right-shifted by `e_s - e_i`, RNE on the shifted-out bits).
//! Elements whose shift exceeds `m + 1` vanish — the storage-side zero-setting
//! error. An all-zero block uses the format's `emin` so re-encoding is stable.
//!
//! Bit accounting follows the `N*(s+m) + ceil(N/k)*e` size formula. Note the
//! physical payload needs `m + 1` mantissa bits (the block maximum keeps an
//! explicit integer bit); the formula undercounts that bit, and the serialized
//! container stores the full `m + 1` so round-trips are exact.

use crate::minifloat::{exp2i, is_representable, FpFormat, MinifloatError};
use crate::tensor::Tensor;

#[derive(Debug)]
pub enum BfpError {
    Minifloat(MinifloatError),
    EmptyBlock,
    BlockTooLong { len: usize, k: usize },
    Malformed(String),
}

impl std::fmt::Display for BfpError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BfpError::Minifloat(e) => write!(f, "{e}"),
            BfpError::EmptyBlock => write!(f, "empty block"),
            BfpError::BlockTooLong { len, k } => write!(f, "block of {len} exceeds group size {k}"),
            BfpError::Malformed(s) => write!(f, "malformed container: {s}"),
        }
    }
}

impl std::error::Error for BfpError {}

impl From<MinifloatError> for BfpError {
    fn from(e: MinifloatError) -> Self {
        BfpError::Minifloat(e)
    }
}

/// One shared-exponent group. `payloads[i] = (sign_negative, aligned_mantissa)`
/// with the decoded value `±mantissa * 2^(shared_exp - m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BfpBlock {
    pub shared_exp: i32,
    pub payloads: Vec<(bool, u32)>,
}

/// `floor(log2 max|x_i|)` over nonzero values, clamped to the format's dynamic
/// range; `emin` for an all-zero block.
pub fn shared_exponent(xs: &[f64], fmt: &FpFormat) -> Result<i32, BfpError> {
    if xs.is_empty() {
        return Err(BfpError::EmptyBlock);
    }
    let mut es = i32::MIN;
    for &x in xs {
        if x != 0.0 {
            let (mant, exp, _) = num_traits::Float::integer_decode(x);
            es = es.max(exp as i32 + 63 - mant.leading_zeros() as i32);
        }
    }
    if es == i32::MIN {
        return Ok(fmt.emin());
    }
    Ok(es.clamp(fmt.emin(), fmt.emax()))
}

/// Align a representable magnitude to `mantissa * 2^(es - m)` with RNE.
fn align_mantissa(x: f64, es: i32, m: u32) -> u32 {
    if x == 0.0 {
        return 0;
    }
    let (mant, exp, _) = num_traits::Float::integer_decode(x.abs());
    let quantum = es - m as i32; // exponent of one mantissa unit
    let shift = quantum - exp as i32;
    if shift <= 0 {
        // exact: representable inputs never exceed m+1 aligned bits
        return (mant << (-shift) as u32) as u32;
    }
    if shift >= 64 {
        return 0;
    }
    let half = 1u64 << (shift - 1);
    let rem = mant & ((1u64 << shift) - 1);
    let mut keep = mant >> shift;
    if rem > half || (rem == half && keep & 1 == 1) {
        keep += 1;
    }
    keep as u32
}

/// Encode up to `k` format-representable values into a shared-exponent block.
pub fn encode_block(xs: &[f64], fmt: &FpFormat, k: usize) -> Result<BfpBlock, BfpError> {
    if xs.len() > k {
        return Err(BfpError::BlockTooLong { len: xs.len(), k });
    }
    for &x in xs {
        if !is_representable(x, fmt) {
            return Err(MinifloatError::NotRepresentable { value: x, format: fmt.name.clone() }.into());
        }
    }
    let es = shared_exponent(xs, fmt)?;
    let payloads = xs
        .iter()
        .map(|&x| (x < 0.0, align_mantissa(x, es, fmt.man_bits)))
        .collect();
    Ok(BfpBlock { shared_exp: es, payloads })
}

/// Decode a block back to scalars.
pub fn decode_block(b: &BfpBlock, fmt: &FpFormat) -> Vec<f64> {
    let unit = exp2i(b.shared_exp - fmt.man_bits as i32);
    b.payloads
        .iter()
        .map(|&(neg, mant)| {
            let v = mant as f64 * unit;
            if neg {
                -v
            } else {
                v
            }
        })
        .collect()
}

/// `N*(s+m) + ceil(N/k)*e` bits for `N` elements in groups of `k`.
pub fn bfp_bit_size(n: usize, fmt: &FpFormat, k: usize) -> u64 {
    assert!(k >= 1, "group size must be >= 1");
    let n = n as u64;
    let k = k as u64;
    n * (1 + fmt.man_bits as u64) + n.div_ceil(k) * fmt.exp_bits as u64
}

/// A tensor stored as shared-exponent blocks, grouped per channel in raster
/// order (groups never cross channel boundaries; partial tails are zero-padded
/// and still charged a full shared exponent).
#[derive(Debug, Clone, PartialEq)]
pub struct BfpTensor {
    pub shape: Vec<usize>,
    pub fmt: FpFormat,
    pub k: usize,
    /// Blocks in channel-major order: all of channel 0's groups, then channel 1's, ...
    pub blocks: Vec<BfpBlock>,
    pub total_bits: u64,
}

/// Pack a format-representable tensor into BFP blocks.
pub fn pack_tensor(t: &Tensor, fmt: &FpFormat, k: usize) -> Result<BfpTensor, BfpError> {
    assert!(k >= 1, "group size must be >= 1");
    let mut blocks = Vec::new();
    for c in 0..t.channels() {
        let vals = t.channel_values(c);
        for chunk in vals.chunks(k) {
            let mut padded: Vec<f64> = chunk.to_vec();
            padded.resize(k, 0.0);
            blocks.push(encode_block(&padded, fmt, k)?);
        }
    }
    Ok(BfpTensor {
        shape: t.shape.clone(),
        fmt: fmt.clone(),
        k,
        blocks,
        total_bits: bfp_bit_size(t.len(), fmt, k),
    })
}

/// Decode back to a plain tensor (elementwise equal to BFP alignment of the
/// packed input; padding zeros are dropped).
pub fn unpack_tensor(bt: &BfpTensor) -> Result<Tensor, BfpError> {
    let mut out = Tensor::zeros(bt.shape.clone());
    let chan_len = out.channel_len();
    let blocks_per_chan = chan_len.div_ceil(bt.k);
    if bt.blocks.len() != blocks_per_chan * out.channels() {
        return Err(BfpError::Malformed(format!(
            "expected {} blocks, found {}",
            blocks_per_chan * out.channels(),
            bt.blocks.len()
        )));
    }
    for c in 0..out.channels() {
        let idxs: Vec<usize> = out.channel_indices(c).collect();
        for (g, chunk) in idxs.chunks(bt.k).enumerate() {
            let vals = decode_block(&bt.blocks[c * blocks_per_chan + g], &bt.fmt);
            for (&i, &v) in chunk.iter().zip(vals.iter()) {
                out.data[i] = v;
            }
        }
    }
    Ok(out)
}

const MAGIC: &[u8; 4] = b"BFPT";

/// Bit-packed little-endian container: header (magic, version, fmt triple, k,
/// shape), then per block the biased shared exponent (`e` bits) followed by
/// `k` payloads of 1 sign bit + `m+1` mantissa bits each.
pub fn to_bytes(bt: &BfpTensor) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.push(1u8); // version
    out.push(bt.fmt.exp_bits as u8);
    out.push(bt.fmt.man_bits as u8);
    out.extend_from_slice(&(bt.k as u32).to_le_bytes());
    out.extend_from_slice(&(bt.shape.len() as u32).to_le_bytes());
    for &d in &bt.shape {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    let mut bits = BitWriter::new();
    let bias = bt.fmt.bias();
    for b in &bt.blocks {
        bits.push((b.shared_exp + bias) as u64, bt.fmt.exp_bits);
        for &(neg, mant) in &b.payloads {
            bits.push(neg as u64, 1);
            bits.push(mant as u64, bt.fmt.man_bits + 1);
        }
    }
    out.extend_from_slice(&bits.finish());
    out
}

pub fn from_bytes(bytes: &[u8]) -> Result<BfpTensor, BfpError> {
    let bad = |s: &str| BfpError::Malformed(s.to_string());
    if bytes.len() < 15 || &bytes[0..4] != MAGIC {
        return Err(bad("missing BFPT header"));
    }
    if bytes[4] != 1 {
        return Err(bad("unsupported container version"));
    }
    let fmt = FpFormat::new(
        &format!("{{1,{},{}}}", bytes[5], bytes[6]),
        bytes[5] as u32,
        bytes[6] as u32,
    )?;
    let fmt = crate::minifloat::catalog()
        .into_iter()
        .find(|c| c.exp_bits == fmt.exp_bits && c.man_bits == fmt.man_bits)
        .unwrap_or(fmt);
    let rd4 = |o: usize| -> Result<u32, BfpError> {
        bytes
            .get(o..o + 4)
            .map(|b| u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .ok_or_else(|| bad("truncated header"))
    };
    let k = rd4(7)? as usize;
    if k == 0 {
        return Err(bad("group size 0"));
    }
    let rank = rd4(11)? as usize;
    let mut shape = Vec::with_capacity(rank);
    for i in 0..rank {
        shape.push(rd4(15 + 4 * i)? as usize);
    }
    let body = &bytes[15 + 4 * rank..];
    let t = Tensor::zeros(shape.clone());
    let blocks_total = t.channel_len().div_ceil(k) * t.channels();
    let block_bits = fmt.exp_bits as u64 + k as u64 * (2 + fmt.man_bits as u64);
    if (body.len() as u64) * 8 < blocks_total as u64 * block_bits {
        return Err(bad("truncated payload"));
    }
    let mut bits = BitReader::new(body);
    let bias = fmt.bias();
    let mut blocks = Vec::with_capacity(blocks_total);
    for _ in 0..blocks_total {
        let es = bits.pull(fmt.exp_bits) as i32 - bias;
        let mut payloads = Vec::with_capacity(k);
        for _ in 0..k {
            let neg = bits.pull(1) == 1;
            let mant = bits.pull(fmt.man_bits + 1) as u32;
            payloads.push((neg, mant));
        }
        blocks.push(BfpBlock { shared_exp: es, payloads });
    }
    Ok(BfpTensor {
        shape,
        fmt: fmt.clone(),
        k,
        blocks,
        total_bits: bfp_bit_size(t.len(), &fmt, k),
    })
}

struct BitWriter {
    out: Vec<u8>,
    acc: u64,
    used: u32,
}

impl BitWriter {
    fn new() -> Self {
        BitWriter { out: Vec::new(), acc: 0, used: 0 }
    }

    fn push(&mut self, value: u64, width: u32) {
        debug_assert!(width <= 57 && value < (1u64 << width));
        self.acc |= value << self.used;
        self.used += width;
        while self.used >= 8 {
            self.out.push((self.acc & 0xff) as u8);
            self.acc >>= 8;
            self.used -= 8;
        }
    }

    fn finish(mut self) -> Vec<u8> {
        if self.used > 0 {
            self.out.push((self.acc & 0xff) as u8);
        }
        self.out
    }
}

struct BitReader<'a> {
    bytes: &'a [u8],
    pos: usize,
    acc: u64,
    avail: u32,
}

impl<'a> BitReader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        BitReader { bytes, pos: 0, acc: 0, avail: 0 }
    }

    fn pull(&mut self, width: u32) -> u64 {
        while self.avail < width {
            let b = self.bytes.get(self.pos).copied().unwrap_or(0);
            self.pos += 1;
            self.acc |= (b as u64) << self.avail;
            self.avail += 8;
        }
        let v = self.acc & ((1u64 << width) - 1);
        self.acc >>= width;
        self.avail -= width;
        v
    }
}
