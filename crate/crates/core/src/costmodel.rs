//! Analytical cycle / memory-traffic / energy model for the three
//! normalization hardware schedules (conventional BN, restructured BN,
//! range/lightnorm).
//!
//! The model is a streaming-pass abstraction: each pass touches every element
//! of the layer once at `lanes` elements per cycle. Pass counts are structural
//! (conventional forward 3, restructured 2, range 2, every backward 2).
//! Forward fetches are assumed fully overlapped with compute (no stall term);
//! backward adds a fetch-stall term `read_bits / dram_bandwidth`, which is
//! where the narrow-format advantage shows up. Both readings of "cycles"
//! (compute-only vs stall-inclusive) are reported separately.
//!
//! All constants live in [`Calibration`] / [`HwParams`] — they are calibration
//! values, not measured ground truth, and only ratios are asserted in tests.

use crate::bfp::bfp_bit_size;
use crate::minifloat::{fp10a, fp10b, fp32, FpFormat};
use crate::norm::Variant;
use std::collections::BTreeMap;

#[derive(Debug)]
pub enum CostError {
    BadSpec(String),
    MissingCalibration(String),
    Io(std::io::Error),
    Json(serde_json::Error),
}

impl std::fmt::Display for CostError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CostError::BadSpec(s) => write!(f, "bad layer/hw spec: {s}"),
            CostError::MissingCalibration(s) => {
                write!(f, "no op-energy calibration entry for format '{s}'")
            }
            CostError::Io(e) => write!(f, "io error: {e}"),
            CostError::Json(e) => write!(f, "json error: {e}"),
        }
    }
}

impl std::error::Error for CostError {}

impl From<std::io::Error> for CostError {
    fn from(e: std::io::Error) -> Self {
        CostError::Io(e)
    }
}

impl From<serde_json::Error> for CostError {
    fn from(e: serde_json::Error) -> Self {
        CostError::Json(e)
    }
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct HwParams {
    /// Channels processed in parallel.
    pub lanes: u64,
    pub clock_mhz: f64,
    pub dram_energy_per_bit_pj: f64,
    pub dram_bandwidth_bits_per_cycle: u64,
    /// Pass-through constant for report completeness (SRAM traffic is not
    /// part of the pass model).
    pub sram_energy_per_bit_pj: f64,
    pub dram_bus_bits: u64,
}

impl Default for HwParams {
    fn default() -> Self {
        HwParams {
            lanes: 32,
            clock_mhz: 150.0,
            dram_energy_per_bit_pj: 40.0,
            dram_bandwidth_bits_per_cycle: 640,
            sram_energy_per_bit_pj: 0.61,
            dram_bus_bits: 256,
        }
    }
}

impl HwParams {
    pub fn validate(&self) -> Result<(), CostError> {
        if self.lanes == 0
            || self.dram_bandwidth_bits_per_cycle == 0
            || self.clock_mhz <= 0.0
            || self.dram_energy_per_bit_pj < 0.0
        {
            return Err(CostError::BadSpec("hw params must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct LayerSpec {
    pub b: usize,
    pub c: usize,
    pub h: usize,
    pub w: usize,
    pub fw_format: FpFormat,
    pub bw_format: FpFormat,
    /// BFP group size (lightnorm storage).
    pub group: usize,
}

impl LayerSpec {
    /// Dimensions with FP32 both ways (the conventional-BN storage widths).
    pub fn new(b: usize, c: usize, h: usize, w: usize) -> Self {
        LayerSpec { b, c, h, w, fw_format: fp32(), bw_format: fp32(), group: 4 }
    }

    pub fn elements(&self) -> u64 {
        (self.b * self.c * self.h * self.w) as u64
    }

    /// Storage formats the variant's hardware uses (FP32 for the BN
    /// schedules, the layer's narrow formats for lightnorm).
    pub fn with_variant_formats(mut self, variant: Variant) -> Self {
        match variant {
            Variant::Conventional | Variant::Restructured | Variant::Range => {
                self.fw_format = fp32();
                self.bw_format = fp32();
            }
            Variant::Lightnorm => {
                self.fw_format = fp10a();
                self.bw_format = fp10b();
            }
        }
        self
    }
}

/// Per-element datapath energies by format key, from the calibration file.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct Calibration {
    pub note: String,
    pub op_energy_pj: BTreeMap<String, f64>,
}

impl Calibration {
    /// The calibration shipped with the crate (`data/calibration.json`).
    pub fn builtin() -> Self {
        serde_json::from_str(include_str!("../data/calibration.json"))
            .expect("bundled calibration parses")
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self, CostError> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn op_energy(&self, fmt: &FpFormat) -> Result<f64, CostError> {
        self.op_energy_pj
            .get(&fmt.key())
            .copied()
            .ok_or_else(|| CostError::MissingCalibration(fmt.name.clone()))
    }
}

/// Structural pass counts over the tensor.
pub fn fw_passes(variant: Variant) -> u64 {
    match variant {
        Variant::Conventional => 3,
        Variant::Restructured | Variant::Range | Variant::Lightnorm => 2,
    }
}

pub fn bw_passes(_variant: Variant) -> u64 {
    2
}

/// Full-tensor DRAM reads of the input during forward (the fused-statistics
/// variants fetch X once; conventional BN fetches it again for the
/// normalization pass).
fn fw_dram_reads(variant: Variant) -> u64 {
    match variant {
        Variant::Conventional => 2,
        _ => 1,
    }
}

/// Bits a tensor of `n` elements occupies in DRAM under the variant's storage.
fn storage_bits(variant: Variant, n: u64, fmt: &FpFormat, k: usize) -> u64 {
    match variant {
        Variant::Lightnorm => bfp_bit_size(n as usize, fmt, k) as u64,
        _ => n * fmt.total_bits() as u64,
    }
}

/// Bits the layer's activations occupy per stored tensor (forward format).
pub fn memory_bits(variant: Variant, layer: &LayerSpec) -> u64 {
    storage_bits(variant, layer.elements(), &layer.fw_format, layer.group)
}

fn compute_cycles(passes: u64, n: u64, hw: &HwParams) -> u64 {
    passes * n.div_ceil(hw.lanes)
}

/// Forward compute cycles: passes × ceil(elements / lanes). Fetches overlap.
pub fn fw_cycles(variant: Variant, layer: &LayerSpec, hw: &HwParams) -> u64 {
    compute_cycles(fw_passes(variant), layer.elements(), hw)
}

/// Backward cycles: 2 passes of compute plus the fetch-stall term for the
/// upstream gradient and the cached activations.
pub fn bw_cycles(variant: Variant, layer: &LayerSpec, hw: &HwParams) -> u64 {
    let n = layer.elements();
    let fetch = storage_bits(variant, n, &layer.bw_format, layer.group)
        + storage_bits(variant, n, &layer.fw_format, layer.group);
    compute_cycles(bw_passes(variant), n, hw) + fetch.div_ceil(hw.dram_bandwidth_bits_per_cycle)
}

#[derive(Debug, Clone, Default, serde::Serialize)]
pub struct PassCost {
    pub compute_cycles: u64,
    pub stall_cycles: u64,
    pub dram_read_bits: u64,
    pub dram_write_bits: u64,
    pub compute_energy_pj: f64,
    pub dram_energy_pj: f64,
}

impl PassCost {
    pub fn energy_pj(&self) -> f64 {
        self.compute_energy_pj + self.dram_energy_pj
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct CostReport {
    pub variant: Variant,
    pub elements: u64,
    pub fw: PassCost,
    pub bw: PassCost,
    pub total_energy_joules: f64,
}

impl CostReport {
    pub fn total_energy_pj(&self) -> f64 {
        self.fw.energy_pj() + self.bw.energy_pj()
    }

    pub fn total_cycles(&self) -> u64 {
        self.fw.compute_cycles + self.fw.stall_cycles + self.bw.compute_cycles + self.bw.stall_cycles
    }

    fn add(&mut self, other: &CostReport) {
        for (a, b) in [(&mut self.fw, &other.fw), (&mut self.bw, &other.bw)] {
            a.compute_cycles += b.compute_cycles;
            a.stall_cycles += b.stall_cycles;
            a.dram_read_bits += b.dram_read_bits;
            a.dram_write_bits += b.dram_write_bits;
            a.compute_energy_pj += b.compute_energy_pj;
            a.dram_energy_pj += b.dram_energy_pj;
        }
        self.elements += other.elements;
        self.total_energy_joules += other.total_energy_joules;
    }
}

/// Full cost decomposition of one layer under one variant.
pub fn energy_report(
    variant: Variant,
    layer: &LayerSpec,
    hw: &HwParams,
    calib: &Calibration,
) -> Result<CostReport, CostError> {
    hw.validate()?;
    let n = layer.elements();
    let fw_bits = storage_bits(variant, n, &layer.fw_format, layer.group);
    let bw_bits = storage_bits(variant, n, &layer.bw_format, layer.group);

    let fw = PassCost {
        compute_cycles: fw_cycles(variant, layer, hw),
        stall_cycles: 0,
        dram_read_bits: fw_dram_reads(variant) * fw_bits,
        dram_write_bits: fw_bits,
        compute_energy_pj: fw_passes(variant) as f64 * n as f64 * calib.op_energy(&layer.fw_format)?,
        dram_energy_pj: ((fw_dram_reads(variant) + 1) * fw_bits) as f64
            * hw.dram_energy_per_bit_pj,
    };
    let bw_read = bw_bits + fw_bits; // upstream gradient + cached activations
    let bw = PassCost {
        compute_cycles: compute_cycles(bw_passes(variant), n, hw),
        stall_cycles: bw_read.div_ceil(hw.dram_bandwidth_bits_per_cycle),
        dram_read_bits: bw_read,
        dram_write_bits: bw_bits,
        compute_energy_pj: bw_passes(variant) as f64 * n as f64 * calib.op_energy(&layer.bw_format)?,
        dram_energy_pj: (bw_read + bw_bits) as f64 * hw.dram_energy_per_bit_pj,
    };
    let total_pj = fw.energy_pj() + bw.energy_pj();
    Ok(CostReport { variant, elements: n, fw, bw, total_energy_joules: total_pj * 1e-12 })
}

/// Aggregate comparison over a suite of layers: per-variant totals (summed
/// cycles, traffic, and energy across the suite).
pub fn benchmark_compare(
    suite: &[LayerSpec],
    variants: &[Variant],
    hw: &HwParams,
    calib: &Calibration,
) -> Result<Vec<CostReport>, CostError> {
    if suite.is_empty() {
        return Err(CostError::BadSpec("empty suite".into()));
    }
    let mut out = Vec::with_capacity(variants.len());
    for &v in variants {
        let mut agg: Option<CostReport> = None;
        for layer in suite {
            let r = energy_report(v, &layer.clone().with_variant_formats(v), hw, calib)?;
            match &mut agg {
                None => agg = Some(r),
                Some(a) => a.add(&r),
            }
        }
        out.push(agg.expect("nonempty suite"));
    }
    Ok(out)
}

/// A bundled network descriptor (`data/suites/*.json`).
#[derive(Debug, Clone, serde::Deserialize)]
pub struct SuiteFile {
    pub network: String,
    pub batch: usize,
    pub layers: Vec<SuiteLayer>,
}

#[derive(Debug, Clone, serde::Deserialize)]
pub struct SuiteLayer {
    pub c: usize,
    pub h: usize,
    pub w: usize,
}

impl SuiteFile {
    pub fn layer_specs(&self) -> Vec<LayerSpec> {
        self.layers.iter().map(|l| LayerSpec::new(self.batch, l.c, l.h, l.w)).collect()
    }
}

/// The four network descriptors shipped with the crate.
pub fn builtin_suites() -> Vec<SuiteFile> {
    [
        include_str!("../data/suites/resnet50.json"),
        include_str!("../data/suites/mobilenet_v1.json"),
        include_str!("../data/suites/mobilenet_v2.json"),
        include_str!("../data/suites/densenet121.json"),
    ]
    .iter()
    .map(|s| serde_json::from_str(s).expect("bundled suite parses"))
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minifloat::fp10b;

    fn defaults() -> (HwParams, Calibration) {
        (HwParams::default(), Calibration::builtin())
    }

    #[test]
    fn fw_cycle_ratios() {
        let hw = HwParams::default();
        let l = LayerSpec::new(128, 96, 8, 8);
        let conv = fw_cycles(Variant::Conventional, &l, &hw) as f64;
        let restr = fw_cycles(Variant::Restructured, &l, &hw) as f64;
        let light =
            fw_cycles(Variant::Lightnorm, &l.clone().with_variant_formats(Variant::Lightnorm), &hw)
                as f64;
        assert_eq!(restr / conv, 2.0 / 3.0);
        assert_eq!(conv / light, 1.5);
        // single element still pays one cycle per pass
        let one = LayerSpec::new(1, 1, 1, 1);
        assert_eq!(fw_cycles(Variant::Conventional, &one, &hw), 3);
        // zero-size layer
        let zero = LayerSpec::new(0, 8, 8, 8);
        assert_eq!(fw_cycles(Variant::Range, &zero, &hw), 0);
        assert_eq!(bw_cycles(Variant::Range, &zero, &hw), 0);
    }

    #[test]
    fn bw_cycle_ratios() {
        let hw = HwParams::default();
        let l = LayerSpec::new(128, 96, 8, 8);
        let conv = bw_cycles(Variant::Conventional, &l, &hw) as f64;
        let restr = bw_cycles(Variant::Restructured, &l, &hw) as f64;
        let light =
            bw_cycles(Variant::Lightnorm, &l.clone().with_variant_formats(Variant::Lightnorm), &hw)
                as f64;
        assert_eq!(conv, restr);
        let ratio = conv / light;
        assert!((1.8..=2.2).contains(&ratio), "bw ratio {ratio}");
    }

    #[test]
    fn memory_bits_formulas() {
        let mut l = LayerSpec::new(1, 1000, 1, 1);
        assert_eq!(memory_bits(Variant::Conventional, &l), 32_000);
        l.fw_format = fp10b();
        l.c = 1024;
        assert_eq!(memory_bits(Variant::Lightnorm, &l), 5632);
        // FP10-A groups of 4: 6.25 bits/elem vs 10 unpacked = 37.5% less
        l.fw_format = fp10a();
        let packed = memory_bits(Variant::Lightnorm, &l) as f64;
        let unpacked = memory_bits(Variant::Range, &l) as f64;
        assert_eq!(1.0 - packed / unpacked, 0.375);
    }

    #[test]
    fn rn_fw_energy_saving_band() {
        let (hw, calib) = defaults();
        // memory-heavy layer: early high-resolution feature map
        let l = LayerSpec::new(128, 32, 32, 32);
        let conv = energy_report(Variant::Conventional, &l, &hw, &calib).unwrap();
        let rn = energy_report(Variant::Range, &l, &hw, &calib).unwrap();
        let saving = 1.0 - rn.fw.energy_pj() / conv.fw.energy_pj();
        assert!((0.25..=0.40).contains(&saving), "saving {saving}");
        // RN drops exactly one full-tensor read
        assert_eq!(
            conv.fw.dram_read_bits - rn.fw.dram_read_bits,
            l.elements() * 32
        );
    }

    #[test]
    fn epoch_compute_energy_ratio_over_suites() {
        // datapath (compute-term) energy across the four bundled networks:
        // FP32 BN vs the narrow-format schedule. DRAM-inclusive totals are
        // bounded by the traffic ratio (~6.5x) and are asserted separately.
        let (hw, calib) = defaults();
        for suite in builtin_suites() {
            let reports = benchmark_compare(
                &suite.layer_specs(),
                &[Variant::Conventional, Variant::Lightnorm],
                &hw,
                &calib,
            )
            .unwrap();
            let conv = reports[0].fw.compute_energy_pj + reports[0].bw.compute_energy_pj;
            let light = reports[1].fw.compute_energy_pj + reports[1].bw.compute_energy_pj;
            assert!(conv / light >= 10.0, "{}: {}", suite.network, conv / light);
            let total_ratio = reports[0].total_energy_pj() / reports[1].total_energy_pj();
            assert!(total_ratio > 4.0, "{}: {}", suite.network, total_ratio);
        }
    }

    #[test]
    fn suite_fw_ratio_averages_near_1p5() {
        let (hw, calib) = defaults();
        for suite in builtin_suites() {
            let reports = benchmark_compare(
                &suite.layer_specs(),
                &[Variant::Conventional, Variant::Lightnorm],
                &hw,
                &calib,
            )
            .unwrap();
            let r = reports[0].fw.compute_cycles as f64 / reports[1].fw.compute_cycles as f64;
            assert!((1.275..=1.725).contains(&r), "{}: {}", suite.network, r);
        }
    }

    #[test]
    fn linearity_and_lane_scaling() {
        let (mut hw, calib) = defaults();
        let l1 = LayerSpec::new(32, 64, 8, 8);
        let l2 = LayerSpec::new(32, 64, 16, 8);
        assert_eq!(
            2 * fw_cycles(Variant::Conventional, &l1, &hw),
            fw_cycles(Variant::Conventional, &l2, &hw)
        );
        let before = fw_cycles(Variant::Conventional, &l1, &hw);
        hw.lanes *= 2;
        assert_eq!(fw_cycles(Variant::Conventional, &l1, &hw) * 2, before);
        // zero-DRAM-energy config: energy reduces to the compute term
        hw.dram_energy_per_bit_pj = 0.0;
        let r = energy_report(Variant::Conventional, &l1, &hw, &calib).unwrap();
        assert_eq!(r.total_energy_pj(), r.fw.compute_energy_pj + r.bw.compute_energy_pj);
    }

    #[test]
    fn missing_calibration_entry_errors() {
        let (hw, calib) = defaults();
        let mut l = LayerSpec::new(1, 8, 1, 1);
        l.fw_format = FpFormat::new("FP7", 3, 3).unwrap();
        let err = energy_report(Variant::Range, &l, &hw, &calib).unwrap_err();
        assert!(matches!(err, CostError::MissingCalibration(_)));
    }
}
