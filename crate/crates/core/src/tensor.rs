//! Minimal dense tensor with a channel convention and raw-file interchange.
//!
//! Layout is row-major. The channel axis is axis 1 for rank >= 2 (so `(B, C, H,
//! W)` and `(N, C)` both put channels second); rank-0/1 tensors are a single
//! channel. Interchange format: raw little-endian `f32` values plus a JSON
//! sidecar `{"shape": [...]}` at `<path>.shape.json`.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

#[derive(Debug)]
pub enum TensorError {
    Io(std::io::Error),
    Json(serde_json::Error),
    Shape(String),
}

impl std::fmt::Display for TensorError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TensorError::Io(e) => write!(f, "io error: {e}"),
            TensorError::Json(e) => write!(f, "sidecar error: {e}"),
            TensorError::Shape(s) => write!(f, "shape error: {s}"),
        }
    }
}

impl std::error::Error for TensorError {}

impl From<std::io::Error> for TensorError {
    fn from(e: std::io::Error) -> Self {
        TensorError::Io(e)
    }
}

impl From<serde_json::Error> for TensorError {
    fn from(e: serde_json::Error) -> Self {
        TensorError::Json(e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self, TensorError> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(TensorError::Shape(format!(
                "shape {:?} holds {} elements, got {}",
                shape,
                n,
                data.len()
            )));
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Tensor { shape, data: vec![0.0; n] }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Number of channels (axis 1; 1 for rank < 2).
    pub fn channels(&self) -> usize {
        if self.shape.len() >= 2 {
            self.shape[1]
        } else {
            1
        }
    }

    /// Elements per channel.
    pub fn channel_len(&self) -> usize {
        let c = self.channels();
        if c == 0 {
            0
        } else {
            self.len() / c
        }
    }

    /// Flat indices of channel `c` in raster order (outer axis first, then the
    /// axes after the channel axis). This is the streaming order every
    /// sequential accumulation in the crate uses.
    pub fn channel_indices(&self, c: usize) -> impl Iterator<Item = usize> + '_ {
        let (outer, chans, inner) = if self.shape.len() >= 2 {
            (
                self.shape[0],
                self.shape[1],
                self.shape[2..].iter().product::<usize>(),
            )
        } else {
            (1, 1, self.len())
        };
        assert!(c < chans, "channel {c} out of {chans}");
        (0..outer).flat_map(move |b| (0..inner).map(move |i| (b * chans + c) * inner + i))
    }

    /// Values of channel `c` in raster order.
    pub fn channel_values(&self, c: usize) -> Vec<f64> {
        self.channel_indices(c).map(|i| self.data[i]).collect()
    }

    fn sidecar_path(path: &Path) -> PathBuf {
        let mut os = path.as_os_str().to_owned();
        os.push(".shape.json");
        PathBuf::from(os)
    }

    /// Read raw little-endian f32 data with its JSON shape sidecar.
    pub fn read_raw(path: &Path) -> Result<Self, TensorError> {
        #[derive(serde::Deserialize)]
        struct Sidecar {
            shape: Vec<usize>,
        }
        let sidecar: Sidecar = serde_json::from_str(&fs::read_to_string(Self::sidecar_path(path))?)?;
        let mut bytes = Vec::new();
        fs::File::open(path)?.read_to_end(&mut bytes)?;
        if bytes.len() % 4 != 0 {
            return Err(TensorError::Shape(format!(
                "raw file length {} is not a multiple of 4",
                bytes.len()
            )));
        }
        let data: Vec<f64> = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect();
        Tensor::new(sidecar.shape, data)
    }

    /// Write raw little-endian f32 data and the JSON shape sidecar.
    pub fn write_raw(&self, path: &Path) -> Result<(), TensorError> {
        let mut f = fs::File::create(path)?;
        for &v in &self.data {
            f.write_all(&(v as f32).to_le_bytes())?;
        }
        let sidecar = serde_json::json!({ "shape": self.shape });
        fs::write(Self::sidecar_path(path), serde_json::to_string_pretty(&sidecar)?)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn channel_order_is_channel_major_raster() {
        // (B, C, H, W) = (2, 2, 1, 2)
        let t = Tensor::new(vec![2, 2, 1, 2], (0..8).map(f64::from).collect()).unwrap();
        assert_eq!(t.channel_values(0), vec![0.0, 1.0, 4.0, 5.0]);
        assert_eq!(t.channel_values(1), vec![2.0, 3.0, 6.0, 7.0]);
    }

    #[test]
    fn two_d_channels_are_columns() {
        let t = Tensor::new(vec![3, 2], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(t.channel_values(0), vec![1.0, 3.0, 5.0]);
        assert_eq!(t.channel_values(1), vec![2.0, 4.0, 6.0]);
    }

    #[test]
    fn raw_round_trip() {
        let dir = std::env::temp_dir().join("lightnorm-tensor-test");
        fs::create_dir_all(&dir).unwrap();
        let p = dir.join("t.raw");
        let t = Tensor::new(vec![2, 3], vec![0.5, -1.25, 3.0, 0.0, 7.5, -0.125]).unwrap();
        t.write_raw(&p).unwrap();
        let u = Tensor::read_raw(&p).unwrap();
        assert_eq!(t, u);
    }
}
