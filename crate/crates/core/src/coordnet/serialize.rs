//! Little-endian binary format:
//!
//! ```text
//! "DYNO" | version u32 | activation tag u8 | omega f64 | layer count u32
//! per layer: rows u32 | cols u32 | rows*cols f64 weights (row-major) | rows f64 biases
//! per input component: shift f64 | scale f64
//! ```

use nalgebra::DVector;

use super::network::Layer;
use super::{Activation, ActivationKind, Network};
use crate::{Error, Matrix, Result};

pub const MAGIC: &[u8; 4] = b"DYNO";
pub const FORMAT_VERSION: u32 = 1;

pub fn save(net: &Network) -> Vec<u8> {
    let mut out = Vec::with_capacity(32 + 8 * (net.parameter_count() + 2 * net.input_dim()));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.push(net.activation.kind.tag());
    out.extend_from_slice(&net.activation.omega.to_le_bytes());
    out.extend_from_slice(&(net.layers.len() as u32).to_le_bytes());
    for layer in &net.layers {
        out.extend_from_slice(&(layer.outputs() as u32).to_le_bytes());
        out.extend_from_slice(&(layer.inputs() as u32).to_le_bytes());
        for r in 0..layer.outputs() {
            for c in 0..layer.inputs() {
                out.extend_from_slice(&layer.weights[(r, c)].to_le_bytes());
            }
        }
        for b in layer.bias.iter() {
            out.extend_from_slice(&b.to_le_bytes());
        }
    }
    for (s, c) in net.input_shift.iter().zip(&net.input_scale) {
        out.extend_from_slice(&s.to_le_bytes());
        out.extend_from_slice(&c.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Deserialize(format!("truncated while reading {what} at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes")))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes")))
    }
}

pub fn load(bytes: &[u8]) -> Result<Network> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4, "magic")? != MAGIC {
        return Err(Error::Deserialize("bad magic".into()));
    }
    let version = r.u32("version")?;
    if version != FORMAT_VERSION {
        return Err(Error::Deserialize(format!("unsupported format version {version}")));
    }
    let tag = r.take(1, "activation tag")?[0];
    let kind =
        ActivationKind::from_tag(tag).ok_or_else(|| Error::Deserialize(format!("unknown activation tag {tag}")))?;
    let omega = r.f64("omega")?;
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::Deserialize(format!("invalid bandwidth {omega}")));
    }
    let count = r.u32("layer count")? as usize;
    if count == 0 {
        return Err(Error::Deserialize("network has no layers".into()));
    }
    let mut layers: Vec<Layer> = Vec::with_capacity(count.min(1024));
    for l in 0..count {
        let rows = r.u32("rows")? as usize;
        let cols = r.u32("cols")? as usize;
        if rows == 0 || cols == 0 {
            return Err(Error::Deserialize(format!("layer {l} has an empty shape")));
        }
        if let Some(prev) = layers.last() {
            if prev.outputs() != cols {
                return Err(Error::Deserialize(format!(
                    "layer {l} expects {cols} inputs but the previous layer has {} outputs",
                    prev.outputs()
                )));
            }
        }
        let len = rows.checked_mul(cols).ok_or_else(|| Error::Deserialize("layer too large".into()))?;
        // Check the payload exists before allocating.
        if r.bytes.len().saturating_sub(r.pos) / 8 < len + rows {
            return Err(Error::Deserialize(format!("truncated in layer {l}")));
        }
        let mut data = Vec::with_capacity(len);
        for _ in 0..len {
            data.push(r.f64("weights")?);
        }
        let mut bias = Vec::with_capacity(rows);
        for _ in 0..rows {
            bias.push(r.f64("biases")?);
        }
        layers.push(Layer { weights: Matrix::from_row_slice(rows, cols, &data), bias: DVector::from_vec(bias) });
    }
    let n0 = layers[0].inputs();
    let mut input_shift = Vec::with_capacity(n0);
    let mut input_scale = Vec::with_capacity(n0);
    for _ in 0..n0 {
        input_shift.push(r.f64("input shift")?);
        input_scale.push(r.f64("input scale")?);
    }
    if r.pos != bytes.len() {
        return Err(Error::Deserialize(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    Ok(Network { layers, activation: Activation { kind, omega }, input_shift, input_scale })
}
