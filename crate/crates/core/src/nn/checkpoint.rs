//! Binary parameter blobs: magic `BMCK`, `u32` version, `u32` tensor count,
//! a shape table (`u32` rank followed by `u32` dims per tensor), then every
//! value as a little-endian `f64`, tensors in table order.

use std::path::Path;

use crate::bytes::{put_f64, put_u32, Reader};
use crate::error::{FormatError, Result};
use crate::scalar::Scalar;

use super::{Parameterized, Tensor};

pub const MAGIC: [u8; 4] = *b"BMCK";
pub const VERSION: u32 = 1;

pub fn encode<T: Scalar>(tensors: &[&Tensor<T>]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&MAGIC);
    put_u32(&mut out, VERSION);
    put_u32(&mut out, tensors.len() as u32);
    for t in tensors {
        put_u32(&mut out, t.shape().len() as u32);
        for &d in t.shape() {
            put_u32(&mut out, d as u32);
        }
    }
    for t in tensors {
        for v in &t.values {
            put_f64(&mut out, v.as_f64());
        }
    }
    out
}

/// Decodes into `(shape, values)` pairs.
pub fn decode(bytes: &[u8]) -> Result<Vec<(Vec<usize>, Vec<f64>)>> {
    let mut r = Reader::new(bytes);
    r.magic(MAGIC)?;
    let version = r.u32()?;
    if version != VERSION {
        return Err(FormatError::UnsupportedVersion {
            found: version,
            expected: VERSION,
        }
        .into());
    }
    let count = r.u32()? as usize;
    let mut shapes = Vec::with_capacity(count.min(1024));
    for _ in 0..count {
        let rank = r.u32()? as usize;
        let mut shape = Vec::with_capacity(rank.min(8));
        for _ in 0..rank {
            shape.push(r.u32()? as usize);
        }
        shapes.push(shape);
    }
    let mut out = Vec::with_capacity(shapes.len());
    for shape in shapes {
        let n: usize = shape.iter().product();
        let mut values = Vec::with_capacity(n.min(r.remaining() / 8));
        for _ in 0..n {
            values.push(r.f64()?);
        }
        out.push((shape, values));
    }
    if r.remaining() != 0 {
        return Err(FormatError::Inconsistent(format!(
            "{} trailing bytes after offset {}",
            r.remaining(),
            r.offset()
        ))
        .into());
    }
    Ok(out)
}

/// Copies decoded values into a model whose architecture is already built.
pub fn restore<T: Scalar, M: Parameterized<T> + ?Sized>(model: &mut M, bytes: &[u8]) -> Result<()> {
    let decoded = decode(bytes)?;
    let mut params = model.parameters_mut();
    if decoded.len() != params.len() {
        return Err(FormatError::Inconsistent(format!(
            "checkpoint has {} tensors, model has {}",
            decoded.len(),
            params.len()
        ))
        .into());
    }
    for (i, (p, (shape, values))) in params.iter_mut().zip(decoded).enumerate() {
        if p.shape() != shape.as_slice() {
            return Err(FormatError::Inconsistent(format!(
                "tensor {i}: checkpoint shape {shape:?}, model shape {:?}",
                p.shape()
            ))
            .into());
        }
        for (dst, v) in p.values.iter_mut().zip(values) {
            *dst = T::lit(v);
        }
    }
    Ok(())
}

pub fn save<T: Scalar, M: Parameterized<T> + ?Sized>(model: &M, path: &Path) -> Result<()> {
    std::fs::write(path, encode(&model.parameters()))?;
    Ok(())
}

pub fn load_into<T: Scalar, M: Parameterized<T> + ?Sized>(
    model: &mut M,
    path: &Path,
) -> Result<()> {
    let bytes = std::fs::read(path)?;
    restore(model, &bytes)
}
