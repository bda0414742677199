//! Binary checkpoint layout, all integers and floats little-endian:
//!
//! ```text
//! magic    8 bytes  "PROPMLCK"
//! version  u32      = 1
//! layers   u32      = 3
//! dims     4 × u64  d, h1, h2, C
//! then per layer l: weights (dims[l] × dims[l+1], f64, row-major), bias (dims[l+1], f64)
//! ```

use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use super::mlp::MlpModel;
use crate::data::write_to_file;
use crate::error::{Error, Result};
use crate::tensor::Matrix;

const MAGIC: &[u8; 8] = b"PROPMLCK";
pub const CHECKPOINT_VERSION: u32 = 1;

pub fn write_model<W: Write>(model: &MlpModel, w: &mut W) -> std::io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    w.write_all(&3u32.to_le_bytes())?;
    for &d in &model.dims {
        w.write_all(&(d as u64).to_le_bytes())?;
    }
    for (weights, bias) in model.weights.iter().zip(&model.biases) {
        for v in weights.as_slice().iter().chain(bias) {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_model<R: Read>(r: &mut R) -> Result<MlpModel> {
    let corrupt = |what: &str| Error::data(format!("checkpoint: {what}"));
    let io = |e: std::io::Error| corrupt(&e.to_string());

    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(io)?;
    if &magic != MAGIC {
        return Err(corrupt("bad magic"));
    }
    let mut word = [0u8; 4];
    r.read_exact(&mut word).map_err(io)?;
    let version = u32::from_le_bytes(word);
    if version != CHECKPOINT_VERSION {
        return Err(corrupt(&format!("unsupported version {version}")));
    }
    r.read_exact(&mut word).map_err(io)?;
    if u32::from_le_bytes(word) != 3 {
        return Err(corrupt("expected 3 layers"));
    }
    let mut dims = [0usize; 4];
    let mut long = [0u8; 8];
    for d in &mut dims {
        r.read_exact(&mut long).map_err(io)?;
        *d =
            usize::try_from(u64::from_le_bytes(long)).map_err(|_| corrupt("dimension overflow"))?;
    }

    let mut read_floats = |n: usize| -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            r.read_exact(&mut long).map_err(io)?;
            out.push(f64::from_le_bytes(long));
        }
        Ok(out)
    };
    let mut weights = Vec::with_capacity(3);
    let mut biases = Vec::with_capacity(3);
    for l in 0..3 {
        weights.push(Matrix::from_vec(
            dims[l],
            dims[l + 1],
            read_floats(dims[l] * dims[l + 1])?,
        )?);
        biases.push(read_floats(dims[l + 1])?);
    }
    if r.read(&mut [0u8; 1]).map_err(io)? != 0 {
        return Err(corrupt("trailing bytes"));
    }
    MlpModel::from_parameters(weights, biases)
}

pub fn save_model(model: &MlpModel, path: impl AsRef<Path>) -> Result<()> {
    write_to_file(path.as_ref(), |w| write_model(model, w))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<MlpModel> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_model(&mut BufReader::new(file))
}
