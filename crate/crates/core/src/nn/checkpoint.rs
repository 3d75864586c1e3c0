//! Binary checkpoints: an 8-byte little-endian header length, a JSON header,
//! then every parameter as little-endian IEEE-754 in the scalar's native width.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::mlp::Mlp;
use crate::error::{CoreError, Result};
use crate::scalar::Scalar;

const FORMAT: &str = "lare-mlp";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub format: String,
    pub version: u32,
    pub dtype: String,
    pub sizes: Vec<usize>,
    pub n_params: usize,
    pub seed: u64,
    pub step: u64,
}

fn dtype_of<S>() -> &'static str {
    match std::mem::size_of::<S>() {
        4 => "f32",
        _ => "f64",
    }
}

pub fn save_checkpoint<S: Scalar, W: Write>(
    net: &Mlp<S>,
    seed: u64,
    step: u64,
    mut w: W,
) -> Result<()> {
    let header = CheckpointHeader {
        format: FORMAT.into(),
        version: 1,
        dtype: dtype_of::<S>().into(),
        sizes: net.sizes().to_vec(),
        n_params: net.n_params(),
        seed,
        step,
    };
    let json = serde_json::to_vec(&header)?;
    w.write_all(&(json.len() as u64).to_le_bytes())?;
    w.write_all(&json)?;
    for p in net.params() {
        match header.dtype.as_str() {
            "f32" => w.write_all(&(p.f64() as f32).to_le_bytes())?,
            _ => w.write_all(&p.f64().to_le_bytes())?,
        }
    }
    Ok(())
}

pub fn load_checkpoint<S: Scalar, R: Read>(mut r: R) -> Result<(Mlp<S>, CheckpointHeader)> {
    let mut len = [0u8; 8];
    r.read_exact(&mut len)?;
    let len = u64::from_le_bytes(len) as usize;
    if len > 1 << 20 {
        return Err(CoreError::Checkpoint(format!("header length {len} too large")));
    }
    let mut json = vec![0u8; len];
    r.read_exact(&mut json)?;
    let header: CheckpointHeader = serde_json::from_slice(&json)?;
    if header.format != FORMAT {
        return Err(CoreError::Checkpoint(format!("unknown format {}", header.format)));
    }
    if header.dtype != dtype_of::<S>() {
        return Err(CoreError::Checkpoint(format!(
            "checkpoint holds {}, requested {}",
            header.dtype,
            dtype_of::<S>()
        )));
    }
    let mut params = Vec::with_capacity(header.n_params);
    for _ in 0..header.n_params {
        let v = if header.dtype == "f32" {
            let mut b = [0u8; 4];
            r.read_exact(&mut b)?;
            f32::from_le_bytes(b) as f64
        } else {
            let mut b = [0u8; 8];
            r.read_exact(&mut b)?;
            f64::from_le_bytes(b)
        };
        params.push(S::c(v));
    }
    let net = Mlp::from_params(&header.sizes, params)?;
    Ok((net, header))
}
