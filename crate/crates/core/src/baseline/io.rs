//! Model files: the magic `AECGRU01`, a JSON header, then every tensor as
//! little-endian f64 in row-major order. Header offsets count bytes from the
//! first byte after the header.

use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::gru::GruLayer;
use super::model::{GruMaskModel, ModelDims};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"AECGRU01";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
    offset: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Header {
    dims: ModelDims,
    gate_order: String,
    tensors: Vec<TensorEntry>,
}

fn tensor_layout(dims: &ModelDims) -> Vec<(String, Vec<usize>)> {
    let mut out = Vec::new();
    for l in 0..dims.layers {
        let input = if l == 0 { dims.input } else { dims.hidden };
        out.push((format!("layer{}.w_input", l + 1), vec![3 * dims.hidden, input]));
        out.push((format!("layer{}.w_rec", l + 1), vec![3 * dims.hidden, dims.hidden]));
        out.push((format!("layer{}.bias", l + 1), vec![3 * dims.hidden]));
    }
    out.push(("head.weight".into(), vec![dims.bins, dims.head_input()]));
    out.push(("head.bias".into(), vec![dims.bins]));
    out
}

pub fn model_to_bytes(model: &GruMaskModel) -> Result<Vec<u8>> {
    let dims = model.dims();
    let mut offset = 0;
    let tensors = tensor_layout(&dims)
        .into_iter()
        .map(|(name, shape)| {
            let entry = TensorEntry {
                name,
                offset,
                shape: shape.clone(),
            };
            offset += shape.iter().product::<usize>() * 8;
            entry
        })
        .collect();
    let header = Header {
        dims,
        gate_order: "zrn".into(),
        tensors,
    };
    let mut bytes = MAGIC.to_vec();
    serde_json::to_writer(&mut bytes, &header)?;
    for slice in model.slices() {
        for v in slice {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(bytes)
}

pub fn model_from_bytes(bytes: &[u8]) -> Result<GruMaskModel> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(Error::Format("not a model file (bad magic)".into()));
    }
    let rest = &bytes[MAGIC.len()..];
    let mut stream = serde_json::Deserializer::from_slice(rest).into_iter::<Header>();
    let header = match stream.next() {
        Some(Ok(h)) => h,
        Some(Err(e)) => return Err(Error::Format(format!("model header: {e}"))),
        None => return Err(Error::Format("model header missing".into())),
    };
    let data = &rest[stream.byte_offset()..];
    if header.gate_order != "zrn" {
        return Err(Error::Format(format!("unsupported gate order {:?}", header.gate_order)));
    }
    let layout = tensor_layout(&header.dims);
    if layout.len() != header.tensors.len() {
        return Err(Error::Format("tensor list does not match model dims".into()));
    }
    let mut end = 0;
    let mut tensors: Vec<Vec<f64>> = Vec::with_capacity(layout.len());
    for ((name, shape), entry) in layout.iter().zip(&header.tensors) {
        if &entry.name != name || &entry.shape != shape || entry.offset != end {
            return Err(Error::Format(format!("unexpected tensor entry {entry:?}")));
        }
        let len = shape.iter().product::<usize>() * 8;
        let chunk = data
            .get(entry.offset..entry.offset + len)
            .ok_or_else(|| Error::Format(format!("model file truncated inside {name}")))?;
        tensors.push(
            chunk
                .chunks_exact(8)
                .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
                .collect(),
        );
        end += len;
    }
    if data.len() != end {
        return Err(Error::Format(format!("{} trailing bytes after tensors", data.len() - end)));
    }
    let mut tensors = tensors.into_iter();
    let mut next = || tensors.next().expect("layout checked");
    let matrix = |v: Vec<f64>, shape: &[usize]| Array2::from_shape_vec((shape[0], shape[1]), v).expect("shape checked");
    let dims = header.dims;
    let mut layers = Vec::with_capacity(dims.layers);
    for l in 0..dims.layers {
        let w_input = matrix(next(), &layout[3 * l].1);
        let w_rec = matrix(next(), &layout[3 * l + 1].1);
        let bias = Array1::from_vec(next());
        layers.push(GruLayer::from_parts(w_input, w_rec, bias)?);
    }
    let head_weight = matrix(next(), &[dims.bins, dims.head_input()]);
    let head_bias = Array1::from_vec(next());
    let model = GruMaskModel::from_parts(layers, head_weight, head_bias)?;
    let expect = if dims.layers == 0 { ModelDims { hidden: 0, ..dims } } else { dims };
    if model.dims() != expect {
        return Err(Error::Format("header dims disagree with tensors".into()));
    }
    Ok(model)
}

pub fn save_model(model: &GruMaskModel, path: &Path) -> Result<()> {
    std::fs::write(path, model_to_bytes(model)?).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<GruMaskModel> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    model_from_bytes(&bytes).map_err(|e| match e {
        Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
        other => other,
    })
}
