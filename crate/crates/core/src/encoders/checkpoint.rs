//! Binary parameter checkpoints.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "HGCL1"
//! u8  variant          0 = gcn-mlp, 1 = gcn-gcn, 2 = mlp-mlp
//! per view (2):
//!   u8  kind           0 = gcn, 1 = mlp
//!   u8  final_activation
//!   u32 layers
//!   per tensor: u64 rows, u64 cols
//! f64 data for every tensor, row-major, in the order listed above
//! ```
//!
//! Tensor order per view is the GCN weight stack, or MLP weights followed by MLP biases.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{DualEncoder, Encoder, GcnParams, MlpParams, Variant};
use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;

pub const CHECKPOINT_MAGIC: &[u8; 5] = b"HGCL1";

fn io_err(e: std::io::Error) -> Error {
    Error::Checkpoint(e.to_string())
}

pub fn write_checkpoint<W: Write>(model: &DualEncoder, mut w: W) -> Result<()> {
    w.write_all(CHECKPOINT_MAGIC).map_err(io_err)?;
    let variant: u8 = match model.variant {
        Variant::GcnMlp => 0,
        Variant::GcnGcn => 1,
        Variant::MlpMlp => 2,
    };
    w.write_all(&[variant]).map_err(io_err)?;
    for view in &model.views {
        let (kind, final_act, layers) = match view {
            Encoder::Gcn(p) => (0u8, p.final_activation as u8, p.layers()),
            Encoder::Mlp(p) => (1u8, 0u8, p.layers()),
        };
        w.write_all(&[kind, final_act]).map_err(io_err)?;
        w.write_all(&(layers as u32).to_le_bytes()).map_err(io_err)?;
        for t in view.tensors() {
            w.write_all(&(t.rows() as u64).to_le_bytes()).map_err(io_err)?;
            w.write_all(&(t.cols() as u64).to_le_bytes()).map_err(io_err)?;
        }
    }
    for t in model.tensors() {
        for v in t.as_slice() {
            w.write_all(&v.to_le_bytes()).map_err(io_err)?;
        }
    }
    w.flush().map_err(io_err)
}

fn read_array<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf).map_err(io_err)?;
    Ok(buf)
}

struct ViewHeader {
    kind: u8,
    final_activation: bool,
    shapes: Vec<(usize, usize)>,
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<DualEncoder> {
    let magic: [u8; 5] = read_array(&mut r)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(Error::Checkpoint("bad magic bytes".into()));
    }
    let variant = match read_array::<1, _>(&mut r)?[0] {
        0 => Variant::GcnMlp,
        1 => Variant::GcnGcn,
        2 => Variant::MlpMlp,
        other => return Err(Error::Checkpoint(format!("unknown variant tag {other}"))),
    };
    let mut headers = Vec::with_capacity(2);
    for _ in 0..2 {
        let [kind, final_act] = read_array::<2, _>(&mut r)?;
        let layers = u32::from_le_bytes(read_array(&mut r)?) as usize;
        let tensors = match kind {
            0 => layers,
            1 => 2 * layers,
            other => return Err(Error::Checkpoint(format!("unknown encoder kind {other}"))),
        };
        let mut shapes = Vec::with_capacity(tensors);
        for _ in 0..tensors {
            let rows = u64::from_le_bytes(read_array(&mut r)?) as usize;
            let cols = u64::from_le_bytes(read_array(&mut r)?) as usize;
            shapes.push((rows, cols));
        }
        headers.push(ViewHeader {
            kind,
            final_activation: final_act != 0,
            shapes,
        });
    }

    let mut views = Vec::with_capacity(2);
    for h in headers {
        let mut tensors = Vec::with_capacity(h.shapes.len());
        for &(rows, cols) in &h.shapes {
            let mut data = Vec::with_capacity(rows * cols);
            for _ in 0..rows * cols {
                data.push(f64::from_le_bytes(read_array(&mut r)?));
            }
            tensors.push(DenseMatrix::from_vec(rows, cols, data)?);
        }
        let view = if h.kind == 0 {
            Encoder::Gcn(GcnParams::new(tensors, h.final_activation)?)
        } else {
            let biases = tensors.split_off(tensors.len() / 2);
            Encoder::Mlp(MlpParams::new(tensors, biases)?)
        };
        views.push(view);
    }
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing).map_err(io_err)? != 0 {
        return Err(Error::Checkpoint("trailing bytes after tensor data".into()));
    }
    let [a, b]: [Encoder; 2] = views.try_into().expect("two views");
    Ok(DualEncoder {
        variant,
        views: [a, b],
    })
}

pub fn save_checkpoint(model: &DualEncoder, path: &Path) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    write_checkpoint(model, BufWriter::new(f))
}

pub fn load_checkpoint(path: &Path) -> Result<DualEncoder> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    read_checkpoint(BufReader::new(f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoders::EncoderDims;

    #[test]
    fn round_trip_every_variant() {
        let dims = EncoderDims {
            input_dim: 4,
            hidden_dim: 3,
            gcn_layers: 2,
            mlp_layers: 2,
            final_activation: true,
        };
        for v in Variant::ALL {
            let model = DualEncoder::new(v, &dims, 9).unwrap();
            let mut buf = Vec::new();
            write_checkpoint(&model, &mut buf).unwrap();
            assert_eq!(&buf[..5], b"HGCL1");
            let back = read_checkpoint(buf.as_slice()).unwrap();
            assert_eq!(back.variant, model.variant);
            let a: Vec<_> = model.tensors().into_iter().cloned().collect();
            let b: Vec<_> = back.tensors().into_iter().cloned().collect();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn corrupt_input() {
        assert!(read_checkpoint(&b"HGCL2"[..]).is_err());
        let dims = EncoderDims {
            input_dim: 2,
            hidden_dim: 2,
            gcn_layers: 1,
            mlp_layers: 1,
            final_activation: false,
        };
        let model = DualEncoder::new(Variant::GcnMlp, &dims, 1).unwrap();
        let mut buf = Vec::new();
        write_checkpoint(&model, &mut buf).unwrap();
        assert!(read_checkpoint(&buf[..buf.len() - 1]).is_err());
        buf.push(0);
        assert!(read_checkpoint(buf.as_slice()).is_err());
    }
}
