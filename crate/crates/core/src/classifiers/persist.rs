//! `MDL1` model container.
//!
//! ```text
//! 0  magic "MDL1"
//! 4  u16 version = 1
//! 6  u8 kind (0 csp-lda, 1 rmdm, 2 cnn)
//! 7  u8 class code x 2
//! 9  kind-specific payload, every tensor as u32 length + f64 values
//! ```

use std::path::Path;

use nalgebra::DMatrix;

use super::{CnnConfig, CnnModel, CnnParams, CnnShape, CspFilters, CspLdaModel, LdaModel, RmdmModel, TrainedModel};
use crate::error::{Error, FormatError, Result};
use crate::format::{write_atomic, ByteReader, ByteWriter};
use crate::linalg::SpdMatrix;
use crate::model::ClassLabel;

pub const MDL_MAGIC: [u8; 4] = *b"MDL1";
pub const MDL_VERSION: u16 = 1;

fn put_matrix(w: &mut ByteWriter, m: &DMatrix<f64>) -> Result<()> {
    w.len_u32(m.nrows())?;
    w.len_u32(m.ncols())?;
    // row-major
    w.f64s(m.transpose().as_slice());
    Ok(())
}

fn get_matrix(r: &mut ByteReader) -> Result<DMatrix<f64>, FormatError> {
    let rows = r.u32()? as usize;
    let cols = r.u32()? as usize;
    let data = r.f64s()?;
    if data.len() != rows * cols {
        return Err(FormatError::ShapeMismatch(format!(
            "{rows}x{cols} matrix with {} values",
            data.len()
        )));
    }
    Ok(DMatrix::from_row_slice(rows, cols, &data))
}

fn get_len(r: &mut ByteReader, expected: usize, what: &str) -> Result<Vec<f64>, FormatError> {
    let v = r.f64s()?;
    if v.len() != expected {
        return Err(FormatError::ShapeMismatch(format!("{what}: {} values, expected {expected}", v.len())));
    }
    Ok(v)
}

fn get_spd(r: &mut ByteReader) -> Result<SpdMatrix, FormatError> {
    // stored matrices were SPD when written; the bit-exact copy still is
    SpdMatrix::new(get_matrix(r)?).map_err(|e| FormatError::Malformed(e.to_string()))
}

fn get_class(r: &mut ByteReader) -> Result<ClassLabel, FormatError> {
    let c = r.u8()?;
    ClassLabel::from_code(c).ok_or_else(|| FormatError::Malformed(format!("class code {c}")))
}

fn get_usize(r: &mut ByteReader) -> Result<usize, FormatError> {
    Ok(r.u32()? as usize)
}

pub fn encode_model(model: &TrainedModel) -> Result<Vec<u8>> {
    let mut w = ByteWriter::default();
    w.bytes(&MDL_MAGIC);
    w.u16(MDL_VERSION);
    w.u8(model.kind().code());
    for c in model.classes() {
        w.u8(c.code());
    }
    match model {
        TrainedModel::CspLda(m) => {
            w.f64(m.shrinkage);
            put_matrix(&mut w, &m.filters.filters)?;
            w.f64s(&m.filters.eigenvalues);
            w.f64s(&m.lda.weights);
            w.f64(m.lda.bias);
        }
        TrainedModel::Rmdm(m) => {
            w.f64(m.shrinkage);
            w.u8(u8::from(m.converged));
            for mean in &m.class_means {
                put_matrix(&mut w, mean.matrix())?;
            }
        }
        TrainedModel::Cnn(m) => {
            let s = &m.shape;
            for v in [s.channels, s.samples, s.f1, s.d, s.f2, s.k1, s.k2, s.pool1, s.pool2] {
                w.len_u32(v)?;
            }
            let c = &m.config;
            for v in [c.temporal_filters, c.depth_multiplier, c.separable_filters, c.separable_kernel, c.pool1, c.pool2, c.epochs, c.batch_size] {
                w.len_u32(v)?;
            }
            for v in [c.temporal_kernel_ms, c.dropout, c.learning_rate, c.momentum] {
                w.f64(v);
            }
            for t in m.params.tensors() {
                w.f64s(t);
            }
            w.f64s(&m.loss_history);
        }
    }
    Ok(w.buf)
}

pub fn decode_model(bytes: &[u8]) -> Result<TrainedModel> {
    let mut r = ByteReader::new(bytes);
    r.magic(MDL_MAGIC)?;
    r.version(MDL_VERSION)?;
    let kind_code = r.u8()?;
    let classes = [get_class(&mut r)?, get_class(&mut r)?];
    let model = match kind_code {
        0 => {
            let shrinkage = r.f64()?;
            let filters = get_matrix(&mut r)?;
            let eigenvalues = get_len(&mut r, filters.nrows(), "CSP eigenvalues")?;
            let weights = get_len(&mut r, filters.nrows(), "LDA weights")?;
            let bias = r.f64()?;
            TrainedModel::CspLda(CspLdaModel {
                filters: CspFilters { filters, eigenvalues },
                lda: LdaModel { weights, bias, classes },
                shrinkage,
            })
        }
        1 => {
            let shrinkage = r.f64()?;
            let converged = r.u8()? != 0;
            let a = get_spd(&mut r)?;
            let b = get_spd(&mut r)?;
            if a.dim() != b.dim() {
                return Err(FormatError::ShapeMismatch("class means differ in dimension".into()).into());
            }
            TrainedModel::Rmdm(RmdmModel::from_means(classes, [a, b], shrinkage, converged))
        }
        2 => {
            let mut dims = [0usize; 9];
            for d in dims.iter_mut() {
                *d = get_usize(&mut r)?;
            }
            let shape = CnnShape {
                channels: dims[0],
                samples: dims[1],
                f1: dims[2],
                d: dims[3],
                f2: dims[4],
                k1: dims[5],
                k2: dims[6],
                pool1: dims[7],
                pool2: dims[8],
            };
            let mut ints = [0usize; 8];
            for v in ints.iter_mut() {
                *v = get_usize(&mut r)?;
            }
            let config = CnnConfig {
                temporal_filters: ints[0],
                depth_multiplier: ints[1],
                separable_filters: ints[2],
                separable_kernel: ints[3],
                pool1: ints[4],
                pool2: ints[5],
                epochs: ints[6],
                batch_size: ints[7],
                temporal_kernel_ms: r.f64()?,
                dropout: r.f64()?,
                learning_rate: r.f64()?,
                momentum: r.f64()?,
            };
            if shape.f1 == 0 || shape.d == 0 || shape.k1 == 0 || shape.k2 == 0 || shape.pool1 == 0 || shape.pool2 == 0 {
                return Err(FormatError::Malformed(format!("degenerate CNN shape {shape:?}")).into());
            }
            let mut params = CnnParams::zeros(&shape);
            for (name, t) in super::PARAM_NAMES.iter().zip(params.tensors_mut()) {
                let n = t.len();
                *t = get_len(&mut r, n, name)?;
            }
            let loss_history = r.f64s()?;
            TrainedModel::Cnn(Box::new(CnnModel {
                classes,
                shape,
                config,
                params,
                loss_history,
            }))
        }
        k => return Err(FormatError::Malformed(format!("model kind {k}")).into()),
    };
    r.finish()?;
    Ok(model)
}

pub fn write_model(model: &TrainedModel, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), &encode_model(model)?)
}

pub fn read_model(path: impl AsRef<Path>) -> Result<TrainedModel> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_model(&bytes)
}
