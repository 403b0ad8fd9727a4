//! Binary checkpoint format.
//!
//! ```text
//! offset  size  field
//! 0       8     magic "DKGCKPT1"
//! 8       8     vocab_size   (u64 LE)
//! 16      8     embed_size   (u64 LE)
//! 24      8     hidden_size  (u64 LE)
//! 32      8     feature_size (u64 LE)
//! 40      8     max_len      (u64 LE)
//! 48      8     seed         (u64 LE)
//! 56      8     tensor count (u64 LE, always 35)
//! 64      ...   tensors, f64 LE, row-major, in this order:
//!               embedding (V×E)
//!               encoder W_ii W_if W_ig W_io (H×D), W_hi W_hf W_hg W_ho (H×H),
//!                       b_ii b_if b_ig b_io, b_hi b_hf b_hg b_ho (H)
//!               decoder (same layout, input size E)
//!               output_weights (V×H), output_bias (V)
//! ```

use std::io::{Read, Write};

use super::model::{CaptionModel, ModelDims};
use super::CaptionError;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"DKGCKPT1";

pub fn write_checkpoint<W: Write>(model: &CaptionModel, mut out: W) -> Result<(), CaptionError> {
    let d = &model.dims;
    let tensors = model.params.tensors();
    let mut buf = Vec::with_capacity(64 + 8 * model.params.num_values());
    buf.extend_from_slice(CHECKPOINT_MAGIC);
    for v in [
        d.vocab_size as u64,
        d.embed_size as u64,
        d.hidden_size as u64,
        d.feature_size as u64,
        d.max_len as u64,
        model.seed,
        tensors.len() as u64,
    ] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for (_, t) in tensors {
        for v in t {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn read_checkpoint<R: Read>(mut input: R) -> Result<CaptionModel, CaptionError> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    if bytes.len() < 64 || &bytes[..8] != CHECKPOINT_MAGIC {
        return Err(CaptionError::Checkpoint("missing or wrong magic header".into()));
    }
    let word = |i: usize| u64::from_le_bytes(bytes[8 + 8 * i..16 + 8 * i].try_into().unwrap());
    let as_dim = |v: u64| {
        usize::try_from(v).map_err(|_| CaptionError::Checkpoint(format!("dimension {v} too large")))
    };
    let dims = ModelDims {
        vocab_size: as_dim(word(0))?,
        embed_size: as_dim(word(1))?,
        hidden_size: as_dim(word(2))?,
        feature_size: as_dim(word(3))?,
        max_len: as_dim(word(4))?,
    };
    let seed = word(5);
    let mut model = CaptionModel::zeros(dims)?;
    model.seed = seed;

    let count = word(6);
    let expected_count = model.params.tensors().len() as u64;
    if count != expected_count {
        return Err(CaptionError::Checkpoint(format!(
            "expected {expected_count} tensors, header says {count}"
        )));
    }
    let expected_len = 64 + 8 * model.params.num_values();
    if bytes.len() != expected_len {
        return Err(CaptionError::Checkpoint(format!(
            "expected {expected_len} bytes for the declared dimensions, found {}",
            bytes.len()
        )));
    }

    let mut values = bytes[64..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    for (name, t) in model.params.tensors_mut() {
        for slot in t.iter_mut() {
            let v = values.next().expect("length checked above");
            if !v.is_finite() {
                return Err(CaptionError::Checkpoint(format!("non-finite value in {name}")));
            }
            *slot = v;
        }
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> CaptionModel {
        CaptionModel::new(
            ModelDims {
                vocab_size: 7,
                embed_size: 3,
                hidden_size: 4,
                feature_size: 5,
                max_len: 15,
            },
            77,
        )
        .unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let m = model();
        let mut bytes = Vec::new();
        write_checkpoint(&m, &mut bytes).unwrap();
        assert_eq!(bytes.len(), 64 + 8 * m.params.num_values());
        assert_eq!(&bytes[..8], b"DKGCKPT1");
        assert_eq!(u64::from_le_bytes(bytes[48..56].try_into().unwrap()), 77);
        // First tensor value is embedding[0][0].
        assert_eq!(
            f64::from_le_bytes(bytes[64..72].try_into().unwrap()),
            m.params.embedding.get(0, 0)
        );
        let back = read_checkpoint(bytes.as_slice()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn detects_corruption() {
        let m = model();
        let mut bytes = Vec::new();
        write_checkpoint(&m, &mut bytes).unwrap();
        assert!(read_checkpoint(&bytes[..bytes.len() - 8]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(read_checkpoint(bad.as_slice()).is_err());
        let mut nan = bytes.clone();
        nan[64..72].copy_from_slice(&f64::NAN.to_le_bytes());
        assert!(read_checkpoint(nan.as_slice()).is_err());
    }
}
