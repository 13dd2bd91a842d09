//! Model file format.
//!
//! All integers little-endian.
//!
//! ```text
//! "GGRD"                      magic
//! u32                         format version (1)
//! u32 n_classes, u32 input_len, u32 input_channels
//! u32 len, [u8; len]          encoding weights (EncodingWeights::to_bytes)
//! [u8; 32]                    SHA-256 fingerprint of the encoding bytes
//! u32 n_layers
//!   per layer: u8 tag, then u32 fields
//!     1 conv1d   filters kernel stride padding
//!     2 maxpool  window stride
//!     3 flatten
//!     4 dense    units
//! per parameter block (weights then bias, layer order):
//!   u64 count, count x f64
//! [u8; 32]                    SHA-256 of every preceding byte
//! ```

use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::model::{Architecture, LayerSpec, Model};
use super::NnError;
use crate::seq::EncodingWeights;

pub const MAGIC: &[u8; 4] = b"GGRD";
pub const FORMAT_VERSION: u32 = 1;
const CHECKSUM_LEN: usize = 32;

fn put_u32(out: &mut Vec<u8>, v: usize) {
    out.extend_from_slice(&(v as u32).to_le_bytes());
}

pub fn model_to_bytes(model: &Model) -> Vec<u8> {
    let arch = model.architecture();
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    put_u32(&mut out, arch.n_classes);
    put_u32(&mut out, arch.input_len);
    put_u32(&mut out, arch.input_channels);
    let enc = model.encoding().to_bytes();
    put_u32(&mut out, enc.len());
    out.extend_from_slice(&enc);
    out.extend_from_slice(&model.encoding().fingerprint());
    put_u32(&mut out, arch.layers.len());
    for layer in &arch.layers {
        match *layer {
            LayerSpec::Conv1d { filters, kernel, stride, padding } => {
                out.push(1);
                for v in [filters, kernel, stride, padding] {
                    put_u32(&mut out, v);
                }
            }
            LayerSpec::MaxPool1d { window, stride } => {
                out.push(2);
                put_u32(&mut out, window);
                put_u32(&mut out, stride);
            }
            LayerSpec::Flatten => out.push(3),
            LayerSpec::Dense { units } => {
                out.push(4);
                put_u32(&mut out, units);
            }
        }
    }
    for block in model.param_blocks() {
        out.extend_from_slice(&(block.len() as u64).to_le_bytes());
        for v in block {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], NnError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| corrupt("unexpected end of data"))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, NnError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<usize, NnError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")) as usize)
    }

    fn u64(&mut self) -> Result<u64, NnError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

fn corrupt(msg: impl Into<String>) -> NnError {
    NnError::CorruptFile(msg.into())
}

pub fn model_from_bytes(bytes: &[u8]) -> Result<Model, NnError> {
    if bytes.len() < MAGIC.len() + 4 + CHECKSUM_LEN {
        return Err(corrupt("file too short"));
    }
    if &bytes[..4] != MAGIC {
        return Err(corrupt("bad magic bytes"));
    }
    let (body, checksum) = bytes.split_at(bytes.len() - CHECKSUM_LEN);
    if Sha256::digest(body).as_slice() != checksum {
        return Err(corrupt("checksum mismatch"));
    }
    let mut r = Reader { bytes: body, pos: 4 };
    let version = r.u32()? as u32;
    if version != FORMAT_VERSION {
        return Err(NnError::VersionMismatch { found: version, expected: FORMAT_VERSION });
    }
    let n_classes = r.u32()?;
    let input_len = r.u32()?;
    let input_channels = r.u32()?;
    let enc_len = r.u32()?;
    let encoding = EncodingWeights::from_bytes(r.take(enc_len)?).ok_or_else(|| corrupt("bad encoding block"))?;
    if r.take(32)? != encoding.fingerprint() {
        return Err(corrupt("encoding fingerprint does not match stored weights"));
    }
    let n_layers = r.u32()?;
    let mut layers = Vec::with_capacity(n_layers.min(1024));
    for _ in 0..n_layers {
        layers.push(match r.u8()? {
            1 => LayerSpec::Conv1d { filters: r.u32()?, kernel: r.u32()?, stride: r.u32()?, padding: r.u32()? },
            2 => LayerSpec::MaxPool1d { window: r.u32()?, stride: r.u32()? },
            3 => LayerSpec::Flatten,
            4 => LayerSpec::Dense { units: r.u32()? },
            tag => return Err(corrupt(format!("unknown layer tag {tag}"))),
        });
    }
    let arch = Architecture { input_len, input_channels, n_classes, layers };
    let mut model = Model::zeros(arch, encoding).map_err(|e| corrupt(e.to_string()))?;
    for block in model.param_blocks_mut() {
        let count = r.u64()?;
        if count != block.len() as u64 {
            return Err(corrupt(format!("parameter block holds {count} values, architecture needs {}", block.len())));
        }
        let raw = r.take(block.len() * 8)?;
        for (v, chunk) in block.iter_mut().zip(raw.chunks_exact(8)) {
            *v = f64::from_le_bytes(chunk.try_into().expect("8 bytes"));
        }
    }
    if r.pos != body.len() {
        return Err(corrupt("trailing bytes after parameters"));
    }
    Ok(model)
}

pub fn save_model(model: &Model, path: impl AsRef<Path>) -> Result<(), NnError> {
    fs::write(path, model_to_bytes(model))?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<Model, NnError> {
    model_from_bytes(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{ArchitectureConfig, InitScheme};
    use crate::seq::{BasePreset, GUIDE_LEN};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn model() -> Model {
        let cfg = ArchitectureConfig { conv_filters: vec![3, 2], dense_units: vec![6], ..Default::default() };
        let arch = Architecture::from_config(&cfg, 2 * GUIDE_LEN, 8);
        Model::new(arch, EncodingWeights::default(), InitScheme::HeUniform, &mut ChaCha8Rng::seed_from_u64(5)).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let m = model();
        let bytes = model_to_bytes(&m);
        assert_eq!(&bytes[..4], b"GGRD");
        assert_eq!(model_from_bytes(&bytes).unwrap(), m);
    }

    #[test]
    fn truncation_and_bit_flips_are_caught() {
        let bytes = model_to_bytes(&model());
        for cut in [0, 3, 10, bytes.len() / 2, bytes.len() - 1] {
            assert!(matches!(model_from_bytes(&bytes[..cut]), Err(NnError::CorruptFile(_))), "cut {cut}");
        }
        let mut flipped = bytes.clone();
        flipped[100] ^= 0x10;
        assert!(matches!(model_from_bytes(&flipped), Err(NnError::CorruptFile(_))));
    }

    #[test]
    fn version_is_checked() {
        let mut bytes = model_to_bytes(&model());
        bytes[4] = 9;
        let n = bytes.len() - CHECKSUM_LEN;
        let digest = Sha256::digest(&bytes[..n]);
        bytes[n..].copy_from_slice(&digest);
        assert!(matches!(model_from_bytes(&bytes), Err(NnError::VersionMismatch { found: 9, expected: 1 })));
    }

    #[test]
    fn fingerprint_mismatch_is_visible() {
        let m = model_from_bytes(&model_to_bytes(&model())).unwrap();
        assert!(m.fingerprint_matches(&EncodingWeights::default()));
        let other = EncodingWeights { base_weights: BasePreset::GcBoost.weights(), ..Default::default() };
        assert!(!m.fingerprint_matches(&other));
    }
}
