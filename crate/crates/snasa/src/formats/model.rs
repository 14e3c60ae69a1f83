//! Binary model file.
//!
//! | field            | encoding                                   |
//! |------------------|--------------------------------------------|
//! | magic            | the 6 bytes `SNASA1`                       |
//! | version          | u32                                        |
//! | dims             | 4 x u64: vocab, embed, hidden, output      |
//! | vocabulary       | u64 byte length, then the vocabulary file  |
//! | parameters       | every block in order, row-major f64        |
//! | checksum         | u32 CRC-32 of the parameter bytes          |
//!
//! All integers and reals are little-endian.

use std::path::Path;

use snasa_core::{EncoderDims, Model, SiameseEncoderParams};

use super::vocab::{parse_vocabulary, render_vocabulary};
use super::write_bytes;
use crate::{Error, Result};

pub const MODEL_MAGIC: &[u8; 6] = b"SNASA1";
pub const MODEL_VERSION: u32 = 1;

pub fn encode_model(model: &Model) -> Result<Vec<u8>> {
    let dims = model.params.dims();
    let vocab = render_vocabulary(&model.vocab)?;
    let mut out = Vec::with_capacity(64 + vocab.len() + 8 * dims.num_parameters());
    out.extend_from_slice(MODEL_MAGIC);
    out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
    for d in [dims.vocab_size, dims.embed_dim, dims.hidden_dim, dims.output_dim] {
        out.extend_from_slice(&(d as u64).to_le_bytes());
    }
    out.extend_from_slice(&(vocab.len() as u64).to_le_bytes());
    out.extend_from_slice(vocab.as_bytes());
    let start = out.len();
    for block in model.params.blocks() {
        for v in block.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&out[start..]);
    out.extend_from_slice(&crc.to_le_bytes());
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
    path: &'a Path,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.at < n {
            return Err(Error::format(self.path, format!("truncated model file (reading {what})")));
        }
        let s = &self.bytes[self.at..self.at + n];
        self.at += n;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self, what: &str) -> Result<usize> {
        let v = u64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes"));
        usize::try_from(v).map_err(|_| Error::format(self.path, format!("{what} {v} is too large")))
    }
}

pub fn decode_model(bytes: &[u8], path: &Path) -> Result<Model> {
    let mut r = Reader { bytes, at: 0, path };
    if bytes.len() < MODEL_MAGIC.len() || &bytes[..MODEL_MAGIC.len()] != MODEL_MAGIC {
        return Err(Error::format(path, "not a model file (bad magic)"));
    }
    r.at = MODEL_MAGIC.len();
    let version = r.u32("version")?;
    if version != MODEL_VERSION {
        return Err(Error::format(
            path,
            format!("model format version {version} is not supported (expected {MODEL_VERSION})"),
        ));
    }
    let v = r.u64("vocab size")?;
    let e = r.u64("embed dim")?;
    let h = r.u64("hidden dim")?;
    let d = r.u64("output dim")?;
    let dims = EncoderDims::new(v, e, h, d);
    dims.validate()?;
    let vlen = r.u64("vocabulary length")?;
    let vtext = std::str::from_utf8(r.take(vlen, "vocabulary")?)
        .map_err(|_| Error::format(path, "vocabulary block is not UTF-8"))?;
    let vocab = parse_vocabulary(vtext, path)?;
    let n = dims
        .num_parameters()
        .checked_mul(8)
        .ok_or_else(|| Error::format(path, "dimensions overflow"))?;
    let raw = r.take(n, "parameters")?;
    let crc = r.u32("checksum")?;
    if r.at != bytes.len() {
        return Err(Error::format(path, format!("{} trailing bytes", bytes.len() - r.at)));
    }
    if crc32fast::hash(raw) != crc {
        return Err(Error::format(path, "parameter checksum mismatch"));
    }
    let values: Vec<f64> = raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    let params = SiameseEncoderParams::from_flat(dims, &values)?;
    Model::new(params, vocab).map_err(|_| {
        Error::format(path, format!("vocabulary has a different size than the {v} declared"))
    })
}

pub fn save_model(model: &Model, path: &Path) -> Result<()> {
    write_bytes(path, &encode_model(model)?)
}

pub fn load_model(path: &Path) -> Result<Model> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_model(&bytes, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use snasa_core::encoder::init_params;
    use snasa_core::{TrigramVocabulary, VocabOptions};

    fn model() -> Model {
        let vocab = TrigramVocabulary::build(["good day", "bad night"], VocabOptions::default(), "en").unwrap();
        let params = init_params(EncoderDims::new(vocab.len(), 3, 4, 5), 7).unwrap();
        Model::new(params, vocab).unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let m = model();
        let bytes = encode_model(&m).unwrap();
        assert_eq!(&bytes[..6], b"SNASA1");
        assert_eq!(decode_model(&bytes, Path::new("m")).unwrap(), m);
        assert_eq!(encode_model(&m).unwrap(), bytes);
    }

    #[test]
    fn damaged_files_are_rejected() {
        let p = Path::new("m");
        let bytes = encode_model(&model()).unwrap();
        let msg = |b: &[u8]| decode_model(b, p).unwrap_err().to_string();
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(msg(&bad).contains("magic"));
        let mut bad = bytes.clone();
        bad[6] = 2;
        assert!(msg(&bad).contains("version"));
        assert!(msg(&bytes[..bytes.len() - 1]).contains("truncated"));
        let mut bad = bytes.clone();
        let n = bad.len();
        bad[n - 10] ^= 1;
        assert!(msg(&bad).contains("checksum"));
        let mut bad = bytes;
        bad.push(0);
        assert!(msg(&bad).contains("trailing"));
    }
}
