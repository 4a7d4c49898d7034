//! Binary classifier snapshot.
//!
//! All integers are little-endian `u32`; strings are a `u32` byte length
//! followed by UTF-8. Layout:
//!
//! ```text
//! "TFMODEL1"
//! macro-category id, V, d, h, K, K tribe ids
//! vocabulary: min_count, max_size, V × (token, count)
//! tensor count, then per tensor: name, rows, cols, rows·cols f32 (row-major)
//! metadata: JSON string holding the training config and epoch history
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::lstm::{Dims, LstmParams, Matrix};
use super::train::{EpochMetrics, TrainConfig};
use super::vocab::Vocabulary;
use super::{TextModelError, TribeClassifier};

pub const MAGIC: &[u8; 8] = b"TFMODEL1";

#[derive(Serialize, Deserialize)]
struct Meta {
    config: TrainConfig,
    history: Vec<EpochMetrics>,
}

fn put_u32(out: &mut Vec<u8>, v: usize) {
    out.extend_from_slice(&u32::try_from(v).expect("snapshot field fits u32").to_le_bytes());
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    put_u32(out, s.len());
    out.extend_from_slice(s.as_bytes());
}

pub fn to_bytes(c: &TribeClassifier) -> Vec<u8> {
    let dims = c.params.dims();
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    put_str(&mut out, &c.macro_category_id);
    for v in [dims.vocab, dims.embed, dims.hidden, dims.classes] {
        put_u32(&mut out, v);
    }
    for t in &c.tribe_ids {
        put_str(&mut out, t);
    }
    put_u32(&mut out, c.vocabulary.min_count() as usize);
    put_u32(&mut out, c.vocabulary.max_size() as usize);
    for (tok, &n) in c.vocabulary.tokens().iter().zip(c.vocabulary.counts()) {
        put_str(&mut out, tok);
        put_u32(&mut out, n as usize);
    }
    let tensors = c.params.tensors();
    put_u32(&mut out, tensors.len());
    for (name, m) in tensors {
        put_str(&mut out, &name);
        put_u32(&mut out, m.rows());
        put_u32(&mut out, m.cols());
        for &x in m.data() {
            out.extend_from_slice(&(x as f32).to_le_bytes());
        }
    }
    let meta = Meta {
        config: c.config.clone(),
        history: c.history.clone(),
    };
    put_str(&mut out, &serde_json::to_string(&meta).expect("metadata serializes"));
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], TextModelError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| TextModelError::Snapshot(format!("truncated at byte {}", self.pos)))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<usize, TextModelError> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes(b.try_into().expect("4 bytes")) as usize)
    }

    fn str(&mut self) -> Result<String, TextModelError> {
        let n = self.u32()?;
        let b = self.take(n)?;
        String::from_utf8(b.to_vec()).map_err(|_| TextModelError::Snapshot("invalid UTF-8 string".into()))
    }

    fn f32(&mut self) -> Result<f64, TextModelError> {
        let b = self.take(4)?;
        Ok(f32::from_le_bytes(b.try_into().expect("4 bytes")) as f64)
    }
}

pub fn from_bytes(buf: &[u8]) -> Result<TribeClassifier, TextModelError> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(MAGIC.len())? != MAGIC {
        return Err(TextModelError::Snapshot("bad magic".into()));
    }
    let macro_category_id = r.str()?;
    let dims = Dims::new(r.u32()?, r.u32()?, r.u32()?, r.u32()?);
    let tribe_ids = (0..dims.classes).map(|_| r.str()).collect::<Result<Vec<_>, _>>()?;
    let min_count = r.u32()? as u32;
    let max_size = r.u32()? as u32;
    let mut tokens = Vec::with_capacity(dims.vocab);
    let mut counts = Vec::with_capacity(dims.vocab);
    for _ in 0..dims.vocab {
        tokens.push(r.str()?);
        counts.push(r.u32()? as u32);
    }
    let vocabulary = Vocabulary::from_parts(tokens, counts, min_count, max_size);

    let layout = dims.layout();
    let n = r.u32()?;
    if n != layout.len() {
        return Err(TextModelError::Snapshot(format!("{n} tensors, expected {}", layout.len())));
    }
    let mut params = LstmParams::zeros(dims);
    for ((want, rows, cols), (_, slot)) in layout.into_iter().zip(params.tensors_mut()) {
        let name = r.str()?;
        let (gr, gc) = (r.u32()?, r.u32()?);
        if name != want || gr != rows || gc != cols {
            return Err(TextModelError::Snapshot(format!(
                "tensor {name} {gr}x{gc}, expected {want} {rows}x{cols}"
            )));
        }
        let data = (0..rows * cols).map(|_| r.f32()).collect::<Result<Vec<_>, _>>()?;
        *slot = Matrix::from_vec(rows, cols, data)?;
    }
    params
        .validate()
        .map_err(|e| TextModelError::Snapshot(e.to_string()))?;
    let meta: Meta = serde_json::from_str(&r.str()?).map_err(|e| TextModelError::Snapshot(format!("metadata: {e}")))?;
    if r.pos != buf.len() {
        return Err(TextModelError::Snapshot("trailing bytes".into()));
    }
    Ok(TribeClassifier {
        macro_category_id,
        tribe_ids,
        vocabulary,
        params,
        config: meta.config,
        history: meta.history,
    })
}

pub fn save(c: &TribeClassifier, path: &Path) -> Result<(), TextModelError> {
    std::fs::write(path, to_bytes(c)).map_err(|e| TextModelError::Io(format!("{}: {e}", path.display())))
}

pub fn load(path: &Path) -> Result<TribeClassifier, TextModelError> {
    let buf = std::fs::read(path).map_err(|e| TextModelError::Io(format!("{}: {e}", path.display())))?;
    from_bytes(&buf)
}
