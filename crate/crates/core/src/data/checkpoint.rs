//! Binary checkpoint format (all integers little-endian):
//!
//! ```text
//! "DTSST" | version u16 | iteration u64 | count u32
//! count × { name_len u32 | name utf-8 | rank u32 | dims u32×rank | f32×numel }
//! count u32 | first-moment entries, same layout
//! count u32 | second-moment entries, same layout
//! first 8 bytes of SHA-256 over everything above
//! ```

use std::io::Write;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::numerics::{Array, ParamStore};

pub const MAGIC: &[u8; 5] = b"DTSST";
pub const CHECKPOINT_VERSION: u16 = 1;

/// Weights, optimizer moments and the number of completed iterations.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub iteration: u64,
    pub params: ParamStore<f32>,
    pub m: ParamStore<f32>,
    pub v: ParamStore<f32>,
}

fn put_store(out: &mut Vec<u8>, store: &ParamStore<f32>) {
    out.extend_from_slice(&(store.len() as u32).to_le_bytes());
    for (name, arr) in store.iter() {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&(arr.shape().len() as u32).to_le_bytes());
        for &d in arr.shape() {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for &x in arr.data() {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
}

fn checksum(bytes: &[u8]) -> [u8; 8] {
    let digest = Sha256::digest(bytes);
    let mut out = [0u8; 8];
    out.copy_from_slice(&digest[..8]);
    out
}

pub fn encode_checkpoint(ckpt: &Checkpoint) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 * ckpt.params.num_elements() + 1024);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.extend_from_slice(&ckpt.iteration.to_le_bytes());
    put_store(&mut out, &ckpt.params);
    put_store(&mut out, &ckpt.m);
    put_store(&mut out, &ckpt.v);
    let sum = checksum(&out);
    out.extend_from_slice(&sum);
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

/// Ran past the end of the buffer.
struct Eof;

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> std::result::Result<&'a [u8], Eof> {
        if self.bytes.len() - self.pos < n {
            return Err(Eof);
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> std::result::Result<u32, Eof> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn store(&mut self) -> std::result::Result<std::result::Result<ParamStore<f32>, String>, Eof> {
        let count = self.u32()? as usize;
        let mut store = ParamStore::new();
        for _ in 0..count {
            let name_len = self.u32()? as usize;
            let name = match std::str::from_utf8(self.take(name_len)?) {
                Ok(s) => s.to_string(),
                Err(_) => return Ok(Err("parameter name is not UTF-8".into())),
            };
            let rank = self.u32()? as usize;
            let mut dims = Vec::with_capacity(rank.min(8));
            for _ in 0..rank {
                dims.push(self.u32()? as usize);
            }
            let numel = dims.iter().try_fold(1usize, |a, &d| a.checked_mul(d));
            let Some(numel) = numel.filter(|&n| n > 0 && rank > 0) else {
                return Ok(Err(format!("parameter `{name}` has invalid shape {dims:?}")));
            };
            let raw = self.take(numel.checked_mul(4).ok_or(Eof)?)?;
            let data = raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
            if store.id(&name).is_some() {
                return Ok(Err(format!("duplicate parameter `{name}`")));
            }
            store.add(name, Array::from_vec(&dims, data).expect("shape checked"));
        }
        Ok(Ok(store))
    }
}

/// Parses checkpoint bytes; `path` only labels errors.
pub fn decode_checkpoint(bytes: &[u8], path: &Path) -> Result<Checkpoint> {
    let p = || path.to_path_buf();
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(Error::CheckpointMagic { path: p() });
    }
    if bytes.len() < MAGIC.len() + 2 {
        return Err(Error::CheckpointTruncated { path: p(), detail: "missing version".into() });
    }
    let version = u16::from_le_bytes([bytes[5], bytes[6]]);
    if version != CHECKPOINT_VERSION {
        return Err(Error::CheckpointVersion { path: p(), found: version, expected: CHECKPOINT_VERSION });
    }
    let parse = || -> std::result::Result<std::result::Result<(Checkpoint, usize), String>, Eof> {
        let mut r = Reader { bytes, pos: 7 };
        let iteration = u64::from_le_bytes(r.take(8)?.try_into().unwrap());
        let mut stores = Vec::with_capacity(3);
        for _ in 0..3 {
            match r.store()? {
                Ok(s) => stores.push(s),
                Err(e) => return Ok(Err(e)),
            }
        }
        let v = stores.pop().unwrap();
        let m = stores.pop().unwrap();
        let params = stores.pop().unwrap();
        Ok(Ok((Checkpoint { iteration, params, m, v }, r.pos)))
    };
    let checksum_ok = bytes.len() >= 8 && checksum(&bytes[..bytes.len() - 8]) == bytes[bytes.len() - 8..];
    let (ckpt, end) = match parse() {
        Err(Eof) => {
            return Err(if checksum_ok {
                Error::CheckpointLayout { path: p(), detail: "sections overrun the checksum".into() }
            } else {
                Error::CheckpointTruncated { path: p(), detail: format!("{} bytes is too short", bytes.len()) }
            })
        }
        Ok(Err(detail)) if checksum_ok => return Err(Error::CheckpointLayout { path: p(), detail }),
        Ok(Err(_)) => return Err(Error::CheckpointChecksum { path: p() }),
        Ok(Ok(x)) => x,
    };
    if end + 8 > bytes.len() {
        return Err(Error::CheckpointTruncated { path: p(), detail: "missing checksum".into() });
    }
    if !checksum_ok || end + 8 != bytes.len() {
        return Err(Error::CheckpointChecksum { path: p() });
    }
    ckpt.params
        .check_layout(&ckpt.m)
        .and_then(|_| ckpt.params.check_layout(&ckpt.v))
        .map_err(|e| Error::CheckpointLayout { path: p(), detail: format!("optimizer state: {e}") })?;
    Ok(ckpt)
}

/// Writes to a sibling temporary file and renames it into place.
pub fn save_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    let bytes = encode_checkpoint(ckpt);
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let file_name = path.file_name().and_then(|n| n.to_str()).unwrap_or("checkpoint");
    let tmp = dir.join(format!(".{file_name}.tmp"));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(&bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = std::fs::read(path)?;
    decode_checkpoint(&bytes, path)
}
