//! Binary checkpoint: magic, version, config record, named parameters with
//! shapes and little-endian f64 payloads, then a SHA-256 of everything before.

use std::path::Path;

use sha2::{Digest, Sha256};

use crate::autodiff::Tensor;
use crate::error::{Error, Result};
use crate::kv::KvRecord;
use crate::params::ParamStore;
use crate::scalar::Scalar;

use super::{Model, ModelConfig, ModelSpec};

const MAGIC: &[u8; 8] = b"NTICKPT\0";
const VERSION: u32 = 1;

fn put_u32(out: &mut Vec<u8>, v: usize) {
    out.extend_from_slice(&(v as u32).to_le_bytes());
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Checkpoint(format!("truncated at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<usize> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes(b.try_into().expect("4 bytes")) as usize)
    }

    fn str(&mut self) -> Result<&'a str> {
        let n = self.u32()?;
        std::str::from_utf8(self.take(n)?).map_err(|_| Error::Checkpoint("invalid utf-8".into()))
    }
}

impl<T: Scalar> Model<T> {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = MAGIC.to_vec();
        put_u32(&mut out, VERSION as usize);
        let cfg = self.config().to_kv().render();
        put_u32(&mut out, cfg.len());
        out.extend_from_slice(cfg.as_bytes());
        put_u32(&mut out, self.params.len());
        for (_, p) in self.params.iter() {
            put_u32(&mut out, p.name.len());
            out.extend_from_slice(p.name.as_bytes());
            put_u32(&mut out, p.value.shape().len());
            for &d in p.value.shape() {
                put_u32(&mut out, d);
            }
            for &v in p.value.data() {
                out.extend_from_slice(&v.as_f64().to_le_bytes());
            }
        }
        let digest = Sha256::digest(&out);
        out.extend_from_slice(&digest);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < MAGIC.len() + 4 + 32 || &bytes[..MAGIC.len()] != MAGIC {
            return Err(Error::Checkpoint("not a checkpoint file".into()));
        }
        let (body, digest) = bytes.split_at(bytes.len() - 32);
        if Sha256::digest(body).as_slice() != digest {
            return Err(Error::Checkpoint("checksum mismatch, file is corrupt".into()));
        }
        let mut r = Reader {
            bytes: body,
            pos: MAGIC.len(),
        };
        let version = r.u32()?;
        if version != VERSION as usize {
            return Err(Error::Checkpoint(format!("unsupported version {version}")));
        }
        let cfg = ModelConfig::from_kv(&KvRecord::parse(r.str()?, "checkpoint config")?)?;
        let mut params = ParamStore::new();
        let spec = ModelSpec::build(&cfg, &mut params)?;
        let n = r.u32()?;
        let mut seen = vec![false; params.len()];
        if n != params.len() {
            return Err(Error::Checkpoint(format!(
                "{n} parameters stored, the config needs {}",
                params.len()
            )));
        }
        for _ in 0..n {
            let name = r.str()?.to_string();
            let ndim = r.u32()?;
            let shape = (0..ndim).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
            let numel: usize = shape.iter().product();
            let data = r
                .take(numel * 8)?
                .chunks_exact(8)
                .map(|c| T::lit(f64::from_le_bytes(c.try_into().expect("8 bytes"))))
                .collect();
            let id = params
                .id(&name)
                .ok_or_else(|| Error::Checkpoint(format!("unexpected parameter {name}")))?;
            if std::mem::replace(&mut seen[id.index()], true) {
                return Err(Error::Checkpoint(format!("duplicate parameter {name}")));
            }
            if params.value(id).shape() != shape.as_slice() {
                return Err(Error::Checkpoint(format!(
                    "shape mismatch for {name}: stored {shape:?}, expected {:?}",
                    params.value(id).shape()
                )));
            }
            params.set(&name, Tensor::new(shape, data)?)?;
        }
        if r.pos != body.len() {
            return Err(Error::Checkpoint("trailing bytes".into()));
        }
        Ok(Model { spec, params })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}
