//! Self-describing binary container for trained models.
//!
//! Layout: magic `LOBM`, kind u32, version u32, tensor count u32, then a
//! shape table (name length u16, UTF-8 name, rank u32, dims u64 × rank) and
//! finally every tensor's data as little-endian f64 in table order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::{Error, Result};

pub const MAGIC: &[u8; 4] = b"LOBM";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Normalization = 1,
    Autoencoder = 2,
    BagOfFeatures = 3,
    Svm = 4,
    Slfn = 5,
    Mlp = 6,
}

impl ModelKind {
    pub fn from_u32(v: u32) -> Option<Self> {
        use ModelKind::*;
        [Normalization, Autoencoder, BagOfFeatures, Svm, Slfn, Mlp]
            .into_iter()
            .find(|k| *k as u32 == v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub name: String,
    pub dims: Vec<usize>,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub kind: ModelKind,
    pub tensors: Vec<Tensor>,
}

impl Artifact {
    pub fn new(kind: ModelKind) -> Self {
        Artifact { kind, tensors: Vec::new() }
    }

    pub fn push(&mut self, name: &str, dims: &[usize], data: Vec<f64>) {
        debug_assert_eq!(dims.iter().product::<usize>(), data.len());
        self.tensors.push(Tensor {
            name: name.to_string(),
            dims: dims.to_vec(),
            data,
        });
    }

    pub fn push_scalar(&mut self, name: &str, v: f64) {
        self.push(name, &[1], vec![v]);
    }

    pub fn get(&self, name: &str) -> Result<&Tensor> {
        self.tensors
            .iter()
            .find(|t| t.name == name)
            .ok_or_else(|| Error::Format(format!("{:?} artifact has no tensor {name:?}", self.kind)))
    }

    pub fn scalar(&self, name: &str) -> Result<f64> {
        let t = self.get(name)?;
        t.data
            .first()
            .copied()
            .ok_or_else(|| Error::Format(format!("tensor {name:?} is empty")))
    }

    pub fn expect_kind(&self, kind: ModelKind) -> Result<()> {
        if self.kind == kind {
            Ok(())
        } else {
            Err(Error::Format(format!("expected a {kind:?} artifact, found {:?}", self.kind)))
        }
    }

    pub fn write_to(&self, mut w: impl Write) -> std::io::Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&(self.kind as u32).to_le_bytes())?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(self.tensors.len() as u32).to_le_bytes())?;
        for t in &self.tensors {
            w.write_all(&(t.name.len() as u16).to_le_bytes())?;
            w.write_all(t.name.as_bytes())?;
            w.write_all(&(t.dims.len() as u32).to_le_bytes())?;
            for d in &t.dims {
                w.write_all(&(*d as u64).to_le_bytes())?;
            }
        }
        for t in &self.tensors {
            for v in &t.data {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        w.flush()
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let fmt = |e: std::io::Error| Error::Format(format!("truncated model artifact: {e}"));
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(fmt)?;
        if &magic != MAGIC {
            return Err(Error::Format("not a model artifact (bad magic)".into()));
        }
        let mut u32b = [0u8; 4];
        let mut read_u32 = |r: &mut dyn Read| -> Result<u32> {
            r.read_exact(&mut u32b).map_err(fmt)?;
            Ok(u32::from_le_bytes(u32b))
        };
        let kind_raw = read_u32(&mut r)?;
        let kind = ModelKind::from_u32(kind_raw).ok_or_else(|| Error::Format(format!("unknown model kind {kind_raw}")))?;
        let version = read_u32(&mut r)?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported artifact version {version}")));
        }
        let count = read_u32(&mut r)? as usize;
        let mut shapes = Vec::with_capacity(count);
        for _ in 0..count {
            let mut lb = [0u8; 2];
            r.read_exact(&mut lb).map_err(fmt)?;
            let mut name = vec![0u8; u16::from_le_bytes(lb) as usize];
            r.read_exact(&mut name).map_err(fmt)?;
            let name = String::from_utf8(name).map_err(|_| Error::Format("tensor name is not UTF-8".into()))?;
            let rank = read_u32(&mut r)? as usize;
            let mut dims = Vec::with_capacity(rank);
            for _ in 0..rank {
                let mut b = [0u8; 8];
                r.read_exact(&mut b).map_err(fmt)?;
                dims.push(u64::from_le_bytes(b) as usize);
            }
            shapes.push((name, dims));
        }
        let mut tensors = Vec::with_capacity(count);
        for (name, dims) in shapes {
            let n: usize = dims.iter().product();
            let mut bytes = vec![0u8; n * 8];
            r.read_exact(&mut bytes).map_err(fmt)?;
            let data = bytes
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            tensors.push(Tensor { name, dims, data });
        }
        Ok(Artifact { kind, tensors })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_to(BufWriter::new(f)).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(BufReader::new(f))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let mut a = Artifact::new(ModelKind::Mlp);
        a.push("w0", &[2, 3], vec![1.0, -0.0, f64::MIN_POSITIVE, 1e300, -3.5, 0.1]);
        a.push_scalar("sigma", std::f64::consts::PI);
        a.push("empty", &[0], vec![]);
        let mut buf = Vec::new();
        a.write_to(&mut buf).unwrap();
        let b = Artifact::read_from(&buf[..]).unwrap();
        assert_eq!(a.kind, b.kind);
        for (x, y) in a.tensors.iter().zip(&b.tensors) {
            assert_eq!(x.name, y.name);
            assert_eq!(x.dims, y.dims);
            let xb: Vec<u64> = x.data.iter().map(|v| v.to_bits()).collect();
            let yb: Vec<u64> = y.data.iter().map(|v| v.to_bits()).collect();
            assert_eq!(xb, yb);
        }
    }

    #[test]
    fn rejects_bad_magic_and_truncation() {
        assert!(Artifact::read_from(&b"LOBFxxxx"[..]).is_err());
        let mut a = Artifact::new(ModelKind::Svm);
        a.push("w", &[4], vec![1.0; 4]);
        let mut buf = Vec::new();
        a.write_to(&mut buf).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(matches!(Artifact::read_from(&buf[..]), Err(Error::Format(_))));
    }
}
