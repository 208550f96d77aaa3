//! Binary checkpoint container.
//!
//! All integers and floats are little-endian; floats are IEEE-754 `f64`.
//!
//! ```text
//! magic          8 bytes  "RMCKPT01"
//! version        u32      1
//! config digest  32 bytes SHA-256 of the training configuration
//! iteration      u64
//! layer count    u32
//! layer dims     (inputs u32, outputs u32) per layer
//! params         per layer: weights (outputs*inputs f64, row-major), bias (outputs f64)
//! adam           step u64, lr, beta1, beta2, eps, weight_decay (f64),
//!                first moments, second moments (params layout)
//! sampler rng    seed 32 bytes, stream u64, word position u128
//! sampler        epoch u64, cursor u64, order length u64, order (u32 each)
//! ```

use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{AdamConfig, AdamState, Layer, Mlp};

pub const MAGIC: &[u8; 8] = b"RMCKPT01";
pub const VERSION: u32 = 1;

/// Position of a ChaCha8 stream, enough to rebuild it exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngState {
    pub seed: [u8; 32],
    pub stream: u64,
    pub word_pos: u128,
}

impl RngState {
    pub fn capture(rng: &ChaCha8Rng) -> Self {
        RngState {
            seed: rng.get_seed(),
            stream: rng.get_stream(),
            word_pos: rng.get_word_pos(),
        }
    }

    pub fn restore(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.seed);
        rng.set_stream(self.stream);
        rng.set_word_pos(self.word_pos);
        rng
    }
}

/// Minibatch sampler position: the current epoch permutation and how far
/// into it training has read.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplerState {
    pub rng: RngState,
    pub epoch: u64,
    pub cursor: u64,
    pub order: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub iteration: u64,
    pub params: Mlp,
    pub adam: AdamState,
    pub sampler: SamplerState,
    pub config_digest: [u8; 32],
}

impl Checkpoint {
    pub fn digest_hex(&self) -> String {
        self.config_digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer(Vec::new());
        w.bytes(MAGIC);
        w.u32(VERSION);
        w.bytes(&self.config_digest);
        w.u64(self.iteration);
        w.u32(self.params.layers.len() as u32);
        for l in &self.params.layers {
            w.u32(l.inputs as u32);
            w.u32(l.outputs as u32);
        }
        w.mlp(&self.params);
        let a = &self.adam;
        w.u64(a.step);
        for v in [
            a.config.lr,
            a.config.beta1,
            a.config.beta2,
            a.config.eps,
            a.config.weight_decay,
        ] {
            w.f64(v);
        }
        w.mlp(&a.m);
        w.mlp(&a.v);
        let s = &self.sampler;
        w.bytes(&s.rng.seed);
        w.u64(s.rng.stream);
        w.bytes(&s.rng.word_pos.to_le_bytes());
        w.u64(s.epoch);
        w.u64(s.cursor);
        w.u64(s.order.len() as u64);
        for i in &s.order {
            w.u32(*i);
        }
        w.0
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(Error::Checkpoint("bad magic header".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {version}")));
        }
        let config_digest: [u8; 32] = r.take(32)?.try_into().expect("32 bytes");
        let iteration = r.u64()?;
        let n_layers = r.u32()? as usize;
        if n_layers == 0 {
            return Err(Error::Checkpoint("no layers".into()));
        }
        let mut dims = Vec::with_capacity(n_layers);
        for _ in 0..n_layers {
            let dim = (r.u32()? as usize, r.u32()? as usize);
            if dim.0.checked_mul(dim.1).is_none_or(|n| n > bytes.len()) {
                return Err(Error::Checkpoint(format!("implausible layer shape {dim:?}")));
            }
            dims.push(dim);
        }
        if dims.last().map(|d| d.1) != Some(2) || dims.windows(2).any(|w| w[0].1 != w[1].0) {
            return Err(Error::Checkpoint(format!("inconsistent layer shapes {dims:?}")));
        }
        let params = r.mlp(&dims)?;
        let step = r.u64()?;
        let config = AdamConfig {
            lr: r.f64()?,
            beta1: r.f64()?,
            beta2: r.f64()?,
            eps: r.f64()?,
            weight_decay: r.f64()?,
        };
        let m = r.mlp(&dims)?;
        let v = r.mlp(&dims)?;
        let seed: [u8; 32] = r.take(32)?.try_into().expect("32 bytes");
        let stream = r.u64()?;
        let word_pos = u128::from_le_bytes(r.take(16)?.try_into().expect("16 bytes"));
        let epoch = r.u64()?;
        let cursor = r.u64()?;
        let len = r.u64()? as usize;
        if len.checked_mul(4).is_none_or(|n| n > bytes.len()) {
            return Err(Error::Checkpoint(format!("implausible sampler length {len}")));
        }
        let order = (0..len).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
        if r.pos != bytes.len() {
            return Err(Error::Checkpoint(format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        Ok(Checkpoint {
            iteration,
            params,
            adam: AdamState { config, step, m, v },
            sampler: SamplerState {
                rng: RngState { seed, stream, word_pos },
                epoch,
                cursor,
                order,
            },
            config_digest,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes).map_err(|e| e.context(path.display().to_string()))
    }
}

struct Writer(Vec<u8>);

impl Writer {
    fn bytes(&mut self, b: &[u8]) {
        self.0.extend_from_slice(b);
    }
    fn u32(&mut self, v: u32) {
        self.bytes(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.bytes(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.bytes(&v.to_le_bytes());
    }
    fn mlp(&mut self, m: &Mlp) {
        for v in m.values() {
            self.f64(*v);
        }
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|e| *e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Checkpoint(format!("truncated at byte {}", self.pos)))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
    fn mlp(&mut self, dims: &[(usize, usize)]) -> Result<Mlp> {
        let mut layers = Vec::with_capacity(dims.len());
        for &(inputs, outputs) in dims {
            let mut layer = Layer::zeros(inputs, outputs);
            for w in layer.weights.iter_mut().chain(layer.bias.iter_mut()) {
                *w = self.f64()?;
            }
            layers.push(layer);
        }
        Ok(Mlp { layers })
    }
}
