//! Reproducible random streams.
//!
//! Every random quantity is drawn from a ChaCha20 keystream whose 256-bit key
//! is derived by hashing a parent key with a 64-bit tag. A run's root key
//! comes from the master seed; replication `r` uses `root.child(r)`, and each
//! [`Channel`] inside a replication gets its own grandchild key. Because keys
//! depend only on indices and tags, results do not depend on the order in
//! which replications are scheduled.

use std::collections::HashMap;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Name recorded in run manifests.
pub const GENERATOR_NAME: &str = "ChaCha20 (rand_chacha), SHA-256 key derivation";

/// A node in the tree of derived stream keys.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct StreamKey([u8; 32]);

impl StreamKey {
    pub fn root(seed: u64) -> Self {
        let mut h = Sha256::new();
        h.update(b"ivxboot/root");
        h.update(seed.to_le_bytes());
        StreamKey(h.finalize().into())
    }

    pub fn child(&self, tag: u64) -> Self {
        let mut h = Sha256::new();
        h.update(self.0);
        h.update(tag.to_le_bytes());
        StreamKey(h.finalize().into())
    }

    pub fn bytes(&self) -> [u8; 32] {
        self.0
    }

    pub fn rng(&self) -> ChaCha20Rng {
        ChaCha20Rng::from_seed(self.0)
    }
}

/// Independent random inputs used inside one replication.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Channel {
    /// Base draws for the predictive-equation error u.
    InnovationU,
    /// Base draws for the regressor innovation v.
    InnovationV,
    /// Wild-bootstrap multipliers.
    Multiplier,
    /// Resampling indices.
    Resample,
    /// Brownian increments.
    Brownian,
    /// Extra normals for functionals that need more than a path.
    Auxiliary,
}

impl Channel {
    pub const ALL: [Channel; 6] = [
        Channel::InnovationU,
        Channel::InnovationV,
        Channel::Multiplier,
        Channel::Resample,
        Channel::Brownian,
        Channel::Auxiliary,
    ];

    pub fn tag(self) -> u64 {
        // High bit keeps channel tags disjoint from replication indices.
        (1u64 << 63)
            | match self {
                Channel::InnovationU => 1,
                Channel::InnovationV => 2,
                Channel::Multiplier => 3,
                Channel::Resample => 4,
                Channel::Brownian => 5,
                Channel::Auxiliary => 6,
            }
    }

    fn slot(self) -> usize {
        (self.tag() & 0xff) as usize - 1
    }
}

/// Source of the random inputs a generator consumes.
///
/// Generators request whole vectors per channel so that a test can replace
/// the random source with fixed, hand-computable sequences.
pub trait DrawSource {
    /// `len` standard normal draws.
    fn normals(&mut self, channel: Channel, len: usize) -> Result<Vec<f64>>;
    /// `len` indices uniform on `0..upper`.
    fn indices(&mut self, channel: Channel, len: usize, upper: usize) -> Result<Vec<usize>>;
}

/// Draws from per-channel substreams of a [`StreamKey`]. Repeated requests on
/// one channel continue that channel's stream.
pub struct StreamSource {
    key: StreamKey,
    streams: [Option<ChaCha20Rng>; 6],
}

impl StreamSource {
    pub fn new(key: StreamKey) -> Self {
        StreamSource { key, streams: Default::default() }
    }

    pub fn key(&self) -> StreamKey {
        self.key
    }

    fn stream(&mut self, channel: Channel) -> &mut ChaCha20Rng {
        let key = self.key;
        self.streams[channel.slot()].get_or_insert_with(|| key.child(channel.tag()).rng())
    }
}

impl DrawSource for StreamSource {
    fn normals(&mut self, channel: Channel, len: usize) -> Result<Vec<f64>> {
        let rng = self.stream(channel);
        Ok((0..len).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
    }

    fn indices(&mut self, channel: Channel, len: usize, upper: usize) -> Result<Vec<usize>> {
        if upper == 0 {
            return Err(Error::Domain("cannot draw indices from an empty range".into()));
        }
        let rng = self.stream(channel);
        Ok((0..len).map(|_| rng.random_range(0..upper)).collect())
    }
}

/// Test hook returning caller-supplied sequences.
///
/// Each channel is a queue; a request consumes `len` values from the front.
/// A channel set with [`FixedDraws::constant_normals`] repeats one value
/// forever. Requests beyond what was supplied are a contract error.
#[derive(Clone, Debug, Default)]
pub struct FixedDraws {
    normals: HashMap<Channel, Queue<f64>>,
    indices: HashMap<Channel, Queue<usize>>,
}

#[derive(Clone, Debug)]
enum Queue<T> {
    Seq(Vec<T>, usize),
    Repeat(T),
}

impl<T: Copy> Queue<T> {
    fn take(&mut self, len: usize) -> Option<Vec<T>> {
        match self {
            Queue::Repeat(v) => Some(vec![*v; len]),
            Queue::Seq(v, pos) => {
                let out = v.get(*pos..*pos + len)?.to_vec();
                *pos += len;
                Some(out)
            }
        }
    }
}

impl FixedDraws {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_normals(mut self, channel: Channel, draws: Vec<f64>) -> Self {
        self.normals.insert(channel, Queue::Seq(draws, 0));
        self
    }

    pub fn constant_normals(mut self, channel: Channel, value: f64) -> Self {
        self.normals.insert(channel, Queue::Repeat(value));
        self
    }

    pub fn with_indices(mut self, channel: Channel, draws: Vec<usize>) -> Self {
        self.indices.insert(channel, Queue::Seq(draws, 0));
        self
    }

    pub fn constant_indices(mut self, channel: Channel, value: usize) -> Self {
        self.indices.insert(channel, Queue::Repeat(value));
        self
    }
}

impl DrawSource for FixedDraws {
    fn normals(&mut self, channel: Channel, len: usize) -> Result<Vec<f64>> {
        self.normals
            .get_mut(&channel)
            .and_then(|q| q.take(len))
            .ok_or_else(|| Error::Contract(format!("fixed draws exhausted on {channel:?}")))
    }

    fn indices(&mut self, channel: Channel, len: usize, upper: usize) -> Result<Vec<usize>> {
        let out = self
            .indices
            .get_mut(&channel)
            .and_then(|q| q.take(len))
            .ok_or_else(|| Error::Contract(format!("fixed indices exhausted on {channel:?}")))?;
        if out.iter().any(|&i| i >= upper) {
            return Err(Error::Contract(format!("fixed index out of range 0..{upper}")));
        }
        Ok(out)
    }
}

/// Raw 32-bit output of the generator behind `key`, for audits.
pub fn raw_u32s(key: &StreamKey, len: usize) -> Vec<u32> {
    let mut rng = key.rng();
    (0..len).map(|_| rng.next_u32()).collect()
}
