//! Named random streams. Each consumer of randomness in a run draws from its
//! own ChaCha stream keyed by the run seed, so paired runs (Q-learning vs UPA
//! under the same seed) see identical topologies, channels and traffic no
//! matter how differently the algorithms consume their own streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Topology,
    Channel,
    Traffic,
    Clustering(usize),
    Agent(usize),
}

impl Stream {
    fn id(self) -> u64 {
        match self {
            Stream::Topology => 1,
            Stream::Channel => 2,
            Stream::Traffic => 3,
            Stream::Clustering(j) => 0x100 + j as u64,
            Stream::Agent(j) => 0x10000 + j as u64,
        }
    }
}

pub fn stream(seed: u64, which: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which.id());
    rng
}
