use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use uuid::{Builder, Uuid};

/// Source of RFC 4122 version-4 identifiers for bound elements.
///
/// Sessions driven by scripted scenarios use a seeded generator so that
/// replays assign the same identifiers.
#[derive(Debug, Clone)]
pub struct IdGen {
    rng: ChaCha20Rng,
}

impl IdGen {
    pub fn seeded(seed: u64) -> Self {
        Self {
            rng: ChaCha20Rng::seed_from_u64(seed),
        }
    }

    pub fn from_entropy() -> Self {
        Self {
            rng: ChaCha20Rng::from_entropy(),
        }
    }

    pub fn next_uuid(&mut self) -> String {
        let mut bytes = [0u8; 16];
        self.rng.fill_bytes(&mut bytes);
        let id: Uuid = Builder::from_random_bytes(bytes).into_uuid();
        id.hyphenated().to_string()
    }
}

impl Default for IdGen {
    fn default() -> Self {
        Self::from_entropy()
    }
}
