use uuid::Uuid;

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Derives generation seeds from (session, panel, regeneration counter), so a
/// replayed session reproduces its images and a reroll gets a fresh seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedPolicy {
    session: u128,
}

impl SeedPolicy {
    pub fn new(session_id: Uuid) -> Self {
        Self {
            session: session_id.as_u128(),
        }
    }

    pub fn seed(&self, panel_index: u32, regeneration: u32) -> u64 {
        let hi = (self.session >> 64) as u64;
        let lo = self.session as u64;
        let turn = (u64::from(panel_index) << 32) | u64::from(regeneration);
        splitmix64(hi ^ splitmix64(lo ^ splitmix64(turn)))
    }
}
