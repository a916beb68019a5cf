//! Per-user code construction for the TSA and corner-point schemes.

use std::collections::HashMap;

use super::{SchemeError, TsaSchedule};
use crate::coder::{smooth_law, DecoderLaw, EncoderState};
use crate::polar::{build_code, estimate_profile, BitChannelModel, CodeRules, CodeSpec, IidSource, PolarTransform, ReliabilityProfile, StateMask};
use crate::regions::{InputStructure, User};
use crate::rng::derive_seed;
use crate::scalar::Real;

const PROFILE_TAG: u64 = 0x70726f66;
const SHAPING_TAG: u64 = 0x73686170;

/// Bit-level law of `user`'s auxiliary: its marginal, the other auxiliary as side information
/// and the user's own channel output as observation.
pub fn user_model<T: Real>(s: &InputStructure<T>, user: User) -> Result<BitChannelModel<T>, SchemeError> {
    let (nu, nv) = s.joint().sizes();
    if nu != 2 || nv != 2 {
        return Err(SchemeError::NotBinary(nu, nv));
    }
    let joint = match user {
        User::One => s.joint().clone(),
        User::Two => s.joint().transpose(),
    };
    Ok(BitChannelModel::new(joint.marginal_x(), Some(joint.y_given_x()), Some(s.effective_law(user)))?)
}

/// Reliability profile of `user`'s bit channels when the side information follows `mask`.
pub fn profile_user<T: Real>(
    s: &InputStructure<T>,
    user: User,
    mask: StateMask,
    t: &PolarTransform,
    samples: u64,
    seed: u64,
) -> Result<ReliabilityProfile<T>, SchemeError> {
    let source = IidSource::new(user_model(s, user)?, mask, t.n(), derive_seed(seed, &[PROFILE_TAG, user.index() as u64]));
    Ok(estimate_profile(&source, t, samples)?)
}

/// Encoder and decoder law of one user.
#[derive(Debug, Clone)]
pub struct UserCode<T> {
    pub encoder: EncoderState<T>,
    pub law: DecoderLaw<T>,
}

impl<T: Real> UserCode<T> {
    /// `smoothing` is applied to the decoder law only when it has zero entries.
    pub fn new(
        s: &InputStructure<T>,
        user: User,
        code: CodeSpec,
        t: PolarTransform,
        shaping_seed: u64,
        smoothing: T,
    ) -> Result<Self, SchemeError> {
        let model = user_model(s, user)?;
        let encoder = EncoderState::new(code, t, model.augmented_posterior(), shaping_seed)?;
        let observation = model.observation().expect("user model observes its channel");
        let law = DecoderLaw::new(model.prior(), &smooth_law(observation, smoothing)?)?;
        Ok(Self { encoder, law })
    }

    pub fn data_bits(&self) -> usize {
        self.encoder.code().data_bits()
    }
}

/// Codes of both users for one scheme configuration.
#[derive(Debug, Clone)]
pub struct SchemeCodes<T> {
    pub user1: UserCode<T>,
    pub user2: UserCode<T>,
}

impl<T: Real> SchemeCodes<T> {
    pub fn user(&self, user: User) -> &UserCode<T> {
        match user {
            User::One => &self.user1,
            User::Two => &self.user2,
        }
    }

    pub fn n(&self) -> usize {
        self.user1.encoder.n()
    }
}

/// Canonical form of a mask so that equivalent masks share a cached profile.
fn mask_key(mask: StateMask, n: usize) -> (u8, u64) {
    match mask {
        StateMask::None | StateMask::Prefix(0) => (0, 0),
        StateMask::All => (1, 0),
        StateMask::Prefix(k) if k >= n => (1, 0),
        StateMask::Prefix(k) => (2, k as u64),
        StateMask::Bernoulli(p) if p <= 0.0 => (0, 0),
        StateMask::Bernoulli(p) if p >= 1.0 => (1, 0),
        StateMask::Bernoulli(p) => (3, p.to_bits()),
    }
}

/// Builds and caches profiles and codes for one input structure and transform.
#[derive(Debug)]
pub struct CodeBuilder<T> {
    structure: InputStructure<T>,
    transform: PolarTransform,
    samples: u64,
    seed: u64,
    rules: CodeRules,
    smoothing: T,
    profiles: HashMap<(User, (u8, u64)), ReliabilityProfile<T>>,
}

impl<T: Real> CodeBuilder<T> {
    pub fn new(structure: InputStructure<T>, transform: PolarTransform, samples: u64, seed: u64, rules: CodeRules, smoothing: T) -> Self {
        Self { structure, transform, samples, seed, rules, smoothing, profiles: HashMap::new() }
    }

    pub fn structure(&self) -> &InputStructure<T> {
        &self.structure
    }

    pub fn transform(&self) -> &PolarTransform {
        &self.transform
    }

    pub fn profile(&mut self, user: User, mask: StateMask) -> Result<&ReliabilityProfile<T>, SchemeError> {
        let key = (user, mask_key(mask, self.transform.n()));
        if !self.profiles.contains_key(&key) {
            let p = profile_user(&self.structure, user, mask, &self.transform, self.samples, self.seed)?;
            self.profiles.insert(key, p);
        }
        Ok(&self.profiles[&key])
    }

    pub fn user_code(&mut self, user: User, mask: StateMask, data_bits: usize) -> Result<UserCode<T>, SchemeError> {
        let rules = self.rules;
        let code = build_code(self.profile(user, mask)?, data_bits, &rules)?;
        let shaping_seed = derive_seed(self.seed, &[SHAPING_TAG, user.index() as u64]);
        UserCode::new(&self.structure, user, code, self.transform.clone(), shaping_seed, self.smoothing)
    }

    /// Codes for the TSA schedule with the given per-block data bits.
    pub fn tsa(&mut self, schedule: &TsaSchedule, k1: usize, k2: usize) -> Result<SchemeCodes<T>, SchemeError> {
        Ok(SchemeCodes {
            user1: self.user_code(User::One, schedule.profile_mask(User::One), k1)?,
            user2: self.user_code(User::Two, schedule.profile_mask(User::Two), k2)?,
        })
    }

    /// Codes for a corner point: the user encoded second sees the whole other codeword.
    pub fn corner(&mut self, corner: super::Corner, k1: usize, k2: usize) -> Result<SchemeCodes<T>, SchemeError> {
        let (m1, m2) = match corner {
            super::Corner::One => (StateMask::None, StateMask::All),
            super::Corner::Two => (StateMask::All, StateMask::None),
        };
        Ok(SchemeCodes { user1: self.user_code(User::One, m1, k1)?, user2: self.user_code(User::Two, m2, k2)? })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{blackwell_optimal_structure, GlitchMap};

    #[test]
    fn blackwell_user_models() {
        let s = blackwell_optimal_structure::<f64>(GlitchMap::ToTwo);
        let m1 = user_model(&s, User::One).unwrap();
        assert!((m1.prior().prob(1) - 1.0 / 3.0).abs() < 1e-12);
        // V = 1 forces U = 0
        assert_eq!(m1.augmented_posterior().prob(1, 1), 0.0);
        let m2 = user_model(&s, User::Two).unwrap();
        assert_eq!(m2.augmented_posterior().prob(1, 1), 0.0);
        assert!((m2.augmented_posterior().prob(0, 1) - 0.5).abs() < 1e-12);
        // both receivers see their own auxiliary exactly
        for m in [&m1, &m2] {
            let w = m.observation().unwrap();
            assert_eq!(w.prob(0, 0), 1.0);
            assert_eq!(w.prob(1, 1), 1.0);
        }
    }

    #[test]
    fn equivalent_masks_share_profiles() {
        let s = blackwell_optimal_structure::<f64>(GlitchMap::ToTwo);
        let t = PolarTransform::butterfly_first(16).unwrap();
        let mut b = CodeBuilder::new(s, t, 50, 1, CodeRules::default(), 0.01);
        let a = b.profile(User::One, StateMask::None).unwrap().clone();
        let c = b.profile(User::One, StateMask::Prefix(0)).unwrap().clone();
        assert_eq!(a, c);
        assert_eq!(b.profiles.len(), 1);
    }
}
