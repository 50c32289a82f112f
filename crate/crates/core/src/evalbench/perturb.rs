//! Seeded query perturbations standing in for degraded or cropped images.
//!
//! Without the feature extractor, a lower-resolution image is modeled as a
//! blend of the original vector with Dirichlet noise, and a quadrant crop as
//! a random quarter of the vector's mass.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Gamma;
use serde::{Serialize, Serializer};

use super::synth::{dirichlet, DEFAULT_CONCENTRATION};
use super::EvalError;
use crate::num::Weight;
use crate::vecmodel::{FeatureId, SparseVector};

/// Resolution rates reported in the resolution sweep.
pub const RESOLUTION_LEVELS: [f64; 5] = [1.0, 0.8, 0.6, 0.4, 0.2];

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum PerturbationKind {
    #[default]
    None,
    /// Blend `rate * v + (1 - rate) * noise`, `rate` in (0, 1].
    ResolutionSim { rate: f64 },
    /// Keep about a quarter of the mass; `quadrant` in 1..=4.
    PartialSim { quadrant: u8 },
}

impl PerturbationKind {
    pub fn validate(&self) -> Result<(), EvalError> {
        match *self {
            Self::ResolutionSim { rate } if !(rate > 0.0 && rate <= 1.0) => Err(
                EvalError::InvalidParams(format!("resolution rate {rate} not in (0, 1]")),
            ),
            Self::PartialSim { quadrant } if !(1..=4).contains(&quadrant) => Err(
                EvalError::InvalidParams(format!("quadrant {quadrant} not in 1..=4")),
            ),
            _ => Ok(()),
        }
    }

    /// Column order: none, resolutions ascending, quadrants ascending.
    pub(crate) fn sort_key(&self) -> (u8, f64) {
        match *self {
            Self::None => (0, 0.0),
            Self::ResolutionSim { rate } => (1, rate),
            Self::PartialSim { quadrant } => (2, quadrant as f64),
        }
    }
}

impl fmt::Display for PerturbationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::None => f.write_str("none"),
            Self::ResolutionSim { rate } => write!(f, "res:{rate}"),
            Self::PartialSim { quadrant } => write!(f, "partial:{quadrant}"),
        }
    }
}

impl FromStr for PerturbationKind {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || {
            EvalError::InvalidParams(format!(
                "bad perturbation {s:?} (expected none, res:R or partial:Q)"
            ))
        };
        let kind = match s.trim().split_once(':') {
            None if s.trim() == "none" => Self::None,
            Some(("res", r)) => Self::ResolutionSim {
                rate: r.parse().map_err(|_| bad())?,
            },
            Some(("partial", q)) => Self::PartialSim {
                quadrant: q.parse().map_err(|_| bad())?,
            },
            _ => return Err(bad()),
        };
        kind.validate()?;
        Ok(kind)
    }
}

impl Serialize for PerturbationKind {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct PerturbationSpec {
    pub kind: PerturbationKind,
    pub seed: u64,
}

impl PerturbationSpec {
    pub fn new(kind: PerturbationKind, seed: u64) -> Self {
        Self { kind, seed }
    }

    /// Copy with a seed derived for the `i`-th query.
    pub fn for_query(&self, i: usize) -> Self {
        Self {
            kind: self.kind,
            seed: splitmix64(self.seed ^ (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)),
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Applies `p` to a query vector.
///
/// `universe` is the feature space resolution noise is drawn over; when empty
/// the noise stays on `v`'s own features. The noise depends on the seed only,
/// never on the rate, so sweeping the rate for one seed blends the same noise
/// vector in growing proportions.
pub fn perturb_query<T: Weight>(
    v: &SparseVector<T>,
    p: &PerturbationSpec,
    universe: &[FeatureId],
) -> Result<SparseVector<T>, EvalError> {
    p.kind.validate()?;
    if !v.has_positive_weight() {
        return Err(EvalError::ZeroVector);
    }
    let out = match p.kind {
        PerturbationKind::None => v.clone(),
        PerturbationKind::ResolutionSim { rate: 1.0 } => v.clone(),
        PerturbationKind::ResolutionSim { rate } => {
            let own: Vec<FeatureId>;
            let space = if universe.is_empty() {
                own = v.iter().map(|(id, _)| id.clone()).collect();
                &own[..]
            } else {
                universe
            };
            let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
            let gamma = Gamma::new(DEFAULT_CONCENTRATION / space.len() as f64, 1.0)
                .expect("positive shape");
            let noise = dirichlet(&mut rng, &gamma, space.len());
            let mut mixed: BTreeMap<FeatureId, T> = space
                .iter()
                .zip(&noise)
                .map(|(id, n)| (id.clone(), T::lit((1.0 - rate) * n)))
                .collect();
            for (id, w) in v.iter() {
                let slot = mixed.entry(id.clone()).or_insert_with(T::zero);
                *slot = T::lit(rate) * w + *slot;
            }
            let mixed = SparseVector::new(mixed.into_iter().collect())
                .map_err(|e| EvalError::InvalidParams(e.to_string()))?
                .without_zeros();
            mixed.truncate_top_m(v.len())
        }
        PerturbationKind::PartialSim { quadrant } => {
            let mut rng =
                ChaCha8Rng::seed_from_u64(splitmix64(p.seed.wrapping_add(quadrant as u64)));
            let positive = v.without_zeros();
            let total = positive.l1_norm();
            let mut order: Vec<usize> = (0..positive.len()).collect();
            order.shuffle(&mut rng);
            let quarter = total * T::lit(0.25);
            let mut kept = Vec::new();
            let mut mass = T::zero();
            for i in order {
                kept.push(i);
                mass = mass + positive.entries()[i].1;
                if mass >= quarter {
                    break;
                }
            }
            kept.sort_unstable();
            let scale = total / mass;
            SparseVector::from_canonical(
                kept.into_iter()
                    .map(|i| {
                        let (id, w) = &positive.entries()[i];
                        (id.clone(), *w * scale)
                    })
                    .collect(),
            )
        }
    };
    if !out.has_positive_weight() {
        return Err(EvalError::ZeroVector);
    }
    Ok(out)
}
