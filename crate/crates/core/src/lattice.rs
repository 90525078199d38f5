//! The cuboid lattice: VAD space cut into low/medium/high per dimension,
//! giving 27 cuboids, and the softmax distribution over them.
//!
//! Cuboid index = 9 * valence level + 3 * arousal level + dominance level,
//! with levels Low = 0, Med = 1, High = 2.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fuzzy::{Dimension, Fuzzifier, Term, VadRating};

pub const CUBOID_COUNT: usize = 27;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CuboidIndex(u8);

impl CuboidIndex {
    pub fn new(index: usize) -> Result<Self> {
        if index < CUBOID_COUNT {
            Ok(Self(index as u8))
        } else {
            Err(Error::InvalidConfig(format!("cuboid index {index} out of range")))
        }
    }

    pub fn from_levels(valence: Term, arousal: Term, dominance: Term) -> Self {
        Self((9 * valence.index() + 3 * arousal.index() + dominance.index()) as u8)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn levels(self) -> (Term, Term, Term) {
        let i = self.index();
        (Term::ALL[i / 9], Term::ALL[(i / 3) % 3], Term::ALL[i % 3])
    }
}

/// Level of one coordinate: argmax of the adjusted upper term degrees,
/// ties resolved towards Med.
fn level_of(fuzzifier: &Fuzzifier, dimension: Dimension, x: f64) -> Result<Term> {
    let [low, med, high] = fuzzifier.adjusted(dimension).upper_degrees(x)?;
    Ok(if med >= low && med >= high {
        Term::Med
    } else if low > high {
        Term::Low
    } else if high > low {
        Term::High
    } else {
        Term::Med
    })
}

pub fn vad_to_cuboid(fuzzifier: &Fuzzifier, rating: &VadRating) -> Result<CuboidIndex> {
    Ok(CuboidIndex::from_levels(
        level_of(fuzzifier, Dimension::Valence, rating.valence)?,
        level_of(fuzzifier, Dimension::Arousal, rating.arousal)?,
        level_of(fuzzifier, Dimension::Dominance, rating.dominance)?,
    ))
}

/// Representative rating of a cuboid: each coordinate at its term's common mean.
pub fn cuboid_prototype(fuzzifier: &Fuzzifier, cuboid: CuboidIndex) -> VadRating {
    let (v, a, d) = cuboid.levels();
    let at = |dim: Dimension, term: Term| fuzzifier.adjusted(dim).term(term).mean();
    VadRating {
        valence: at(Dimension::Valence, v),
        arousal: at(Dimension::Arousal, a),
        dominance: at(Dimension::Dominance, d),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeDistribution(pub Vec<f64>);

impl LatticeDistribution {
    pub fn argmax(&self) -> CuboidIndex {
        let mut best = 0;
        for (i, p) in self.0.iter().enumerate() {
            if *p > self.0[best] {
                best = i;
            }
        }
        CuboidIndex(best as u8)
    }
}

pub fn lattice_softmax(logits: &[f64]) -> Result<LatticeDistribution> {
    if logits.len() != CUBOID_COUNT {
        return Err(Error::Shape(format!(
            "expected {CUBOID_COUNT} logits, got {}",
            logits.len()
        )));
    }
    if logits.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("lattice logits".into()));
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    Ok(LatticeDistribution(exps.into_iter().map(|e| e / total).collect()))
}
