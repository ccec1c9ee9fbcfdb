//! Context-free counting model: the training element frequencies, returned
//! unchanged for every masked atom.

use super::{ElementDistribution, Predictor};
use crate::chem::ELEMENT_COUNT;
use crate::corrupt::CorruptedMolecule;
use crate::data::{element_frequencies, Dataset};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnigramModel {
    counts: [u64; ELEMENT_COUNT],
}

impl UnigramModel {
    /// Counts element occurrences over the training set.
    pub fn fit(train: &Dataset) -> UnigramModel {
        UnigramModel {
            counts: *element_frequencies(train).counts(),
        }
    }

    pub fn from_counts(counts: [u64; ELEMENT_COUNT]) -> UnigramModel {
        UnigramModel { counts }
    }

    pub fn counts(&self) -> &[u64; ELEMENT_COUNT] {
        &self.counts
    }

    pub fn distribution(&self) -> ElementDistribution {
        let mut weights = [0.0; ELEMENT_COUNT];
        for (w, &c) in weights.iter_mut().zip(&self.counts) {
            *w = c as f64;
        }
        ElementDistribution::from_weights(weights)
    }
}

impl Predictor for UnigramModel {
    fn predict(&self, corrupted: &CorruptedMolecule) -> Vec<ElementDistribution> {
        let dist = self.distribution();
        vec![dist; corrupted.masked_indices().len()]
    }
}
