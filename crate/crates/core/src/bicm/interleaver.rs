//! Seeded pseudo-random bit interleaver.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{check_len, Result};

/// Fixed permutation determined by `(len, seed)`: `out[i] = in[perm[i]]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interleaver {
    perm: Vec<usize>,
    inverse: Vec<usize>,
}

impl Interleaver {
    pub fn new(len: usize, seed: u64) -> Self {
        let mut perm: Vec<usize> = (0..len).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (len as u64).rotate_left(32));
        perm.shuffle(&mut rng);
        let mut inverse = vec![0; len];
        for (i, &p) in perm.iter().enumerate() {
            inverse[p] = i;
        }
        Self { perm, inverse }
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    pub fn interleave<T: Copy>(&self, input: &[T]) -> Result<Vec<T>> {
        check_len("interleaver input", self.perm.len(), input.len())?;
        Ok(self.perm.iter().map(|&p| input[p]).collect())
    }

    pub fn deinterleave<T: Copy>(&self, input: &[T]) -> Result<Vec<T>> {
        check_len("deinterleaver input", self.perm.len(), input.len())?;
        Ok(self.inverse.iter().map(|&i| input[i]).collect())
    }
}
