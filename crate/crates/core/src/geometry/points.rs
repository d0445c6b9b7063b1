use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Source and target points on the unit square with one potential per source.
///
/// Sources and targets always come in equal numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    src_xy: Vec<[f64; 2]>,
    tgt_xy: Vec<[f64; 2]>,
    src_potential: Vec<f64>,
    seed: u64,
}

impl PointSet {
    /// Draw `n` sources and `n` targets uniformly on `[0,1]^2` and source
    /// potentials uniformly on `[-1,1]`. The same `(n, seed)` always yields
    /// the same bits.
    pub fn generate(n: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("point count must be at least 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let draw = |rng: &mut ChaCha8Rng| -> Vec<[f64; 2]> {
            (0..n).map(|_| [rng.gen::<f64>(), rng.gen::<f64>()]).collect()
        };
        let src_xy = draw(&mut rng);
        let tgt_xy = draw(&mut rng);
        let src_potential = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        Ok(Self { src_xy, tgt_xy, src_potential, seed })
    }

    /// Assemble a point set from explicit coordinates. Every coordinate must
    /// be finite and inside `[0,1]`.
    pub fn from_parts(
        src_xy: Vec<[f64; 2]>,
        tgt_xy: Vec<[f64; 2]>,
        src_potential: Vec<f64>,
    ) -> Result<Self> {
        let n = src_xy.len();
        if n == 0 {
            return Err(Error::InvalidArgument("point count must be at least 1".into()));
        }
        if tgt_xy.len() != n || src_potential.len() != n {
            return Err(Error::InvalidArgument(format!(
                "mismatched lengths: {} sources, {} targets, {} potentials",
                n,
                tgt_xy.len(),
                src_potential.len()
            )));
        }
        let in_unit = |p: &[f64; 2]| p.iter().all(|c| (0.0..=1.0).contains(c));
        if let Some(p) = src_xy.iter().chain(&tgt_xy).find(|p| !in_unit(p)) {
            return Err(Error::InvalidArgument(format!("point {p:?} outside the unit square")));
        }
        if src_potential.iter().any(|q| !q.is_finite()) {
            return Err(Error::InvalidArgument("non-finite source potential".into()));
        }
        Ok(Self { src_xy, tgt_xy, src_potential, seed: 0 })
    }

    pub fn len(&self) -> usize {
        self.src_xy.len()
    }

    pub fn is_empty(&self) -> bool {
        self.src_xy.is_empty()
    }

    pub fn sources(&self) -> &[[f64; 2]] {
        &self.src_xy
    }

    pub fn targets(&self) -> &[[f64; 2]] {
        &self.tgt_xy
    }

    pub fn potentials(&self) -> &[f64] {
        &self.src_potential
    }

    /// Seed used by [`PointSet::generate`]; zero for hand-built sets.
    pub fn seed(&self) -> u64 {
        self.seed
    }
}
