use rand::Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

use super::{ObjectClass, Param};

/// Initial value of every Adagrad accumulator.
pub const ACCUMULATOR_FLOOR: f64 = 1e-8;

/// Interaction (`rho`) and feature (`alpha`) vectors for one object class,
/// row-major `rows x dim`, with per-cell Adagrad accumulators.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    class: ObjectClass,
    dim: usize,
    rows: usize,
    rho: Vec<f64>,
    alpha: Vec<f64>,
    rho_acc: Vec<f64>,
    alpha_acc: Vec<f64>,
    frozen: bool,
}

impl EmbeddingTable {
    pub fn zeros(class: ObjectClass, rows: usize, dim: usize) -> Self {
        EmbeddingTable {
            class,
            dim,
            rows,
            rho: vec![0.0; rows * dim],
            alpha: vec![0.0; rows * dim],
            rho_acc: vec![ACCUMULATOR_FLOOR; rows * dim],
            alpha_acc: vec![ACCUMULATOR_FLOOR; rows * dim],
            frozen: false,
        }
    }

    /// Entries i.i.d. uniform on `[-scale, scale]`; all of `rho` is drawn
    /// before `alpha`.
    pub fn random<R: Rng>(class: ObjectClass, rows: usize, dim: usize, scale: f64, rng: &mut R) -> Self {
        let mut table = Self::zeros(class, rows, dim);
        for v in table.rho.iter_mut().chain(table.alpha.iter_mut()) {
            *v = (2.0 * rng.random::<f64>() - 1.0) * scale;
        }
        table
    }

    /// Build from explicit matrices (accumulators at the floor).
    pub fn from_matrices(class: ObjectClass, dim: usize, rho: Vec<f64>, alpha: Vec<f64>) -> Result<Self> {
        if dim == 0 || rho.len() != alpha.len() || !rho.len().is_multiple_of(dim) {
            return Err(Error::Config(format!(
                "matrix shape mismatch: rho {} alpha {} dim {dim}",
                rho.len(),
                alpha.len()
            )));
        }
        let rows = rho.len() / dim;
        Ok(EmbeddingTable {
            class,
            dim,
            rows,
            rho_acc: vec![ACCUMULATOR_FLOOR; rho.len()],
            alpha_acc: vec![ACCUMULATOR_FLOOR; alpha.len()],
            rho,
            alpha,
            frozen: false,
        })
    }

    pub fn class(&self) -> ObjectClass {
        self.class
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn set_frozen(&mut self, frozen: bool) {
        self.frozen = frozen;
    }

    fn check(&self, id: u32) -> Result<usize> {
        let row = id as usize;
        if row >= self.rows {
            return Err(Error::IdOutOfRange {
                class: self.class.as_str(),
                id,
                size: self.rows,
            });
        }
        Ok(row * self.dim)
    }

    pub fn rho(&self, id: u32) -> Result<&[f64]> {
        let at = self.check(id)?;
        Ok(&self.rho[at..at + self.dim])
    }

    pub fn alpha(&self, id: u32) -> Result<&[f64]> {
        let at = self.check(id)?;
        Ok(&self.alpha[at..at + self.dim])
    }

    pub fn vector(&self, param: Param, id: u32) -> Result<&[f64]> {
        match param {
            Param::Rho => self.rho(id),
            Param::Alpha => self.alpha(id),
        }
    }

    /// Direct write access, bypassing the optimizer. Refused when frozen.
    pub fn vector_mut(&mut self, param: Param, id: u32) -> Result<&mut [f64]> {
        if self.frozen {
            return Err(Error::FrozenTable(self.class.as_str()));
        }
        let at = self.check(id)?;
        let dim = self.dim;
        Ok(match param {
            Param::Rho => &mut self.rho[at..at + dim],
            Param::Alpha => &mut self.alpha[at..at + dim],
        })
    }

    pub fn rho_matrix(&self) -> &[f64] {
        &self.rho
    }

    pub fn alpha_matrix(&self) -> &[f64] {
        &self.alpha
    }

    /// Adagrad update of one row: `acc += g^2; x -= lr * g / sqrt(acc)`.
    pub fn adagrad_step(&mut self, param: Param, id: u32, grad: &[f64], learning_rate: f64) -> Result<()> {
        if self.frozen {
            return Err(Error::FrozenTable(self.class.as_str()));
        }
        let at = self.check(id)?;
        debug_assert_eq!(grad.len(), self.dim);
        let (cells, acc) = match param {
            Param::Rho => (&mut self.rho[at..at + self.dim], &mut self.rho_acc[at..at + self.dim]),
            Param::Alpha => (&mut self.alpha[at..at + self.dim], &mut self.alpha_acc[at..at + self.dim]),
        };
        for ((x, a), g) in cells.iter_mut().zip(acc.iter_mut()).zip(grad) {
            if *g == 0.0 {
                continue;
            }
            *a += g * g;
            *x -= learning_rate * g / a.sqrt();
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.rho.iter().chain(&self.alpha).all(|v| v.is_finite())
    }

    /// SHA-256 over both matrices and both accumulators.
    pub fn checksum(&self) -> String {
        let mut hasher = Sha256::new();
        for part in [&self.rho, &self.alpha, &self.rho_acc, &self.alpha_acc] {
            for v in part.iter() {
                hasher.update(v.to_le_bytes());
            }
        }
        hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn table() -> EmbeddingTable {
        EmbeddingTable::from_matrices(ObjectClass::Word, 2, vec![0.0; 4], vec![0.0; 4]).unwrap()
    }

    #[test]
    fn first_step_is_learning_rate_sized() {
        let mut t = table();
        t.adagrad_step(Param::Rho, 0, &[3.0, -0.5], 0.1).unwrap();
        let row = t.rho(0).unwrap();
        assert!((row[0] + 0.1).abs() < 1e-7);
        assert!((row[1] - 0.1).abs() < 1e-7);
    }

    #[test]
    fn zero_gradient_changes_nothing() {
        let mut t = table();
        let before = t.checksum();
        t.adagrad_step(Param::Alpha, 1, &[0.0, 0.0], 0.1).unwrap();
        assert_eq!(before, t.checksum());
    }

    #[test]
    fn repeated_gradients_shrink_steps() {
        let mut t = table();
        t.adagrad_step(Param::Rho, 0, &[1.0, 1.0], 0.1).unwrap();
        let first = t.rho(0).unwrap()[0];
        t.adagrad_step(Param::Rho, 0, &[1.0, 1.0], 0.1).unwrap();
        let second = t.rho(0).unwrap()[0] - first;
        assert!(second.abs() < first.abs());
    }

    #[test]
    fn frozen_table_refuses_writes() {
        let mut t = table();
        t.set_frozen(true);
        assert!(matches!(t.adagrad_step(Param::Rho, 0, &[1.0, 1.0], 0.1), Err(Error::FrozenTable("word"))));
        assert!(t.vector_mut(Param::Alpha, 0).is_err());
    }

    #[test]
    fn out_of_range_rows() {
        let t = table();
        assert!(matches!(t.rho(2), Err(Error::IdOutOfRange { id: 2, size: 2, .. })));
    }

    #[test]
    fn random_init_within_scale() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let t = EmbeddingTable::random(ObjectClass::Unit, 10, 4, 0.02, &mut rng);
        assert!(t.rho_matrix().iter().chain(t.alpha_matrix()).all(|v| v.abs() <= 0.02));
        assert_ne!(t.rho_matrix(), t.alpha_matrix());
    }
}
