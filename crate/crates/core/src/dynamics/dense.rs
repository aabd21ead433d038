//! Dense real-symmetric Hamiltonians for small systems: exact spectra,
//! eigenbasis propagation, and the infinite-time average of the walk
//! success probability.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::DynamicsError;
use crate::encoding::EnergyTable;

/// Dense diagonalization budget for the infinite-time average.
pub const P_INF_MAX_N: usize = 14;

/// Relative width within which eigenvalues are treated as one degenerate level.
pub const DEGENERACY_RTOL: f64 = 1e-9;

/// `driver·H_driver + problem·diag(E)` as a dense matrix.
pub fn dense_hamiltonian(table: &EnergyTable, driver: f64, problem: f64) -> DMatrix<f64> {
    let dim = table.dim();
    let mut h = DMatrix::zeros(dim, dim);
    for k in 0..dim {
        h[(k, k)] = problem * f64::from(table.energies()[k]);
        let mut bit = 1;
        while bit < dim {
            h[(k, k ^ bit)] = -driver;
            bit <<= 1;
        }
    }
    h
}

/// Eigenpairs sorted by ascending eigenvalue.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

pub fn diagonalize(h: DMatrix<f64>) -> Spectrum {
    let eig = h.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(order.len(), order.iter().map(|&i| eig.eigenvalues[i]));
    let vectors = DMatrix::from_columns(&order.iter().map(|&i| eig.eigenvectors.column(i)).collect::<Vec<_>>());
    Spectrum { values, vectors }
}

impl Spectrum {
    /// `exp(−iHt)·psi` through the eigenbasis.
    pub fn propagate(&self, psi: &[Complex64], t: f64) -> Vec<Complex64> {
        let dim = psi.len();
        let mut out = vec![Complex64::new(0.0, 0.0); dim];
        for (j, col) in self.vectors.column_iter().enumerate() {
            let overlap: Complex64 = col.iter().zip(psi).map(|(&v, &p)| p * v).sum();
            let c = overlap * Complex64::new(0.0, -self.values[j] * t).exp();
            for (o, &v) in out.iter_mut().zip(col.iter()) {
                *o += c * v;
            }
        }
        out
    }

    /// Index ranges of eigenvalue clusters closer than `rtol` (relative).
    pub fn degenerate_levels(&self, rtol: f64) -> Vec<std::ops::Range<usize>> {
        let mut levels = Vec::new();
        let mut start = 0;
        for j in 1..=self.values.len() {
            let split = j == self.values.len() || {
                let (a, b) = (self.values[j - 1], self.values[j]);
                (b - a) > rtol * a.abs().max(b.abs()).max(1.0)
            };
            if split {
                levels.push(start..j);
                start = j;
            }
        }
        levels
    }
}

/// Infinite-time average of the ground-state probability under the walk
/// Hamiltonian: `Σ_levels |⟨ψ_G|P_level|ψ(0)⟩|²`.
pub fn qw_infinite_time_average(table: &EnergyTable, gamma: f64) -> Result<f64, DynamicsError> {
    if table.n() > P_INF_MAX_N {
        return Err(DynamicsError::BudgetExceeded {
            n: table.n(),
            max: P_INF_MAX_N,
        });
    }
    let spectrum = diagonalize(dense_hamiltonian(table, gamma, 1.0));
    let dim = table.dim();
    let amp0 = 1.0 / (dim as f64).sqrt();
    let ground = table.ground_index();
    let mut total = 0.0;
    for level in spectrum.degenerate_levels(DEGENERACY_RTOL) {
        let mut proj = 0.0;
        for j in level {
            let col = spectrum.vectors.column(j);
            let overlap: f64 = col.sum() * amp0;
            proj += col[ground] * overlap;
        }
        total += proj * proj;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::build_energy_table;
    use crate::instance::Instance;

    #[test]
    fn vanishing_gamma_gives_uniform_overlap() {
        let inst = Instance::from_pairs(4, &[(1, 2), (-1, 3), (2, -4), (-3, -4), (1, 4)]).unwrap();
        let table = build_energy_table(&inst).unwrap();
        let p = qw_infinite_time_average(&table, 1e-12).unwrap();
        assert!((p - 1.0 / 16.0).abs() < 1e-9, "{p}");
    }

    #[test]
    fn zero_clause_instance_keeps_initial_overlap() {
        // ψ(0) is an eigenstate, so the average equals |⟨0|ψ0⟩|² = 2^-n.
        let table = build_energy_table(&Instance::new(3, vec![]).unwrap()).unwrap();
        let p = qw_infinite_time_average(&table, 1.0).unwrap();
        assert!((p - 0.125).abs() < 1e-12);
    }

    #[test]
    fn degenerate_levels_group_close_values() {
        let s = Spectrum {
            values: DVector::from_vec(vec![-1.0, -1.0 + 1e-12, 0.5, 2.0, 2.0]),
            vectors: DMatrix::identity(5, 5),
        };
        assert_eq!(s.degenerate_levels(1e-9), vec![0..2, 2..3, 3..5]);
    }

    #[test]
    fn budget_guard() {
        let table = EnergyTable::from_energies(15, vec![0; 1 << 15]);
        assert!(matches!(
            qw_infinite_time_average(&table, 1.0),
            Err(DynamicsError::BudgetExceeded { .. })
        ));
    }
}
