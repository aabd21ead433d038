//! Problem Hamiltonians for MAX 2-SAT and the transverse-field driver.
//!
//! Each clause contributes the projector onto its falsifying basis states, so
//! the diagonal of the problem Hamiltonian at index `k` is the number of
//! clauses assignment `k` leaves unsatisfied. Spins follow `s = +1` for bit 0.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_complex::Complex64;
use thiserror::Error;

use crate::instance::{Instance, BRUTE_FORCE_MAX_N};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EncodingError {
    #[error("energy table limited to n <= {max}, got n = {n}")]
    BudgetExceeded { n: usize, max: usize },
    #[error("state has dimension {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("no energy tables given")]
    EmptySet,
    #[error("energy tables mix variable counts {0} and {1}")]
    MixedN(usize, usize),
}

/// Diagonal of the problem Hamiltonian: unsatisfied-clause counts for every
/// assignment index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnergyTable {
    n: usize,
    energies: Vec<u32>,
    ground_index: usize,
    ground_degeneracy: usize,
}

impl EnergyTable {
    pub fn from_energies(n: usize, energies: Vec<u32>) -> Self {
        assert_eq!(energies.len(), 1 << n);
        let min = *energies.iter().min().expect("nonempty table");
        let ground_index = energies.iter().position(|&e| e == min).unwrap();
        let ground_degeneracy = energies.iter().filter(|&&e| e == min).count();
        EnergyTable {
            n,
            energies,
            ground_index,
            ground_degeneracy,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn energies(&self) -> &[u32] {
        &self.energies
    }

    /// Smallest index attaining the minimum energy.
    pub fn ground_index(&self) -> usize {
        self.ground_index
    }

    pub fn ground_degeneracy(&self) -> usize {
        self.ground_degeneracy
    }

    pub fn min_energy(&self) -> u32 {
        self.energies[self.ground_index]
    }

    pub fn max_energy(&self) -> u32 {
        *self.energies.iter().max().unwrap()
    }
}

pub fn build_energy_table(instance: &Instance) -> Result<EnergyTable, EncodingError> {
    let n = instance.n();
    if n > BRUTE_FORCE_MAX_N {
        return Err(EncodingError::BudgetExceeded {
            n,
            max: BRUTE_FORCE_MAX_N,
        });
    }
    let mut energies = vec![0u32; 1 << n];
    for clause in instance.clauses() {
        let (a, b) = (clause.first(), clause.second());
        let mask = (1usize << (a.var() - 1)) | (1usize << (b.var() - 1));
        let want = ((a.falsifying_bit() as usize) << (a.var() - 1))
            | ((b.falsifying_bit() as usize) << (b.var() - 1));
        for (k, e) in energies.iter_mut().enumerate() {
            if k & mask == want {
                *e += 1;
            }
        }
    }
    Ok(EnergyTable::from_energies(n, energies))
}

/// Two-body spin form of the problem Hamiltonian, stored exactly in quarter
/// units. `offset` carries the identity term so that the reconstruction equals
/// the unsatisfied-clause count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IsingCoefficients {
    n: usize,
    offset_q: i64,
    fields_q: Vec<i64>,
    couplings_q: BTreeMap<(usize, usize), i64>,
}

impl IsingCoefficients {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn offset(&self) -> f64 {
        self.offset_q as f64 / 4.0
    }

    /// `h_i` for 1-based variable `i`.
    pub fn field(&self, i: usize) -> f64 {
        self.fields_q[i - 1] as f64 / 4.0
    }

    pub fn fields(&self) -> Vec<f64> {
        self.fields_q.iter().map(|&q| q as f64 / 4.0).collect()
    }

    /// `J_ij` keyed by 1-based `(i, j)` with `i < j`; absent pairs are zero.
    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        let key = if i < j { (i, j) } else { (j, i) };
        self.couplings_q.get(&key).copied().unwrap_or(0) as f64 / 4.0
    }

    pub fn couplings(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.couplings_q
            .iter()
            .filter(|(_, &q)| q != 0)
            .map(|(&k, &q)| (k, q as f64 / 4.0))
    }

    /// Four times the energy of basis state `index`, in exact integers.
    pub fn energy_quarters(&self, index: u64) -> i64 {
        let spin = |i: usize| if (index >> (i - 1)) & 1 == 0 { 1i64 } else { -1 };
        let mut e = self.offset_q;
        for (i, &h) in self.fields_q.iter().enumerate() {
            e += h * spin(i + 1);
        }
        for (&(i, j), &jq) in &self.couplings_q {
            e += jq * spin(i) * spin(j);
        }
        e
    }

    pub fn energy(&self, index: u64) -> f64 {
        let spin = |i: usize| if (index >> (i - 1)) & 1 == 0 { 1.0 } else { -1.0 };
        let mut e = self.offset();
        for i in 1..=self.n {
            e += self.field(i) * spin(i);
        }
        for ((i, j), jv) in self.couplings() {
            e += jv * spin(i) * spin(j);
        }
        e
    }

    /// Line-oriented export: `offset v`, `h i v`, `J i j v`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "offset {}", self.offset()).unwrap();
        for i in 1..=self.n {
            writeln!(out, "h {} {}", i, self.field(i)).unwrap();
        }
        for ((i, j), v) in self.couplings() {
            writeln!(out, "J {i} {j} {v}").unwrap();
        }
        out
    }
}

/// Expands each clause `(1 - s_a σ_a)(1 - s_b σ_b) / 4`.
pub fn build_ising(instance: &Instance) -> IsingCoefficients {
    let n = instance.n();
    let mut offset_q = 0;
    let mut fields_q = vec![0i64; n];
    let mut couplings_q = BTreeMap::new();
    for clause in instance.clauses() {
        let (a, b) = (clause.first(), clause.second());
        let (sa, sb) = (i64::from(a.sign()), i64::from(b.sign()));
        offset_q += 1;
        fields_q[a.var() - 1] -= sa;
        fields_q[b.var() - 1] -= sb;
        *couplings_q.entry((a.var(), b.var())).or_insert(0) += sa * sb;
    }
    IsingCoefficients {
        n,
        offset_q,
        fields_q,
        couplings_q,
    }
}

/// `out = -Σ_i X_i input`: each amplitude becomes minus the sum over its
/// single-bit-flip neighbours.
pub fn apply_driver_into(input: &[Complex64], out: &mut [Complex64]) {
    debug_assert_eq!(input.len(), out.len());
    let dim = input.len();
    out.iter_mut().for_each(|o| *o = Complex64::new(0.0, 0.0));
    let mut bit = 1;
    while bit < dim {
        for (k, o) in out.iter_mut().enumerate() {
            *o -= input[k ^ bit];
        }
        bit <<= 1;
    }
}

/// Checked driver application on a `2^n` amplitude vector.
pub fn apply_driver(n: usize, state: &[Complex64]) -> Result<Vec<Complex64>, EncodingError> {
    if state.len() != 1 << n {
        return Err(EncodingError::DimensionMismatch {
            expected: 1 << n,
            got: state.len(),
        });
    }
    let mut out = vec![Complex64::new(0.0, 0.0); state.len()];
    apply_driver_into(state, &mut out);
    Ok(out)
}

/// Difference between the largest and smallest unsatisfied counts.
pub fn energy_spread(table: &EnergyTable) -> u32 {
    table.max_energy() - table.min_energy()
}

/// Mean problem energy spread divided by the driver spread `2n`.
pub fn heuristic_gamma(tables: &[EnergyTable]) -> Result<f64, EncodingError> {
    let first = tables.first().ok_or(EncodingError::EmptySet)?;
    let n = first.n();
    if let Some(t) = tables.iter().find(|t| t.n() != n) {
        return Err(EncodingError::MixedN(n, t.n()));
    }
    let total: u64 = tables.iter().map(|t| u64::from(energy_spread(t))).sum();
    Ok(total as f64 / tables.len() as f64 / (2 * n) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{count_satisfied, generate_instance, worked_example, Assignment};
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn worked_example_table() {
        let t = build_energy_table(&worked_example()).unwrap();
        assert_eq!(t.min_energy(), 1);
        assert_eq!(t.ground_degeneracy(), 4);
        assert_eq!(t.ground_index(), 0);
    }

    #[test]
    fn worked_example_spread_by_enumeration() {
        let inst = worked_example();
        let unsat: Vec<usize> = (0..8).map(|k| inst.unsatisfied_at(k)).collect();
        let spread = unsat.iter().max().unwrap() - unsat.iter().min().unwrap();
        let t = build_energy_table(&inst).unwrap();
        assert_eq!(energy_spread(&t) as usize, spread);
        assert_eq!(t.max_energy() as usize - 1, spread);
    }

    #[test]
    fn zero_clause_table() {
        let inst = Instance::new(3, vec![]).unwrap();
        let t = build_energy_table(&inst).unwrap();
        assert!(t.energies().iter().all(|&e| e == 0));
        assert_eq!(energy_spread(&t), 0);
    }

    #[test]
    fn table_matches_count_satisfied() {
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let inst = generate_instance(8, 24, &mut rng).unwrap();
            let t = build_energy_table(&inst).unwrap();
            for k in 0..256u64 {
                let sat = count_satisfied(&inst, &Assignment::from_index(8, k)).unwrap();
                assert_eq!(t.energies()[k as usize] as usize, inst.m() - sat);
            }
        }
    }

    #[test]
    fn single_clause_ising() {
        let pos = build_ising(&Instance::from_pairs(2, &[(1, 2)]).unwrap());
        assert_eq!(pos.offset(), 0.25);
        assert_eq!(pos.fields(), vec![-0.25, -0.25]);
        assert_eq!(pos.coupling(1, 2), 0.25);
        let neg = build_ising(&Instance::from_pairs(2, &[(-1, -2)]).unwrap());
        assert_eq!(neg.offset(), 0.25);
        assert_eq!(neg.fields(), vec![0.25, 0.25]);
        assert_eq!(neg.coupling(2, 1), 0.25);
    }

    #[test]
    fn ising_reconstruction_is_exact() {
        for seed in 0..40 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = rng.random_range(2..=10);
            let m = rng.random_range(1..=3 * n);
            let inst = generate_instance(n, m, &mut rng).unwrap();
            let t = build_energy_table(&inst).unwrap();
            let ising = build_ising(&inst);
            for k in 0..(1u64 << n) {
                assert_eq!(ising.energy_quarters(k), 4 * i64::from(t.energies()[k as usize]));
                assert!((ising.energy(k) - f64::from(t.energies()[k as usize])).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn ising_text_export() {
        let text = build_ising(&Instance::from_pairs(2, &[(1, -2)]).unwrap()).to_text();
        assert_eq!(text, "offset 0.25\nh 1 -0.25\nh 2 0.25\nJ 1 2 -0.25\n");
    }

    #[test]
    fn driver_on_uniform_and_basis_states() {
        let n = 4;
        let dim = 1 << n;
        let uniform = vec![c(1.0 / (dim as f64).sqrt(), 0.0); dim];
        let out = apply_driver(n, &uniform).unwrap();
        for (o, u) in out.iter().zip(&uniform) {
            assert!((o - u * -(n as f64)).norm() < 1e-14);
        }
        let mut basis = vec![c(0.0, 0.0); 4];
        basis[0] = c(1.0, 0.0);
        let out = apply_driver(2, &basis).unwrap();
        assert_eq!(out, vec![c(0.0, 0.0), c(-1.0, 0.0), c(-1.0, 0.0), c(0.0, 0.0)]);
        assert!(matches!(
            apply_driver(3, &basis),
            Err(EncodingError::DimensionMismatch { expected: 8, got: 4 })
        ));
    }

    fn dense_driver(n: usize) -> DMatrix<f64> {
        // -Σ_i I ⊗ .. ⊗ σx ⊗ .. ⊗ I built from Kronecker products.
        let dim = 1 << n;
        let sx = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let id = DMatrix::<f64>::identity(2, 2);
        let mut total = DMatrix::zeros(dim, dim);
        for q in 0..n {
            // qubit q corresponds to bit q; Kronecker order puts the highest bit first
            let mut op = DMatrix::from_element(1, 1, 1.0);
            for b in (0..n).rev() {
                op = op.kronecker(if b == q { &sx } else { &id });
            }
            total -= op;
        }
        total
    }

    #[test]
    fn driver_matches_dense_matrix() {
        let n = 6;
        let dim = 1 << n;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let re: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let im: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let state: Vec<Complex64> = re.iter().zip(&im).map(|(&a, &b)| c(a, b)).collect();
        let d = dense_driver(n);
        let dense_re = &d * nalgebra::DVector::from_vec(re);
        let dense_im = &d * nalgebra::DVector::from_vec(im);
        let out = apply_driver(n, &state).unwrap();
        for k in 0..dim {
            assert!((out[k] - c(dense_re[k], dense_im[k])).norm() < 1e-12);
        }
    }

    #[test]
    fn driver_spectrum_spread_is_2n() {
        for n in 1..=6 {
            let eig = dense_driver(n).symmetric_eigen();
            let max = eig.eigenvalues.max();
            let min = eig.eigenvalues.min();
            assert!((max - min - 2.0 * n as f64).abs() < 1e-10);
            assert!((min + n as f64).abs() < 1e-10);
        }
    }

    #[test]
    fn driver_is_hermitian_and_permutation_covariant() {
        let n = 5;
        let dim = 1 << n;
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut rand_state = || -> Vec<Complex64> {
            (0..dim)
                .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect()
        };
        let u = rand_state();
        let v = rand_state();
        let du = apply_driver(n, &u).unwrap();
        let dv = apply_driver(n, &v).unwrap();
        let inner = |a: &[Complex64], b: &[Complex64]| -> Complex64 {
            a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
        };
        assert!((inner(&u, &dv) - inner(&du, &v)).norm() < 1e-12);
        // relabel bits by reversing their order
        let perm = |k: usize| (0..n).fold(0, |acc, b| acc | (((k >> b) & 1) << (n - 1 - b)));
        let pu: Vec<Complex64> = (0..dim).map(|k| u[perm(k)]).collect();
        let dpu = apply_driver(n, &pu).unwrap();
        for k in 0..dim {
            assert!((dpu[k] - du[perm(k)]).norm() < 1e-12);
        }
    }

    #[test]
    fn gamma_arithmetic() {
        let n = 5;
        let table_with_spread = |s: u32| {
            let mut e = vec![0u32; 1 << n];
            e[1] = s;
            EnergyTable::from_energies(n, e)
        };
        assert_eq!(heuristic_gamma(&[table_with_spread(10)]).unwrap(), 1.0);
        let g = heuristic_gamma(&[table_with_spread(10), table_with_spread(14)]).unwrap();
        assert!((g - 1.2).abs() < 1e-15);
        let g2 = heuristic_gamma(&[table_with_spread(14), table_with_spread(10)]).unwrap();
        assert_eq!(g, g2);
        assert_eq!(heuristic_gamma(&[]), Err(EncodingError::EmptySet));
        let other = EnergyTable::from_energies(2, vec![0; 4]);
        assert_eq!(
            heuristic_gamma(&[table_with_spread(1), other]),
            Err(EncodingError::MixedN(5, 2))
        );
    }

    #[test]
    fn budget_guard() {
        let inst = Instance::new(25, vec![]).unwrap();
        assert!(matches!(
            build_energy_table(&inst),
            Err(EncodingError::BudgetExceeded { .. })
        ));
    }
}
