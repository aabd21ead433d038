//! MAX 2-SAT instances: literals, clauses, assignments, random generation,
//! exhaustive optimum search and the zero-optimum canonical form.
//!
//! Truth values follow the binary encoding used throughout the crate: bit 0
//! means *true* and bit 1 means *false*. Variable `i` (1-based) occupies bit
//! position `i - 1` of an assignment's integer index.

mod format;
mod generate;

use std::collections::HashSet;
use std::fmt;

use thiserror::Error;

pub use format::{parse_instance, serialize_instance};
pub use generate::{
    derive_instance_seed, generate_dataset, generate_instance, generated_instance, instance_id, Dataset,
    DEFAULT_CLAUSE_FACTOR,
};

/// Largest variable count accepted by the exhaustive routines (2^24 assignments).
pub const BRUTE_FORCE_MAX_N: usize = 24;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InstanceError {
    #[error("cannot draw {m} distinct clauses over {n} variables (at most {max})")]
    InfeasibleClauseCount { n: usize, m: usize, max: usize },
    #[error("assignment has {got} bits but the instance has {expected} variables")]
    LengthMismatch { expected: usize, got: usize },
    #[error("exhaustive search limited to n <= {max}, instance has n = {n}")]
    BudgetExceeded { n: usize, max: usize },
    #[error("witness satisfies {got} clauses but the optimum satisfies {best}")]
    NonOptimalWitness { got: usize, best: usize },
    #[error("literal code 0 is not allowed")]
    ZeroLiteral,
    #[error("variable {var} out of range 1..={n}")]
    VariableOutOfRange { var: usize, n: usize },
    #[error("clause ({0}, {1}) repeats a variable")]
    RepeatedVariable(i32, i32),
    #[error("duplicate clause ({0}, {1})")]
    DuplicateClause(i32, i32),
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("malformed clause line {line}: {text}")]
    MalformedClause { line: usize, text: String },
    #[error("variable count must be positive")]
    EmptyInstance,
}

/// A signed, nonzero variable reference. Positive codes are unnegated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal(i32);

impl Literal {
    pub fn new(code: i32) -> Result<Self, InstanceError> {
        if code == 0 {
            return Err(InstanceError::ZeroLiteral);
        }
        Ok(Literal(code))
    }

    #[inline]
    pub fn code(self) -> i32 {
        self.0
    }

    /// 1-based variable index.
    #[inline]
    pub fn var(self) -> usize {
        self.0.unsigned_abs() as usize
    }

    #[inline]
    pub fn is_positive(self) -> bool {
        self.0 > 0
    }

    /// `+1` for an unnegated literal, `-1` for a negated one.
    #[inline]
    pub fn sign(self) -> i32 {
        self.0.signum()
    }

    #[inline]
    pub fn negated(self) -> Self {
        Literal(-self.0)
    }

    /// The bit value of the variable that makes this literal false.
    #[inline]
    pub fn falsifying_bit(self) -> u64 {
        u64::from(self.is_positive())
    }

    /// Whether the literal is true under the assignment encoded by `index`.
    #[inline]
    pub fn holds_at(self, index: u64) -> bool {
        (index >> (self.var() - 1)) & 1 != self.falsifying_bit()
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A disjunction of two literals on distinct variables, stored with the
/// lower variable first so that unordered-pair equality is plain equality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Clause {
    first: Literal,
    second: Literal,
}

impl Clause {
    pub fn new(a: Literal, b: Literal) -> Result<Self, InstanceError> {
        if a.var() == b.var() {
            return Err(InstanceError::RepeatedVariable(a.code(), b.code()));
        }
        let (first, second) = if a.var() < b.var() { (a, b) } else { (b, a) };
        Ok(Clause { first, second })
    }

    pub fn from_codes(a: i32, b: i32) -> Result<Self, InstanceError> {
        Clause::new(Literal::new(a)?, Literal::new(b)?)
    }

    #[inline]
    pub fn first(&self) -> Literal {
        self.first
    }

    #[inline]
    pub fn second(&self) -> Literal {
        self.second
    }

    #[inline]
    pub fn literals(&self) -> [Literal; 2] {
        [self.first, self.second]
    }

    #[inline]
    pub fn satisfied_at(&self, index: u64) -> bool {
        self.first.holds_at(index) || self.second.holds_at(index)
    }
}

/// Truth assignment over `n` variables. `bits[i]` is the bit of variable
/// `i + 1`; `false` (bit 0) means the variable is true.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Assignment {
    bits: Vec<bool>,
}

impl Assignment {
    pub fn all_zeros(n: usize) -> Self {
        Assignment {
            bits: vec![false; n],
        }
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Assignment { bits }
    }

    /// Decode the integer index encoding (variable 1 is the least significant bit).
    pub fn from_index(n: usize, index: u64) -> Self {
        Assignment {
            bits: (0..n).map(|i| (index >> i) & 1 == 1).collect(),
        }
    }

    /// Build from logical truth values, `truth[i]` being the value of variable `i + 1`.
    pub fn from_truth(truth: &[bool]) -> Self {
        Assignment {
            bits: truth.iter().map(|&t| !t).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Logical value of 1-based variable `var`.
    pub fn value(&self, var: usize) -> bool {
        !self.bits[var - 1]
    }

    pub fn literal_holds(&self, lit: Literal) -> bool {
        self.value(lit.var()) == lit.is_positive()
    }

    /// Integer index encoding. Panics for more than 64 variables.
    pub fn index(&self) -> u64 {
        assert!(self.bits.len() <= 64, "index encoding needs n <= 64");
        self.bits
            .iter()
            .enumerate()
            .fold(0u64, |acc, (i, &b)| acc | (u64::from(b) << i))
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// A MAX 2-SAT formula together with its provenance metadata.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    n: usize,
    clauses: Vec<Clause>,
    pub seed: Option<u64>,
    pub attempt: Option<u64>,
    pub canonicalized: bool,
    pub id: String,
}

impl Instance {
    /// Validates variable ranges and rejects duplicate clauses.
    pub fn new(n: usize, clauses: Vec<Clause>) -> Result<Self, InstanceError> {
        if n == 0 {
            return Err(InstanceError::EmptyInstance);
        }
        let mut seen = HashSet::with_capacity(clauses.len());
        for c in &clauses {
            for lit in c.literals() {
                if lit.var() > n {
                    return Err(InstanceError::VariableOutOfRange { var: lit.var(), n });
                }
            }
            if !seen.insert(*c) {
                return Err(InstanceError::DuplicateClause(
                    c.first.code(),
                    c.second.code(),
                ));
            }
        }
        Ok(Instance {
            n,
            clauses,
            seed: None,
            attempt: None,
            canonicalized: false,
            id: String::new(),
        })
    }

    /// Convenience constructor from `(a, b)` literal code pairs.
    pub fn from_pairs(n: usize, pairs: &[(i32, i32)]) -> Result<Self, InstanceError> {
        let clauses = pairs
            .iter()
            .map(|&(a, b)| Clause::from_codes(a, b))
            .collect::<Result<Vec<_>, _>>()?;
        Instance::new(n, clauses)
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Clause count `m`.
    #[inline]
    pub fn m(&self) -> usize {
        self.clauses.len()
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn clause_density(&self) -> f64 {
        self.m() as f64 / self.n as f64
    }

    /// Number of clauses left unsatisfied by the assignment with this index.
    #[inline]
    pub fn unsatisfied_at(&self, index: u64) -> usize {
        self.clauses.iter().filter(|c| !c.satisfied_at(index)).count()
    }

    /// Relabel variables: variable `v` becomes `perm[v - 1]` (1-based targets).
    pub fn relabeled(&self, perm: &[usize]) -> Result<Self, InstanceError> {
        let clauses = self
            .clauses
            .iter()
            .map(|c| {
                let map = |l: Literal| Literal(l.sign() * perm[l.var() - 1] as i32);
                Clause::new(map(c.first), map(c.second))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut out = Instance::new(self.n, clauses)?;
        out.id = self.id.clone();
        Ok(out)
    }
}

/// Number of clauses with at least one true literal.
pub fn count_satisfied(instance: &Instance, assignment: &Assignment) -> Result<usize, InstanceError> {
    if assignment.len() != instance.n() {
        return Err(InstanceError::LengthMismatch {
            expected: instance.n(),
            got: assignment.len(),
        });
    }
    Ok(instance
        .clauses()
        .iter()
        .filter(|c| assignment.literal_holds(c.first) || assignment.literal_holds(c.second))
        .count())
}

fn check_budget(instance: &Instance) -> Result<(), InstanceError> {
    if instance.n() > BRUTE_FORCE_MAX_N {
        return Err(InstanceError::BudgetExceeded {
            n: instance.n(),
            max: BRUTE_FORCE_MAX_N,
        });
    }
    Ok(())
}

/// Summary of an exhaustive scan: best satisfied count, how many assignments
/// attain it, and the smallest such index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OptimumSummary {
    pub best_satisfied: usize,
    pub count: u64,
    pub first_index: u64,
}

pub fn optimum_summary(instance: &Instance) -> Result<OptimumSummary, InstanceError> {
    check_budget(instance)?;
    let mut best_unsat = usize::MAX;
    let mut count = 0;
    let mut first_index = 0;
    for k in 0..(1u64 << instance.n()) {
        let u = instance.unsatisfied_at(k);
        if u < best_unsat {
            best_unsat = u;
            count = 1;
            first_index = k;
        } else if u == best_unsat {
            count += 1;
        }
    }
    Ok(OptimumSummary {
        best_satisfied: instance.m() - best_unsat,
        count,
        first_index,
    })
}

/// Enumerates all `2^n` assignments. Returns the best satisfied count and
/// every maximizer in ascending index order.
pub fn brute_force_optima(instance: &Instance) -> Result<(usize, Vec<Assignment>), InstanceError> {
    check_budget(instance)?;
    let mut best_unsat = usize::MAX;
    let mut optima = Vec::new();
    for k in 0..(1u64 << instance.n()) {
        let u = instance.unsatisfied_at(k);
        if u < best_unsat {
            best_unsat = u;
            optima.clear();
        }
        if u == best_unsat {
            optima.push(k);
        }
    }
    let n = instance.n();
    Ok((
        instance.m() - best_unsat,
        optima.into_iter().map(|k| Assignment::from_index(n, k)).collect(),
    ))
}

pub fn has_unique_optimum(instance: &Instance) -> Result<bool, InstanceError> {
    Ok(optimum_summary(instance)?.count == 1)
}

/// Negates every literal of the variables set to bit 1 in `optimum`, making
/// the all-zeros assignment optimal. The satisfied-count spectrum is unchanged.
pub fn canonicalize_to_zero(instance: &Instance, optimum: &Assignment) -> Result<Instance, InstanceError> {
    if optimum.len() != instance.n() {
        return Err(InstanceError::LengthMismatch {
            expected: instance.n(),
            got: optimum.len(),
        });
    }
    if instance.n() <= BRUTE_FORCE_MAX_N {
        let best = optimum_summary(instance)?.best_satisfied;
        let got = count_satisfied(instance, optimum)?;
        if got != best {
            return Err(InstanceError::NonOptimalWitness { got, best });
        }
    }
    let flip = |l: Literal| if optimum.bits()[l.var() - 1] { l.negated() } else { l };
    let clauses = instance
        .clauses()
        .iter()
        .map(|c| Clause::new(flip(c.first), flip(c.second)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = Instance::new(instance.n(), clauses)?;
    out.seed = instance.seed;
    out.attempt = instance.attempt;
    out.id = instance.id.clone();
    out.canonicalized = true;
    Ok(out)
}

/// The worked three-variable example with four optimal assignments.
pub fn worked_example() -> Instance {
    Instance::from_pairs(3, &[(1, 2), (-1, 2), (1, -3), (-1, 3), (-2, 3), (-2, -3)])
        .expect("valid example")
        .with_id("worked-example")
}
