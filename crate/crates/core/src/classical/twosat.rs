//! Linear-time 2-SAT decision through strongly connected components of the
//! implication graph.

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};

use crate::instance::{Instance, Literal};

fn node(lit: Literal) -> NodeIndex {
    NodeIndex::new(2 * (lit.var() - 1) + usize::from(!lit.is_positive()))
}

/// True iff every clause can be satisfied at once.
pub fn two_sat_satisfiable(instance: &Instance) -> bool {
    let n = instance.n();
    let mut graph: DiGraph<(), ()> = DiGraph::with_capacity(2 * n, 2 * instance.m());
    for _ in 0..2 * n {
        graph.add_node(());
    }
    for c in instance.clauses() {
        let (a, b) = (c.first(), c.second());
        graph.add_edge(node(a.negated()), node(b), ());
        graph.add_edge(node(b.negated()), node(a), ());
    }
    let mut component = vec![0usize; 2 * n];
    for (id, scc) in tarjan_scc(&graph).into_iter().enumerate() {
        for v in scc {
            component[v.index()] = id;
        }
    }
    (0..n).all(|i| component[2 * i] != component[2 * i + 1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{brute_force_optima, generate_instance, worked_example};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn small_cases() {
        assert!(!two_sat_satisfiable(&worked_example()));
        assert!(two_sat_satisfiable(&Instance::from_pairs(2, &[(1, 2)]).unwrap()));
        assert!(two_sat_satisfiable(&Instance::new(3, vec![]).unwrap()));
        let full = Instance::from_pairs(2, &[(1, 2), (-1, 2), (1, -2), (-1, -2)]).unwrap();
        assert!(!two_sat_satisfiable(&full));
    }

    #[test]
    fn agrees_with_exhaustive_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for i in 0..600 {
            let n = 2 + i % 9;
            let m = (1 + i % 4) * n / 2 + 1;
            let inst = generate_instance(n, m.min(2 * n * (n - 1)), &mut rng).unwrap();
            let (best, _) = brute_force_optima(&inst).unwrap();
            assert_eq!(two_sat_satisfiable(&inst), best == inst.m(), "{inst:?}");
        }
    }
}
