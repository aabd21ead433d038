//! Search for the shortest linear-anneal duration reaching a target success
//! probability: double (or halve) from an initial guess until the target is
//! bracketed, then bisect until the bracket ratio meets the precision.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{aqc_probability, deadline_after, AnnealSchedule, DynamicsError, EvolveOptions};
use crate::encoding::EnergyTable;
use crate::instance::Instance;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct T99Options {
    pub t_init: f64,
    pub max_doublings: u32,
    pub max_halvings: u32,
    pub wall_clock: Option<Duration>,
    pub target: f64,
    /// Stop bisecting once `high / low` is at most this.
    pub precision: f64,
}

impl Default for T99Options {
    fn default() -> Self {
        T99Options {
            t_init: 1.0,
            max_doublings: 20,
            max_halvings: 64,
            wall_clock: None,
            target: 0.99,
            precision: 1.01,
        }
    }
}

/// Outcome of the search. `t99` is the upper bracket end, so the success
/// probability there is at least the target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct T99Search {
    pub t99: Option<f64>,
    pub bracket: Option<(f64, f64)>,
    pub probe_log: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AqcResult {
    pub instance_id: String,
    pub t99: Option<f64>,
    pub bracket: Option<(f64, f64)>,
    pub probe_log: Vec<(f64, f64)>,
}

/// Runs the doubling/halving plus bisection procedure against an arbitrary
/// probability function `probe(t_f, deadline)`. Budget errors from the probe
/// end the search with no result instead of failing.
pub fn find_t99_with<F>(mut probe: F, options: &T99Options) -> Result<T99Search, DynamicsError>
where
    F: FnMut(f64, Option<Instant>) -> Result<f64, DynamicsError>,
{
    if !(options.t_init > 0.0) || !(options.precision > 1.0) {
        return Err(DynamicsError::InvalidParameter(
            "t_init must be positive and precision above 1".into(),
        ));
    }
    let deadline = deadline_after(Instant::now(), options.wall_clock);
    let mut log = Vec::new();
    let not_found = |log: Vec<(f64, f64)>| T99Search {
        t99: None,
        bracket: None,
        probe_log: log,
    };
    macro_rules! run {
        ($t:expr) => {{
            if deadline.is_some_and(|d| Instant::now() >= d) {
                return Ok(not_found(log));
            }
            match probe($t, deadline) {
                Ok(p) => {
                    log.push(($t, p));
                    p
                }
                Err(e) if e.is_budget() => return Ok(not_found(log)),
                Err(e) => return Err(e),
            }
        }};
    }

    let mut t = options.t_init;
    let p = run!(t);
    let (mut low, mut high);
    if p >= options.target {
        high = t;
        let mut halvings = 0;
        loop {
            if halvings == options.max_halvings {
                return Err(DynamicsError::InvalidParameter(format!(
                    "success probability stays above target down to t_f = {t}"
                )));
            }
            halvings += 1;
            t /= 2.0;
            if run!(t) < options.target {
                low = t;
                break;
            }
            high = t;
        }
    } else {
        low = t;
        let mut doublings = 0;
        loop {
            if doublings == options.max_doublings {
                return Ok(not_found(log));
            }
            doublings += 1;
            t *= 2.0;
            if run!(t) >= options.target {
                high = t;
                break;
            }
            low = t;
        }
    }
    while high / low > options.precision {
        let mid = 0.5 * (low + high);
        if run!(mid) >= options.target {
            high = mid;
        } else {
            low = mid;
        }
    }
    Ok(T99Search {
        t99: Some(high),
        bracket: Some((low, high)),
        probe_log: log,
    })
}

pub fn find_t99(
    instance: &Instance,
    table: &EnergyTable,
    options: &T99Options,
    evolve: &EvolveOptions,
) -> Result<AqcResult, DynamicsError> {
    let search = find_t99_with(
        |t_f, deadline| {
            let mut opts = *evolve;
            opts.limits.deadline = match (opts.limits.deadline, deadline) {
                (Some(a), Some(b)) => Some(a.min(b)),
                (a, b) => a.or(b),
            };
            aqc_probability(table, &AnnealSchedule::linear(t_f)?, &opts)
        },
        options,
    )?;
    Ok(AqcResult {
        instance_id: instance.id.clone(),
        t99: search.t99,
        bracket: search.bracket,
        probe_log: search.probe_log,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::build_energy_table;
    use crate::instance::{generate_dataset, Instance};

    fn check_bracket(s: &T99Search, target: f64) {
        let (low, high) = s.bracket.unwrap();
        assert_eq!(s.t99, Some(high));
        assert!(high / low <= 1.01);
        let p_at = |t: f64| s.probe_log.iter().find(|(x, _)| *x == t).unwrap().1;
        assert!(p_at(high) >= target);
        assert!(p_at(low) < target);
    }

    #[test]
    fn closed_form_curve_inverts() {
        let s = find_t99_with(|t, _| Ok(1.0 - (-t).exp()), &T99Options::default()).unwrap();
        let exact = -(0.01f64).ln();
        let t99 = s.t99.unwrap();
        assert!(t99 >= exact && t99 <= exact * 1.01, "{t99} vs {exact}");
        check_bracket(&s, 0.99);
    }

    #[test]
    fn halving_branch() {
        let opts = T99Options {
            t_init: 100.0,
            ..Default::default()
        };
        let s = find_t99_with(|t, _| Ok(1.0 - (-t).exp()), &opts).unwrap();
        // first probe is above target, second is a halving
        assert!(s.probe_log[0].1 >= 0.99);
        assert_eq!(s.probe_log[1].0, 50.0);
        check_bracket(&s, 0.99);
    }

    #[test]
    fn budget_exhaustion_is_not_found() {
        let opts = T99Options {
            max_doublings: 3,
            ..Default::default()
        };
        let s = find_t99_with(|_, _| Ok(0.1), &opts).unwrap();
        assert_eq!(s.t99, None);
        assert!(s.probe_log.len() <= 5);
        let s = find_t99_with(
            |_, _| Err(DynamicsError::StepLimitExceeded { steps: 1, time: 0.0 }),
            &T99Options::default(),
        )
        .unwrap();
        assert_eq!(s.t99, None);
        assert!(s.probe_log.is_empty());
        let e = find_t99_with(
            |_, _| Err(DynamicsError::NormDriftExceeded { time: 0.0, drift: 1.0 }),
            &T99Options::default(),
        );
        assert!(e.is_err());
    }

    #[test]
    fn real_instances_reach_target() {
        let d = generate_dataset(5, 60, 3, 2).unwrap();
        for inst in d.instances.iter().take(5) {
            let table = build_energy_table(inst).unwrap();
            let r = find_t99(inst, &table, &T99Options::default(), &EvolveOptions::default()).unwrap();
            let t99 = r.t99.expect("n = 5 instances anneal within budget");
            let p = aqc_probability(&table, &AnnealSchedule::linear(t99).unwrap(), &EvolveOptions::default()).unwrap();
            assert!(p >= 0.99);
            let (low, high) = r.bracket.unwrap();
            assert!(high / low <= 1.01);
        }
    }

    #[test]
    fn hard_instance_with_tiny_budget() {
        let inst = Instance::from_pairs(4, &[(1, 2), (-1, 2), (1, -2), (3, 4), (-3, 4), (3, -4)]).unwrap();
        let table = build_energy_table(&inst).unwrap();
        let opts = T99Options {
            t_init: 0.01,
            max_doublings: 3,
            ..Default::default()
        };
        let r = find_t99(&inst, &table, &opts, &EvolveOptions::default()).unwrap();
        assert_eq!(r.t99, None);
        assert!(r.probe_log.len() <= 5);
    }
}
