//! DIMACS-style text form: `c key=value` metadata comments, a `p cnf n m`
//! header, then one `a b 0` line per clause.

use std::fmt::Write as _;

use super::{Clause, Instance, InstanceError, Literal};

pub fn serialize_instance(instance: &Instance) -> String {
    let mut out = String::new();
    if !instance.id.is_empty() {
        writeln!(out, "c id={}", instance.id).unwrap();
    }
    if let Some(seed) = instance.seed {
        writeln!(out, "c seed={seed}").unwrap();
    }
    if let Some(attempt) = instance.attempt {
        writeln!(out, "c attempt={attempt}").unwrap();
    }
    writeln!(out, "c canonicalized={}", instance.canonicalized).unwrap();
    writeln!(out, "p cnf {} {}", instance.n(), instance.m()).unwrap();
    for c in instance.clauses() {
        writeln!(out, "{} {} 0", c.first(), c.second()).unwrap();
    }
    out
}

fn parse_header(line: &str) -> Result<(usize, usize), InstanceError> {
    let bad = || InstanceError::MalformedHeader(line.to_string());
    let mut parts = line.split_whitespace();
    if parts.next() != Some("p") || parts.next() != Some("cnf") {
        return Err(bad());
    }
    let n = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
    let m = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
    if parts.next().is_some() {
        return Err(bad());
    }
    Ok((n, m))
}

pub fn parse_instance(text: &str) -> Result<Instance, InstanceError> {
    let mut header: Option<(usize, usize)> = None;
    let mut clauses = Vec::new();
    let mut id = None;
    let mut seed = None;
    let mut attempt = None;
    let mut canonicalized = false;

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        if let Some(rest) = line.strip_prefix('c') {
            if !(rest.is_empty() || rest.starts_with(char::is_whitespace)) {
                return Err(InstanceError::MalformedClause {
                    line: lineno + 1,
                    text: raw.to_string(),
                });
            }
            if let Some((key, value)) = rest.trim().split_once('=') {
                let value = value.trim();
                let bad_meta = || InstanceError::MalformedClause {
                    line: lineno + 1,
                    text: raw.to_string(),
                };
                match key.trim() {
                    "id" => id = Some(value.to_string()),
                    "seed" => seed = Some(value.parse().map_err(|_| bad_meta())?),
                    "attempt" => attempt = Some(value.parse().map_err(|_| bad_meta())?),
                    "canonicalized" => canonicalized = value.parse().map_err(|_| bad_meta())?,
                    _ => {}
                }
            }
            continue;
        }
        if line.starts_with('p') {
            if header.is_some() {
                return Err(InstanceError::MalformedHeader(format!("second header: {line}")));
            }
            header = Some(parse_header(line)?);
            continue;
        }
        let Some((n, _)) = header else {
            return Err(InstanceError::MalformedHeader("clause before header".into()));
        };
        let bad = || InstanceError::MalformedClause {
            line: lineno + 1,
            text: raw.to_string(),
        };
        let nums: Vec<i64> = line
            .split_whitespace()
            .map(|t| t.parse::<i64>().map_err(|_| bad()))
            .collect::<Result<_, _>>()?;
        if nums.len() != 3 || nums[2] != 0 || nums[0] == 0 || nums[1] == 0 {
            return Err(bad());
        }
        let mut lits = [Literal(1), Literal(1)];
        for (slot, &code) in lits.iter_mut().zip(&nums[..2]) {
            let var = code.unsigned_abs() as usize;
            if var > n {
                return Err(InstanceError::VariableOutOfRange { var, n });
            }
            *slot = Literal::new(code as i32)?;
        }
        clauses.push(Clause::new(lits[0], lits[1])?);
    }

    let (n, m) = header.ok_or_else(|| InstanceError::MalformedHeader("missing header".into()))?;
    if clauses.len() != m {
        return Err(InstanceError::MalformedHeader(format!(
            "header declares {m} clauses, found {}",
            clauses.len()
        )));
    }
    let mut inst = Instance::new(n, clauses)?;
    inst.id = id.unwrap_or_default();
    inst.seed = seed;
    inst.attempt = attempt;
    inst.canonicalized = canonicalized;
    Ok(inst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{generate_instance, worked_example};
    use proptest::prelude::*;
    use rand::SeedableRng;

    #[test]
    fn worked_example_text() {
        let text = serialize_instance(&worked_example());
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines.contains(&"p cnf 3 6"));
        assert_eq!(lines.iter().filter(|l| l.ends_with(" 0")).count(), 6);
        assert_eq!(lines.last(), Some(&"-2 -3 0"));
    }

    #[test]
    fn out_of_range_variable() {
        let text = "p cnf 3 1\n1 -7 0\n";
        assert_eq!(
            parse_instance(text),
            Err(InstanceError::VariableOutOfRange { var: 7, n: 3 })
        );
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(parse_instance("1 2 0\n"), Err(InstanceError::MalformedHeader(_))));
        assert!(matches!(parse_instance("p cnf x 1\n"), Err(InstanceError::MalformedHeader(_))));
        assert!(matches!(
            parse_instance("p cnf 3 2\n1 2 0\n"),
            Err(InstanceError::MalformedHeader(_))
        ));
        assert!(matches!(
            parse_instance("p cnf 3 2\n1 2 0\n2 1 0\n"),
            Err(InstanceError::DuplicateClause(1, 2))
        ));
        assert!(matches!(
            parse_instance("p cnf 3 1\n1 -1 0\n"),
            Err(InstanceError::RepeatedVariable(1, -1))
        ));
        assert!(matches!(
            parse_instance("p cnf 3 1\n1 2 3 0\n"),
            Err(InstanceError::MalformedClause { line: 2, .. })
        ));
    }

    #[test]
    fn plain_dimacs_without_metadata() {
        let inst = parse_instance("c generated elsewhere\np cnf 2 1\n2 -1 0\n").unwrap();
        assert_eq!(inst.n(), 2);
        assert_eq!(inst.clauses()[0], Clause::from_codes(-1, 2).unwrap());
        assert!(inst.id.is_empty());
        assert!(!inst.canonicalized);
    }

    proptest! {
        #[test]
        fn round_trip(seed in any::<u64>(), n in 2usize..12, density in 1usize..4, with_meta in any::<bool>()) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut inst = generate_instance(n, (density * n).min(2 * n * (n - 1)), &mut rng).unwrap();
            if with_meta {
                inst.seed = Some(seed);
                inst.attempt = Some(seed % 1000);
                inst.canonicalized = true;
                inst.id = format!("m2s-n{n}-s{seed}");
            }
            let text = serialize_instance(&inst);
            prop_assert_eq!(parse_instance(&text).unwrap(), inst);
        }
    }
}
