//! Maximum total DoF by exhaustive search over stream tuples.

use std::thread;

use serde::Serialize;
use thiserror::Error;

use crate::bounds::{pairwise_bound, simple_bound};
use crate::feasibility::{compute_s, feasibility_test, FeasibilityError, DEFAULT_TRIALS};
use crate::linalg::RandomSeed;
use crate::scenario::{Scenario, ScenarioError, ScenarioTemplate, UserConfig};

pub const DEFAULT_USER_CAP: usize = 5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DofError {
    #[error("{users} users exceed the search cap of {cap}")]
    TooManyUsers { users: usize, cap: usize },
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Feasibility(#[from] FeasibilityError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchOptions {
    pub seed: RandomSeed,
    pub trials: usize,
    /// Skip tuples that fail a necessary condition without running the test.
    pub use_pruning: bool,
    pub user_cap: usize,
    /// Worker threads for the tuples of one total; 1 runs inline.
    pub parallelism: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            seed: RandomSeed::DEFAULT,
            trials: DEFAULT_TRIALS,
            use_pruning: true,
            user_cap: DEFAULT_USER_CAP,
            parallelism: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DofResult {
    pub max_total: usize,
    /// Every feasible tuple reaching `max_total`, in enumeration order.
    pub argmax_tuples: Vec<Vec<usize>>,
    pub tuples_tested: usize,
    pub tuples_pruned: usize,
}

/// Candidate tuples grouped by total, largest total first, lexicographic
/// inside a group. Open slots range over `0..=min(M, N)`.
pub fn candidate_tuples(template: &ScenarioTemplate) -> Vec<Vec<Vec<usize>>> {
    let ranges: Vec<(usize, usize)> = template
        .users
        .iter()
        .map(|&(m, n, d)| d.map_or((0, m.min(n)), |d| (d, d)))
        .collect();
    let max_total: usize = ranges.iter().map(|r| r.1).sum();
    let mut groups = vec![Vec::new(); max_total + 1];
    let mut cur: Vec<usize> = ranges.iter().map(|r| r.0).collect();
    loop {
        groups[cur.iter().sum::<usize>()].push(cur.clone());
        // Odometer increment, last slot fastest, keeps each group sorted.
        let mut i = ranges.len();
        loop {
            if i == 0 {
                groups.reverse();
                return groups;
            }
            i -= 1;
            if cur[i] < ranges[i].1 {
                cur[i] += 1;
                break;
            }
            cur[i] = ranges[i].0;
        }
    }
}

/// The normalized scenario for a tuple, or `None` when no interference remains.
pub fn instantiate(template: &ScenarioTemplate, tuple: &[usize]) -> Result<Option<Scenario>, ScenarioError> {
    let users = template
        .users
        .iter()
        .zip(tuple)
        .map(|(&(m, n, _), &d)| UserConfig::new(m, n, d))
        .collect();
    match Scenario::new(users, template.edges.iter().copied()) {
        Ok(s) => Ok(Some(s)),
        Err(ScenarioError::EmptyInterference) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Necessary conditions used for pruning.
pub fn passes_screens(scenario: &Scenario) -> bool {
    compute_s(scenario) >= 0
        && pairwise_bound(scenario).iter().all(|p| p.ok)
        && simple_bound(scenario).iter().all(|e| e.ok)
}

enum Eval {
    Pruned,
    Tested(bool),
    Trivial,
}

fn evaluate(template: &ScenarioTemplate, tuple: &[usize], opts: &SearchOptions) -> Result<Eval, DofError> {
    let Some(scenario) = instantiate(template, tuple)? else {
        return Ok(Eval::Trivial);
    };
    if opts.use_pruning && !passes_screens(&scenario) {
        return Ok(Eval::Pruned);
    }
    Ok(Eval::Tested(feasibility_test(&scenario, opts.seed, opts.trials)?.feasible))
}

fn evaluate_group(
    template: &ScenarioTemplate,
    group: &[Vec<usize>],
    opts: &SearchOptions,
) -> Vec<Result<Eval, DofError>> {
    let workers = opts.parallelism.clamp(1, group.len().max(1));
    if workers == 1 {
        return group.iter().map(|t| evaluate(template, t, opts)).collect();
    }
    let chunk = group.len().div_ceil(workers);
    thread::scope(|scope| {
        let handles: Vec<_> = group
            .chunks(chunk)
            .map(|part| scope.spawn(move || part.iter().map(|t| evaluate(template, t, opts)).collect::<Vec<_>>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("worker panicked"))
            .collect()
    })
}

/// Searches the totals from the largest down and stops at the first total
/// with a feasible tuple.
pub fn max_dof(template: &ScenarioTemplate, opts: &SearchOptions) -> Result<DofResult, DofError> {
    if template.users.len() > opts.user_cap {
        return Err(DofError::TooManyUsers {
            users: template.users.len(),
            cap: opts.user_cap,
        });
    }
    let mut result = DofResult {
        max_total: 0,
        argmax_tuples: Vec::new(),
        tuples_tested: 0,
        tuples_pruned: 0,
    };
    for group in candidate_tuples(template) {
        let Some(first) = group.first() else {
            continue;
        };
        let total = first.iter().sum();
        for (tuple, eval) in group.iter().zip(evaluate_group(template, &group, opts)) {
            match eval? {
                Eval::Pruned => result.tuples_pruned += 1,
                Eval::Tested(ok) => {
                    result.tuples_tested += 1;
                    if ok {
                        result.argmax_tuples.push(tuple.clone());
                    }
                }
                Eval::Trivial => result.argmax_tuples.push(tuple.clone()),
            }
        }
        if !result.argmax_tuples.is_empty() {
            result.max_total = total;
            return Ok(result);
        }
    }
    Ok(result)
}

/// A feasible tuple and a smaller tuple found infeasible.
pub type MonotonicityViolation = (Vec<usize>, Vec<usize>);

/// Pairs `(d, d')` where `d` tested feasible, `d'` is `d` with one slot
/// lowered by one, and `d'` tested infeasible. Feasibility is expected to be
/// monotone, but that is an observation, not a theorem, so callers report
/// violations instead of failing on them.
pub fn monotonicity_audit(
    template: &ScenarioTemplate,
    opts: &SearchOptions,
) -> Result<Vec<MonotonicityViolation>, DofError> {
    let no_prune = SearchOptions {
        use_pruning: false,
        ..*opts
    };
    let mut feasible = std::collections::BTreeMap::new();
    for group in candidate_tuples(template) {
        for t in group {
            let ok = matches!(evaluate(template, &t, &no_prune)?, Eval::Tested(true) | Eval::Trivial);
            feasible.insert(t, ok);
        }
    }
    let mut violations = Vec::new();
    for (t, &ok) in &feasible {
        if !ok {
            continue;
        }
        for i in 0..t.len() {
            if t[i] == 0 {
                continue;
            }
            let mut lower = t.clone();
            lower[i] -= 1;
            if feasible.get(&lower) == Some(&false) {
                violations.push((t.clone(), lower));
            }
        }
    }
    Ok(violations)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::parse_template;

    fn search(text: &str, use_pruning: bool) -> DofResult {
        let opts = SearchOptions {
            use_pruning,
            ..SearchOptions::default()
        };
        max_dof(&parse_template(text).unwrap(), &opts).unwrap()
    }

    #[test]
    fn enumeration_order() {
        let t = parse_template("(2x1,?)(2x2,?)").unwrap();
        let g = candidate_tuples(&t);
        assert_eq!(g[0], vec![vec![1, 2]]);
        assert_eq!(g[1], vec![vec![0, 2], vec![1, 1]]);
        assert_eq!(g.last().unwrap(), &vec![vec![0, 0]]);
        let t = parse_template("(3x3,2)(2x2,?)").unwrap();
        let g = candidate_tuples(&t);
        assert!(g.iter().flatten().all(|t| t[0] == 2));
    }

    #[test]
    fn small_maxima() {
        let r = search("(2x2,?)^3", true);
        assert_eq!(r.max_total, 3);
        assert_eq!(r.argmax_tuples, vec![vec![1, 1, 1]]);

        let r = search("(1x1,?)^2", true);
        assert_eq!(r.max_total, 1);
        assert_eq!(r.argmax_tuples, vec![vec![0, 1], vec![1, 0]]);
    }

    #[test]
    fn fixed_slots_are_respected() {
        let r = search("(3x3,2)(3x3,?)", true);
        assert_eq!(r.max_total, 3);
        assert_eq!(r.argmax_tuples, vec![vec![2, 1]]);
    }

    #[test]
    fn pruning_is_sound() {
        for text in [
            "(2x2,?)^3",
            "(3x3,?)^2",
            "(3x2,?)(2x3,?)(4x4,?)",
            "(5x3,?)(1x4,?)(2x5,?)",
            "(4x4,?)^3 | edges=(1,2);(2,3);(3,1)",
            "(5x5,?)^2(3x4,?)",
        ] {
            let pruned = search(text, true);
            let full = search(text, false);
            assert_eq!(pruned.max_total, full.max_total, "{text}");
            assert_eq!(pruned.argmax_tuples, full.argmax_tuples, "{text}");
            assert_eq!(full.tuples_pruned, 0);
        }
    }

    #[test]
    fn parallel_matches_sequential() {
        let t = parse_template("(3x2,?)(2x3,?)(4x4,?)").unwrap();
        let seq = max_dof(&t, &SearchOptions::default()).unwrap();
        let par = max_dof(
            &t,
            &SearchOptions {
                parallelism: 3,
                ..SearchOptions::default()
            },
        )
        .unwrap();
        assert_eq!(seq, par);
    }

    #[test]
    fn user_cap() {
        let t = parse_template("(2x2,?)^6").unwrap();
        assert_eq!(
            max_dof(&t, &SearchOptions::default()),
            Err(DofError::TooManyUsers { users: 6, cap: 5 })
        );
    }

    #[test]
    fn monotonicity_on_small_networks() {
        for text in ["(2x2,?)^3", "(3x3,?)^2", "(3x2,?)(2x3,?)(4x4,?)"] {
            let v = monotonicity_audit(&parse_template(text).unwrap(), &SearchOptions::default()).unwrap();
            if !v.is_empty() {
                eprintln!("warning: monotonicity violated on {text}: {v:?}");
            }
        }
    }
}
