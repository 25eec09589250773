/// How an attempt maps alive nodes to missing parts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AttemptCase {
    /// More missing parts than alive nodes: one part per node, surplus deferred.
    OneToOne,
    /// Missing parts cut into batches, each simulated by a group of nodes.
    Batched,
}

/// A group of nodes simulating a list of parts one after another.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AttemptGroup {
    pub nodes: Vec<usize>,
    pub parts: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AttemptState {
    pub n: usize,
    pub c: usize,
    /// `F`: crashed nodes so far.
    pub failed: usize,
    /// `F^c`: missing parts.
    pub missing: usize,
    pub case: AttemptCase,
    /// `F^c_batch` in the batched case; number of assigned parts otherwise.
    pub batch_count: usize,
    /// Nodes per group.
    pub mult: usize,
    /// `x`: alive nodes left without a group.
    pub leftover: usize,
    pub groups: Vec<AttemptGroup>,
    /// Missing parts not assigned this attempt.
    pub deferred: Vec<usize>,
}

impl AttemptState {
    /// `(node, part)` for every assigned node and every part of its batch.
    pub fn assignments(&self) -> Vec<(usize, usize)> {
        self.groups
            .iter()
            .flat_map(|g| g.nodes.iter().flat_map(move |&v| g.parts.iter().map(move |&p| (v, p))))
            .collect()
    }

    /// Longest batch.
    pub fn positions(&self) -> usize {
        self.groups.iter().map(|g| g.parts.len()).max().unwrap_or(0)
    }
}

/// Signature shared by [`plan_attempt`] and its test doubles.
pub type Planner = fn(usize, &[usize], &[usize], usize) -> AttemptState;

/// Plans one attempt. `alive` and `missing` must be sorted ascending and
/// `missing` non-empty.
pub fn plan_attempt(n: usize, alive: &[usize], missing: &[usize], c: usize) -> AttemptState {
    assert!(!missing.is_empty(), "nothing to plan");
    let failed = n - alive.len();
    let fc = missing.len();
    let base = AttemptState {
        n,
        c,
        failed,
        missing: fc,
        case: AttemptCase::OneToOne,
        batch_count: 0,
        mult: 1,
        leftover: 0,
        groups: Vec::new(),
        deferred: Vec::new(),
    };
    if fc > alive.len() {
        let groups = alive
            .iter()
            .zip(missing)
            .map(|(&v, &p)| AttemptGroup { nodes: vec![v], parts: vec![p] })
            .collect();
        return AttemptState {
            batch_count: alive.len(),
            groups,
            deferred: missing[alive.len()..].to_vec(),
            ..base
        };
    }
    let batch_count = (fc / (3 * c)).max(1);
    let mult = alive.len() / batch_count;
    let leftover = alive.len() % batch_count;
    let groups = (0..batch_count)
        .map(|i| {
            let start = i * 3 * c;
            let end = if i + 1 == batch_count { fc } else { start + 3 * c };
            AttemptGroup { nodes: alive[i * mult..(i + 1) * mult].to_vec(), parts: missing[start..end].to_vec() }
        })
        .collect();
    AttemptState { case: AttemptCase::Batched, batch_count, mult, leftover, groups, ..base }
}

/// A counterexample to the batch-shrink property.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShrinkViolation {
    pub reason: &'static str,
    pub n: usize,
    pub c: usize,
    pub failed: usize,
    pub missing: usize,
    pub killed: usize,
    pub surviving_batches_lost: usize,
    pub bound: usize,
}

/// Checks, for every `n <= max_n`, `c` in `cs` and every valid
/// `(F, F^c, F')` with a batched plan, `F^c >= 3c` and `2F' < F_remain`, that
/// an adversary spending `F'` crashes on whole groups (smallest first) leaves
/// at most `ceil(F^c_batch / 4)` batches missing. The plan itself must cut
/// the missing parts into batches of `3c` to `6c - 1` parts. Returns the
/// number of states checked and the violations.
pub fn check_batch_shrink(planner: Planner, max_n: usize, cs: &[usize]) -> (usize, Vec<ShrinkViolation>) {
    let mut checked = 0;
    let mut violations = Vec::new();
    for &c in cs {
        for n in 1..=max_n {
            let budget = (c - 1) * n / c;
            for failed in 0..=budget {
                let alive: Vec<usize> = (failed..n).collect();
                let remain = budget - failed;
                for fc in 3 * c..=alive.len() {
                    let missing: Vec<usize> = (0..fc).collect();
                    let plan = planner(n, &alive, &missing, c);
                    if plan.case != AttemptCase::Batched {
                        continue;
                    }
                    let covered: usize = plan.groups.iter().map(|g| g.parts.len()).sum();
                    let shaped = plan.groups.len() == plan.batch_count
                        && covered == fc
                        && plan.groups.iter().all(|g| (3 * c..6 * c).contains(&g.parts.len()));
                    if !shaped {
                        violations.push(ShrinkViolation {
                            reason: "batch sizes",
                            n,
                            c,
                            failed,
                            missing: fc,
                            killed: 0,
                            surviving_batches_lost: 0,
                            bound: 0,
                        });
                    }
                    let mut sizes: Vec<usize> = plan.groups.iter().map(|g| g.nodes.len()).collect();
                    sizes.sort_unstable();
                    for killed in (0..=remain).take_while(|&k| 2 * k < remain) {
                        checked += 1;
                        let mut spent = 0;
                        let mut lost = 0;
                        for &s in &sizes {
                            if spent + s > killed {
                                break;
                            }
                            spent += s;
                            lost += 1;
                        }
                        let bound = plan.batch_count.div_ceil(4);
                        if lost > bound {
                            violations.push(ShrinkViolation {
                                reason: "batches lost",
                                n,
                                c,
                                failed,
                                missing: fc,
                                killed,
                                surviving_batches_lost: lost,
                                bound,
                            });
                        }
                    }
                }
            }
        }
    }
    (checked, violations)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(r: std::ops::Range<usize>) -> Vec<usize> {
        r.collect()
    }

    #[test]
    fn single_batch_when_few_parts_missing() {
        // n = 12, c = 2, F = 4, F^c = 3
        let p = plan_attempt(12, &ids(4..12), &[0, 1, 2], 2);
        assert_eq!(p.case, AttemptCase::Batched);
        assert_eq!((p.batch_count, p.mult, p.leftover), (1, 8, 0));
        assert_eq!(p.groups, vec![AttemptGroup { nodes: ids(4..12), parts: vec![0, 1, 2] }]);
    }

    #[test]
    fn five_batches_of_six() {
        // n = 100, c = 2, F = 20, F^c = 30
        let p = plan_attempt(100, &ids(20..100), &ids(0..30), 2);
        assert_eq!((p.batch_count, p.mult, p.leftover), (5, 16, 0));
        assert!(p.groups.iter().all(|g| g.parts.len() == 6 && g.nodes.len() == 16));
    }

    #[test]
    fn one_to_one_defers_surplus() {
        // n = 8, c = 2, F = 5, F^c = 4
        let p = plan_attempt(8, &[1, 4, 6], &[0, 2, 3, 5], 2);
        assert_eq!(p.case, AttemptCase::OneToOne);
        assert_eq!(p.assignments(), vec![(1, 0), (4, 2), (6, 3)]);
        assert_eq!(p.deferred, vec![5]);
    }

    #[test]
    fn last_batch_absorbs_the_remainder() {
        let p = plan_attempt(60, &ids(0..40), &ids(0..23), 2);
        let lens: Vec<usize> = p.groups.iter().map(|g| g.parts.len()).collect();
        assert_eq!(lens, vec![6, 6, 11]);
        assert!(lens.iter().all(|&l| l <= 12));
        assert_eq!(p.leftover, 1);
        let covered: usize = lens.iter().sum();
        assert_eq!(covered, 23);
    }

    #[test]
    fn batch_shrink_holds() {
        let (checked, v) = check_batch_shrink(plan_attempt, 60, &[2, 3]);
        assert!(checked > 1000);
        assert!(v.is_empty(), "{:?}", &v[..v.len().min(3)]);
    }
}
