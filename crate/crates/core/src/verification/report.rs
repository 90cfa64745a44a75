use std::collections::BTreeMap;

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

/// Where a margin was attained; `(seed, instance)` regenerates the instance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub instance: usize,
    pub seed: u64,
    pub vertex: Option<String>,
    pub margin: f64,
    pub note: Option<String>,
}

/// Outcome of a check over one or many instances. Reports merge
/// associatively, so per-instance reports can be folded in any grouping.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckReport {
    pub check: String,
    pub verdict: Verdict,
    /// Smallest margin over conclusive instances; negative means violated.
    pub margin: Option<f64>,
    pub witness: Option<Witness>,
    pub instances: usize,
    pub passed: usize,
    pub failed: usize,
    pub inconclusive: usize,
    /// Counts of the branch by which instances passed.
    pub branches: BTreeMap<String, usize>,
    pub tolerances: BTreeMap<String, f64>,
    pub failures: Vec<Witness>,
    pub inconclusive_instances: Vec<usize>,
}

impl CheckReport {
    pub fn empty(check: &str, tolerances: &[(&str, f64)]) -> Self {
        CheckReport {
            check: check.to_string(),
            verdict: Verdict::Inconclusive,
            margin: None,
            witness: None,
            instances: 0,
            passed: 0,
            failed: 0,
            inconclusive: 0,
            branches: BTreeMap::new(),
            tolerances: tolerances.iter().map(|&(k, v)| (k.to_string(), v)).collect(),
            failures: Vec::new(),
            inconclusive_instances: Vec::new(),
        }
    }

    /// Report for one instance. `branch` names how a pass was reached.
    pub fn single(
        check: &str,
        tolerances: &[(&str, f64)],
        verdict: Verdict,
        witness: Witness,
        branch: Option<&str>,
    ) -> Self {
        let mut r = CheckReport::empty(check, tolerances);
        r.instances = 1;
        r.verdict = verdict;
        match verdict {
            Verdict::Pass => r.passed = 1,
            Verdict::Fail => {
                r.failed = 1;
                r.failures.push(witness.clone());
            }
            Verdict::Inconclusive => {
                r.inconclusive = 1;
                r.inconclusive_instances.push(witness.instance);
            }
        }
        if let Some(b) = branch {
            r.branches.insert(b.to_string(), 1);
        }
        if verdict != Verdict::Inconclusive {
            r.margin = Some(witness.margin);
            r.witness = Some(witness);
        }
        r
    }

    pub fn merge(mut self, other: CheckReport) -> CheckReport {
        self.instances += other.instances;
        self.passed += other.passed;
        self.failed += other.failed;
        self.inconclusive += other.inconclusive;
        for (k, v) in other.branches {
            *self.branches.entry(k).or_insert(0) += v;
        }
        for (k, v) in other.tolerances {
            self.tolerances.entry(k).or_insert(v);
        }
        self.failures.extend(other.failures);
        self.failures.sort_by_key(|w| w.instance);
        self.inconclusive_instances.extend(other.inconclusive_instances);
        self.inconclusive_instances.sort_unstable();
        let replace = match (&self.witness, &other.witness) {
            (_, None) => false,
            (None, Some(_)) => true,
            (Some(a), Some(b)) => (b.margin, b.instance) < (a.margin, a.instance),
        };
        if replace {
            self.margin = other.margin;
            self.witness = other.witness;
        }
        self.verdict = if self.failed > 0 {
            Verdict::Fail
        } else if self.passed > 0 {
            Verdict::Pass
        } else {
            Verdict::Inconclusive
        };
        self
    }

    pub fn merge_all(check: &str, tolerances: &[(&str, f64)], reports: Vec<CheckReport>) -> Self {
        reports
            .into_iter()
            .fold(CheckReport::empty(check, tolerances), CheckReport::merge)
    }

    pub fn is_failure(&self) -> bool {
        self.failed > 0
    }

    /// One-line human summary.
    pub fn summary(&self) -> String {
        let margin = self
            .margin
            .map_or_else(|| "n/a".to_string(), |m| format!("{m:.3e}"));
        let mut line = format!(
            "{:<16} {:<12} instances={} passed={} failed={} inconclusive={} worst_margin={}",
            self.check,
            format!("{:?}", self.verdict).to_lowercase(),
            self.instances,
            self.passed,
            self.failed,
            self.inconclusive,
            margin
        );
        if let Some(w) = self.failures.first() {
            line.push_str(&format!(" first_failure=(seed {}, instance {})", w.seed, w.instance));
        }
        line
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn witness(instance: usize, margin: f64) -> Witness {
        Witness {
            instance,
            seed: 1,
            vertex: None,
            margin,
            note: None,
        }
    }

    #[test]
    fn merge_is_associative() {
        let a = CheckReport::single("x", &[], Verdict::Pass, witness(0, 0.5), Some("a"));
        let b = CheckReport::single("x", &[], Verdict::Fail, witness(1, -0.1), None);
        let c = CheckReport::single("x", &[], Verdict::Inconclusive, witness(2, 0.0), None);
        let left = a.clone().merge(b.clone()).merge(c.clone());
        let right = a.merge(b.merge(c));
        assert_eq!(left, right);
        assert_eq!(left.verdict, Verdict::Fail);
        assert_eq!(left.margin, Some(-0.1));
        assert_eq!(left.inconclusive_instances, vec![2]);
    }

    #[test]
    fn empty_suite_is_inconclusive() {
        let r = CheckReport::merge_all("x", &[("tol", 1e-9)], vec![]);
        assert_eq!(r.verdict, Verdict::Inconclusive);
        assert!(!r.is_failure());
    }
}
