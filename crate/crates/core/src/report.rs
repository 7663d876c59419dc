use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub check: String,
    pub location: String,
    pub detail: String,
}

/// Outcome of an exhaustive validator: how many individual conditions were
/// evaluated and every one that failed.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Report {
    pub name: String,
    pub checked: usize,
    pub violations: Vec<Violation>,
}

impl Report {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), ..Default::default() }
    }

    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn check(&mut self, ok: bool, check: &str, location: impl FnOnce() -> String, detail: impl FnOnce() -> String) -> bool {
        self.checked += 1;
        if !ok {
            self.violations.push(Violation {
                check: check.to_string(),
                location: location(),
                detail: detail(),
            });
        }
        ok
    }

    pub fn fail(&mut self, check: &str, location: String, detail: String) {
        self.checked += 1;
        self.violations.push(Violation { check: check.to_string(), location, detail });
    }

    pub fn merge(&mut self, other: Report) {
        self.checked += other.checked;
        self.violations.extend(other.violations);
    }

    pub fn has(&self, check: &str) -> bool {
        self.violations.iter().any(|v| v.check == check)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_and_merges() {
        let mut a = Report::new("a");
        assert!(a.check(true, "x", || unreachable!(), || unreachable!()));
        assert!(!a.check(false, "y", || "here".into(), || "bad".into()));
        let mut b = Report::new("b");
        b.fail("z", "there".into(), "worse".into());
        a.merge(b);
        assert_eq!(a.checked, 3);
        assert!(a.has("y") && a.has("z") && !a.has("x"));
        assert!(!a.passed());
        assert!(Report::new("empty").passed());
    }
}
