//! Labeled composite Hilbert spaces.
//!
//! A space is an ordered list of subsystems, each with an ordered list of
//! basis labels. Amplitudes are indexed lexicographically over the product
//! of labels with the first subsystem most significant, which matches the
//! Kronecker product convention used throughout the crate.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Subsystem {
    pub id: String,
    pub labels: Vec<String>,
}

impl Subsystem {
    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn label_index(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownBasisLabel {
                subsystem: self.id.clone(),
                label: label.to_string(),
            })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Subsystem>", into = "Vec<Subsystem>")]
pub struct SpaceDescriptor {
    subsystems: Vec<Subsystem>,
}

impl TryFrom<Vec<Subsystem>> for SpaceDescriptor {
    type Error = Error;

    fn try_from(subsystems: Vec<Subsystem>) -> Result<Self> {
        let mut ids = BTreeSet::new();
        for s in &subsystems {
            if !ids.insert(s.id.as_str()) {
                return Err(Error::DuplicateSubsystem(s.id.clone()));
            }
            if s.dim() < 2 {
                return Err(Error::InvalidSpace(format!(
                    "subsystem `{}` has dimension {} (< 2)",
                    s.id,
                    s.dim()
                )));
            }
            let unique: BTreeSet<_> = s.labels.iter().collect();
            if unique.len() != s.labels.len() {
                return Err(Error::InvalidSpace(format!(
                    "subsystem `{}` has repeated basis labels",
                    s.id
                )));
            }
        }
        if subsystems.is_empty() {
            return Err(Error::InvalidSpace("no subsystems".into()));
        }
        Ok(SpaceDescriptor { subsystems })
    }
}

impl From<SpaceDescriptor> for Vec<Subsystem> {
    fn from(space: SpaceDescriptor) -> Self {
        space.subsystems
    }
}

impl SpaceDescriptor {
    pub fn new<I, S, L>(subsystems: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Vec<L>)>,
        S: Into<String>,
        L: Into<String>,
    {
        let subsystems = subsystems
            .into_iter()
            .map(|(id, labels)| Subsystem {
                id: id.into(),
                labels: labels.into_iter().map(Into::into).collect(),
            })
            .collect::<Vec<_>>();
        Self::try_from(subsystems)
    }

    /// Single-subsystem space.
    pub fn single(id: &str, labels: &[&str]) -> Result<Self> {
        Self::new([(id, labels.to_vec())])
    }

    pub fn subsystems(&self) -> &[Subsystem] {
        &self.subsystems
    }

    pub fn dim(&self) -> usize {
        self.subsystems.iter().map(Subsystem::dim).product()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.subsystems.iter().map(Subsystem::dim).collect()
    }

    pub fn ids(&self) -> Vec<&str> {
        self.subsystems.iter().map(|s| s.id.as_str()).collect()
    }

    pub fn position(&self, id: &str) -> Result<usize> {
        self.subsystems
            .iter()
            .position(|s| s.id == id)
            .ok_or_else(|| Error::UnknownSubsystem(id.to_string()))
    }

    pub fn subsystem(&self, id: &str) -> Result<&Subsystem> {
        Ok(&self.subsystems[self.position(id)?])
    }

    pub fn contains(&self, id: &str) -> bool {
        self.subsystems.iter().any(|s| s.id == id)
    }

    /// Concatenation `self ⊗ other`.
    pub fn product(&self, other: &SpaceDescriptor) -> Result<SpaceDescriptor> {
        for s in &other.subsystems {
            if self.contains(&s.id) {
                return Err(Error::DuplicateSubsystem(s.id.clone()));
            }
        }
        let mut subsystems = self.subsystems.clone();
        subsystems.extend(other.subsystems.iter().cloned());
        Ok(SpaceDescriptor { subsystems })
    }

    /// The space restricted to the given subsystem ids, in the given order.
    pub fn select(&self, ids: &[&str]) -> Result<SpaceDescriptor> {
        let subsystems = ids
            .iter()
            .map(|id| self.subsystem(id).cloned())
            .collect::<Result<Vec<_>>>()?;
        SpaceDescriptor::try_from(subsystems)
    }

    /// Removes one subsystem. Fails if it is the last one.
    pub fn without(&self, id: &str) -> Result<SpaceDescriptor> {
        let pos = self.position(id)?;
        let mut subsystems = self.subsystems.clone();
        subsystems.remove(pos);
        SpaceDescriptor::try_from(subsystems)
    }

    /// Replaces the basis of one subsystem.
    pub fn with_labels(&self, id: &str, labels: Vec<String>) -> Result<SpaceDescriptor> {
        let pos = self.position(id)?;
        let mut subsystems = self.subsystems.clone();
        subsystems[pos].labels = labels;
        SpaceDescriptor::try_from(subsystems)
    }

    /// Splits a flat index into per-subsystem indices.
    pub fn unflatten(&self, mut index: usize) -> Vec<usize> {
        let dims = self.dims();
        let mut out = vec![0; dims.len()];
        for k in (0..dims.len()).rev() {
            out[k] = index % dims[k];
            index /= dims[k];
        }
        out
    }

    pub fn flatten(&self, digits: &[usize]) -> usize {
        self.subsystems
            .iter()
            .zip(digits)
            .fold(0, |acc, (s, &d)| acc * s.dim() + d)
    }

    /// Flat index of a basis state given one label per subsystem.
    pub fn index_of(&self, labels: &[&str]) -> Result<usize> {
        if labels.len() != self.subsystems.len() {
            return Err(Error::SpaceMismatch(format!(
                "expected {} labels, got {}",
                self.subsystems.len(),
                labels.len()
            )));
        }
        let digits = self
            .subsystems
            .iter()
            .zip(labels)
            .map(|(s, l)| s.label_index(l))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.flatten(&digits))
    }

    pub fn labels_of(&self, index: usize) -> Vec<&str> {
        self.unflatten(index)
            .into_iter()
            .zip(&self.subsystems)
            .map(|(d, s)| s.labels[d].as_str())
            .collect()
    }

    /// Human-readable basis state name, e.g. `R,+1`.
    pub fn basis_name(&self, index: usize) -> String {
        self.labels_of(index).join(",")
    }
}

/// Partition of a space's subsystems into two nonempty groups.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BipartiteSplit {
    left: Vec<String>,
    right: Vec<String>,
}

impl BipartiteSplit {
    /// Builds the split with `left` on one side and everything else of
    /// `space` on the other. Both sides keep the space's subsystem order.
    pub fn new(space: &SpaceDescriptor, left: &[&str]) -> Result<Self> {
        for id in left {
            space.position(id)?;
        }
        let chosen: BTreeSet<&str> = left.iter().copied().collect();
        if chosen.len() != left.len() {
            return Err(Error::InvalidSplit("repeated subsystem id".into()));
        }
        let (l, r): (Vec<_>, Vec<_>) = space.ids().into_iter().partition(|id| chosen.contains(id));
        if l.is_empty() || r.is_empty() {
            return Err(Error::InvalidSplit(
                "both sides of the split must be nonempty".into(),
            ));
        }
        Ok(BipartiteSplit {
            left: l.into_iter().map(String::from).collect(),
            right: r.into_iter().map(String::from).collect(),
        })
    }

    pub fn left(&self) -> Vec<&str> {
        self.left.iter().map(String::as_str).collect()
    }

    pub fn right(&self) -> Vec<&str> {
        self.right.iter().map(String::as_str).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sam_oam() -> SpaceDescriptor {
        SpaceDescriptor::new([("sam", vec!["R", "L"]), ("oam", vec!["+1", "-1"])]).unwrap()
    }

    #[test]
    fn lexicographic_indexing() {
        let s = sam_oam();
        assert_eq!(s.dim(), 4);
        assert_eq!(s.index_of(&["R", "+1"]).unwrap(), 0);
        assert_eq!(s.index_of(&["R", "-1"]).unwrap(), 1);
        assert_eq!(s.index_of(&["L", "+1"]).unwrap(), 2);
        assert_eq!(s.labels_of(3), vec!["L", "-1"]);
        for i in 0..4 {
            assert_eq!(s.flatten(&s.unflatten(i)), i);
        }
    }

    #[test]
    fn rejects_bad_spaces() {
        assert!(matches!(
            SpaceDescriptor::new([("a", vec!["0", "1"]), ("a", vec!["0", "1"])]),
            Err(Error::DuplicateSubsystem(_))
        ));
        assert!(SpaceDescriptor::new([("a", vec!["0"])]).is_err());
        assert!(SpaceDescriptor::new([("a", vec!["0", "0"])]).is_err());
    }

    #[test]
    fn split_must_be_proper() {
        let s = sam_oam();
        assert!(BipartiteSplit::new(&s, &["sam"]).is_ok());
        assert!(matches!(
            BipartiteSplit::new(&s, &["sam", "oam"]),
            Err(Error::InvalidSplit(_))
        ));
        assert!(matches!(
            BipartiteSplit::new(&s, &[]),
            Err(Error::InvalidSplit(_))
        ));
        assert!(matches!(
            BipartiteSplit::new(&s, &["pol"]),
            Err(Error::UnknownSubsystem(_))
        ));
    }

    #[test]
    fn serde_validates() {
        let json = r#"[{"id":"a","labels":["0","1"]},{"id":"a","labels":["0","1"]}]"#;
        assert!(serde_json::from_str::<SpaceDescriptor>(json).is_err());
        let ok: SpaceDescriptor =
            serde_json::from_str(&serde_json::to_string(&sam_oam()).unwrap()).unwrap();
        assert_eq!(ok, sam_oam());
    }
}
