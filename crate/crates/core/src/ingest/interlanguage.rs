use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::InterlanguageGroup;
use crate::model::{canonical_entity_id, LanguageEdition};

/// Maps a lang-local title to its canonical cross-language entity id.
pub trait InterlanguageResolver: Send + Sync {
    fn canonical_id(&self, lang: &LanguageEdition, title: &str) -> String;
}

/// An in-memory table of interlanguage link groups.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<InterlanguageGroup>", into = "Vec<InterlanguageGroup>")]
pub struct InterlanguageTable {
    index: BTreeMap<(LanguageEdition, String), InterlanguageGroup>,
}

impl From<Vec<InterlanguageGroup>> for InterlanguageTable {
    fn from(groups: Vec<InterlanguageGroup>) -> Self {
        let mut table = Self::default();
        for group in groups {
            table.insert(group);
        }
        table
    }
}

impl From<InterlanguageTable> for Vec<InterlanguageGroup> {
    fn from(table: InterlanguageTable) -> Self {
        table.groups()
    }
}

impl InterlanguageTable {
    pub fn insert(&mut self, group: InterlanguageGroup) {
        for (lang, title) in &group.members {
            self.index.insert((lang.clone(), title.clone()), group.clone());
        }
    }

    pub fn lookup(&self, lang: &LanguageEdition, title: &str) -> Option<&InterlanguageGroup> {
        self.index.get(&(lang.clone(), title.to_owned()))
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    /// Distinct groups, ordered by canonical id.
    pub fn groups(&self) -> Vec<InterlanguageGroup> {
        let mut by_canonical: BTreeMap<(String, Vec<(LanguageEdition, String)>), InterlanguageGroup> = BTreeMap::new();
        for group in self.index.values() {
            let key = (group.canonical.clone(), group.members.clone().into_iter().collect());
            by_canonical.entry(key).or_insert_with(|| group.clone());
        }
        by_canonical.into_values().collect()
    }
}

impl InterlanguageResolver for InterlanguageTable {
    fn canonical_id(&self, lang: &LanguageEdition, title: &str) -> String {
        match self.lookup(lang, title) {
            Some(group) => group.canonical.clone(),
            None => {
                let own = BTreeMap::from([(lang.clone(), title.to_owned())]);
                canonical_entity_id(&own).expect("non-empty")
            }
        }
    }
}
