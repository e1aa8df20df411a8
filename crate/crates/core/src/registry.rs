//! Name-keyed registries for the interchangeable strategies.
//!
//! Each family (base-flow profiles, pressure wall closures, eigen paths)
//! exposes a static [`Registry`] whose entries are constructor functions,
//! so configuration files and the CLI can select a variant by name.

use crate::{Error, Result};

pub struct Registry<F: 'static> {
    kind: &'static str,
    entries: &'static [(&'static str, F)],
}

impl<F> Registry<F> {
    pub const fn new(kind: &'static str, entries: &'static [(&'static str, F)]) -> Self {
        Self { kind, entries }
    }

    pub fn kind(&self) -> &'static str {
        self.kind
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.iter().map(|(name, _)| *name)
    }

    pub fn get(&self, name: &str) -> Result<&F> {
        self.entries
            .iter()
            .find(|(n, _)| n.eq_ignore_ascii_case(name))
            .map(|(_, f)| f)
            .ok_or_else(|| Error::UnknownStrategy {
                kind: self.kind,
                name: name.to_string(),
                known: self.names().collect::<Vec<_>>().join(", "),
            })
    }
}
