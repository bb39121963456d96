//! Population protocol representation: species, pairwise reactions, the
//! ordered-pair transition table and the catalytic classification.
//!
//! A reaction `A + B -> C + D` matches reactants to products positionally:
//! the molecule in state `A` moves to `C` and the molecule in state `B`
//! moves to `D`. Pairs with no rule are null interactions and are stored as
//! absent table entries.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Dense species index, `0..protocol.len()`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SpeciesId(pub u32);

impl SpeciesId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<usize> for SpeciesId {
    fn from(i: usize) -> Self {
        SpeciesId(i as u32)
    }
}

/// Output value a sampled molecule reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Output {
    Detect,
    Nondetect,
}

impl Output {
    pub fn as_str(self) -> &'static str {
        match self {
            Output::Detect => "detect",
            Output::Nondetect => "nondetect",
        }
    }
}

impl fmt::Display for Output {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Species {
    pub id: SpeciesId,
    pub name: String,
    pub output: Output,
    /// Alert level for detection protocols: 0 for the detected species,
    /// `i` for the `i`-th alert level and `s + 1` for the neutral species.
    pub level: Option<u32>,
}

/// Declaration used when building a protocol; ids are assigned in order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpeciesDecl {
    pub name: String,
    pub output: Output,
    pub level: Option<u32>,
}

impl SpeciesDecl {
    pub fn new(name: impl Into<String>, output: Output) -> Self {
        Self {
            name: name.into(),
            output,
            level: None,
        }
    }

    pub fn with_level(mut self, level: u32) -> Self {
        self.level = Some(level);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Reaction {
    pub reactants: (SpeciesId, SpeciesId),
    pub products: (SpeciesId, SpeciesId),
}

impl Reaction {
    pub fn new(a: SpeciesId, b: SpeciesId, c: SpeciesId, d: SpeciesId) -> Self {
        Self {
            reactants: (a, b),
            products: (c, d),
        }
    }

    /// Net count change of `species` when this reaction fires.
    fn delta(&self, species: SpeciesId) -> i32 {
        let count = |x: SpeciesId| i32::from(x == species);
        count(self.products.0) + count(self.products.1)
            - count(self.reactants.0)
            - count(self.reactants.1)
    }
}

/// Reaction given by species names, resolved against the declarations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NamedReaction {
    pub reactants: (String, String),
    pub products: (String, String),
}

impl NamedReaction {
    pub fn new(a: &str, b: &str, c: &str, d: &str) -> Self {
        Self {
            reactants: (a.to_owned(), b.to_owned()),
            products: (c.to_owned(), d.to_owned()),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProtocolError {
    #[error("duplicate species `{0}`")]
    DuplicateSpecies(String),
    #[error("reaction {reaction} uses undeclared species `{name}`")]
    UndeclaredSpecies { reaction: usize, name: String },
    #[error(
        "reaction {reaction} ({a} + {b}) conflicts with an earlier rule for the same pair"
    )]
    InconsistentRule {
        reaction: usize,
        a: String,
        b: String,
    },
    #[error("protocol has {0} species, more than the supported maximum")]
    TooManySpecies(usize),
}

impl ProtocolError {
    /// Index of the offending reaction in the input list, if any.
    pub fn reaction_index(&self) -> Option<usize> {
        match self {
            ProtocolError::UndeclaredSpecies { reaction, .. }
            | ProtocolError::InconsistentRule { reaction, .. } => Some(*reaction),
            _ => None,
        }
    }
}

/// A validated population protocol with a total ordered-pair transition table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Protocol {
    species: Vec<Species>,
    /// Row-major `len x len` table; `None` is a null interaction.
    table: Vec<Option<(SpeciesId, SpeciesId)>>,
}

const MAX_SPECIES: usize = 4096;

impl Protocol {
    /// Builds a protocol from declarations and reactions given by species id.
    ///
    /// Every reaction is installed for both orders of its reactants, with the
    /// products swapped for the reverse order. Listing a pair twice is only
    /// allowed when the two rules agree.
    pub fn new(species: Vec<SpeciesDecl>, reactions: &[Reaction]) -> Result<Self, ProtocolError> {
        let q = species.len();
        if q > MAX_SPECIES {
            return Err(ProtocolError::TooManySpecies(q));
        }
        let mut seen = HashMap::with_capacity(q);
        let species: Vec<Species> = species
            .into_iter()
            .enumerate()
            .map(|(i, d)| {
                if seen.insert(d.name.clone(), i).is_some() {
                    return Err(ProtocolError::DuplicateSpecies(d.name));
                }
                Ok(Species {
                    id: SpeciesId::from(i),
                    name: d.name,
                    output: d.output,
                    level: d.level,
                })
            })
            .collect::<Result<_, _>>()?;

        let mut table = vec![None; q * q];
        for (idx, r) in reactions.iter().enumerate() {
            let (a, b) = r.reactants;
            let (c, d) = r.products;
            for x in [a, b, c, d] {
                if x.index() >= q {
                    return Err(ProtocolError::UndeclaredSpecies {
                        reaction: idx,
                        name: format!("#{}", x.0),
                    });
                }
            }
            let conflict = || ProtocolError::InconsistentRule {
                reaction: idx,
                a: species[a.index()].name.clone(),
                b: species[b.index()].name.clone(),
            };
            if a == b {
                let slot = &mut table[a.index() * q + a.index()];
                match *slot {
                    None => *slot = Some((c, d)),
                    // Both molecules share a state, so the two product
                    // orders describe the same outcome.
                    Some(prev) if prev == (c, d) || prev == (d, c) => {}
                    Some(_) => return Err(conflict()),
                }
            } else {
                let fwd = a.index() * q + b.index();
                let rev = b.index() * q + a.index();
                match table[fwd] {
                    None => {
                        table[fwd] = Some((c, d));
                        table[rev] = Some((d, c));
                    }
                    Some(prev) if prev == (c, d) => {}
                    Some(_) => return Err(conflict()),
                }
            }
        }
        Ok(Self { species, table })
    }

    /// Builds a protocol from reactions that name their species.
    pub fn from_named(
        species: Vec<SpeciesDecl>,
        reactions: &[NamedReaction],
    ) -> Result<Self, ProtocolError> {
        let index: HashMap<&str, usize> = species
            .iter()
            .enumerate()
            .map(|(i, d)| (d.name.as_str(), i))
            .collect();
        let resolve = |idx: usize, name: &str| {
            index
                .get(name)
                .map(|&i| SpeciesId::from(i))
                .ok_or_else(|| ProtocolError::UndeclaredSpecies {
                    reaction: idx,
                    name: name.to_owned(),
                })
        };
        let resolved = reactions
            .iter()
            .enumerate()
            .map(|(i, r)| {
                Ok(Reaction::new(
                    resolve(i, &r.reactants.0)?,
                    resolve(i, &r.reactants.1)?,
                    resolve(i, &r.products.0)?,
                    resolve(i, &r.products.1)?,
                ))
            })
            .collect::<Result<Vec<_>, ProtocolError>>()?;
        Self::new(species, &resolved)
    }

    pub fn len(&self) -> usize {
        self.species.len()
    }

    pub fn is_empty(&self) -> bool {
        self.species.is_empty()
    }

    pub fn species(&self) -> &[Species] {
        &self.species
    }

    pub fn species_by_id(&self, id: SpeciesId) -> &Species {
        &self.species[id.index()]
    }

    pub fn find(&self, name: &str) -> Option<SpeciesId> {
        self.species.iter().find(|s| s.name == name).map(|s| s.id)
    }

    /// First species carrying the given alert level.
    pub fn find_level(&self, level: u32) -> Option<SpeciesId> {
        self.species
            .iter()
            .find(|s| s.level == Some(level))
            .map(|s| s.id)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.species.iter().map(|s| s.name.as_str())
    }

    /// Per-species flag: does this species output `detect`?
    pub fn detect_mask(&self) -> Vec<bool> {
        self.species
            .iter()
            .map(|s| s.output == Output::Detect)
            .collect()
    }

    /// Transition for an ordered pair; `None` is a null interaction.
    #[inline]
    pub fn apply(&self, a: SpeciesId, b: SpeciesId) -> Option<(SpeciesId, SpeciesId)> {
        self.table[a.index() * self.species.len() + b.index()]
    }

    /// Non-null rules, each unordered pair once (`a <= b`), sorted by reactant ids.
    pub fn reactions(&self) -> Vec<Reaction> {
        let q = self.len();
        let mut out = Vec::new();
        for a in 0..q {
            for b in a..q {
                if let Some((c, d)) = self.table[a * q + b] {
                    out.push(Reaction::new(a.into(), b.into(), c, d));
                }
            }
        }
        out
    }

    /// Equality of names, outputs and transition tables; ignores alert levels,
    /// which the text format does not carry.
    pub fn same_structure(&self, other: &Protocol) -> bool {
        self.table == other.table
            && self.species.len() == other.species.len()
            && self
                .species
                .iter()
                .zip(&other.species)
                .all(|(x, y)| x.name == y.name && x.output == y.output)
    }

    /// Copy of this protocol with alert levels replaced.
    pub fn with_levels(&self, levels: &[Option<u32>]) -> Protocol {
        let mut p = self.clone();
        for (s, l) in p.species.iter_mut().zip(levels) {
            s.level = *l;
        }
        p
    }

    pub fn classify_catalytic(&self) -> CatalyticPartition {
        let reactions = self.reactions();
        let mut catalytic = BTreeSet::new();
        let mut non_catalytic = BTreeSet::new();
        for s in &self.species {
            if reactions.iter().all(|r| r.delta(s.id) == 0) {
                catalytic.insert(s.id);
            } else {
                non_catalytic.insert(s.id);
            }
        }
        CatalyticPartition {
            catalytic,
            non_catalytic,
        }
    }
}

/// Split of the species into those no reaction changes the count of, and the rest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalyticPartition {
    pub catalytic: BTreeSet<SpeciesId>,
    pub non_catalytic: BTreeSet<SpeciesId>,
}

impl CatalyticPartition {
    pub fn is_catalytic(&self, id: SpeciesId) -> bool {
        self.catalytic.contains(&id)
    }

    /// Dense per-species flag vector.
    pub fn mask(&self, len: usize) -> Vec<bool> {
        (0..len)
            .map(|i| self.catalytic.contains(&SpeciesId::from(i)))
            .collect()
    }

    pub fn catalytic_names<'p>(&self, p: &'p Protocol) -> Vec<&'p str> {
        self.catalytic
            .iter()
            .map(|&id| p.species_by_id(id).name.as_str())
            .collect()
    }
}
