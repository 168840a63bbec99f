//! Term dictionary with a shared subject-object range.
//!
//! Terms are grouped into four categories: terms used as both subject and
//! object, subject-only terms, object-only terms, and predicates. Each
//! category is sorted bytewise, and IDs are assigned so the shared terms
//! occupy the bottom of both coordinate spaces:
//!
//! ```text
//! subject id:   0 .. shared   shared .. shared+subject_only
//! object id:    0 .. shared   shared .. shared+object_only
//! predicate id: 0 .. predicates
//! ```
//!
//! A term like `Madrid`, appearing on both sides of some triple, therefore
//! has one ID valid on both axes — which is what lets a join on a shared
//! variable equate row and column coordinates directly.
//!
//! IDs here are 0-based; display layers conventionally print them 1-based.
//! The dictionary treats terms as opaque strings: whatever canonical form
//! the loader chooses (IRIs without angle brackets, literals with quotes)
//! is what gets sorted and stored.

use std::collections::BTreeSet;
use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::wire;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Dictionary {
    shared: Vec<String>,
    subject_only: Vec<String>,
    object_only: Vec<String>,
    predicates: Vec<String>,
}

impl Dictionary {
    /// Groups and sorts terms from the three triple positions.
    pub fn build<'a, S, P, O>(subjects: S, predicates: P, objects: O) -> Result<Dictionary>
    where
        S: IntoIterator<Item = &'a str>,
        P: IntoIterator<Item = &'a str>,
        O: IntoIterator<Item = &'a str>,
    {
        let subj: BTreeSet<&str> = subjects.into_iter().collect();
        let obj: BTreeSet<&str> = objects.into_iter().collect();
        let preds: BTreeSet<&str> = predicates.into_iter().collect();
        let dict = Dictionary {
            shared: subj.intersection(&obj).map(|t| t.to_string()).collect(),
            subject_only: subj.difference(&obj).map(|t| t.to_string()).collect(),
            object_only: obj.difference(&subj).map(|t| t.to_string()).collect(),
            predicates: preds.into_iter().map(|t| t.to_string()).collect(),
        };
        let limit = u32::MAX as usize;
        if dict.num_subjects() > limit
            || dict.num_objects() > limit
            || dict.predicates.len() > limit
        {
            return Err(Error::InvalidInput(
                "term vocabulary exceeds 32-bit ids".into(),
            ));
        }
        Ok(dict)
    }

    /// Terms used as both subject and object.
    pub fn shared_count(&self) -> usize {
        self.shared.len()
    }

    pub fn subject_only_count(&self) -> usize {
        self.subject_only.len()
    }

    pub fn object_only_count(&self) -> usize {
        self.object_only.len()
    }

    /// Size of the subject coordinate space.
    pub fn num_subjects(&self) -> usize {
        self.shared.len() + self.subject_only.len()
    }

    /// Size of the object coordinate space.
    pub fn num_objects(&self) -> usize {
        self.shared.len() + self.object_only.len()
    }

    pub fn num_predicates(&self) -> usize {
        self.predicates.len()
    }

    /// Does this subject or object ID fall in the shared range?
    pub fn is_shared(&self, id: u32) -> bool {
        (id as usize) < self.shared.len()
    }

    pub fn subject_id(&self, term: &str) -> Option<u32> {
        match self.shared.binary_search_by(|t| t.as_str().cmp(term)) {
            Ok(i) => Some(i as u32),
            Err(_) => self
                .subject_only
                .binary_search_by(|t| t.as_str().cmp(term))
                .ok()
                .map(|i| (self.shared.len() + i) as u32),
        }
    }

    pub fn object_id(&self, term: &str) -> Option<u32> {
        match self.shared.binary_search_by(|t| t.as_str().cmp(term)) {
            Ok(i) => Some(i as u32),
            Err(_) => self
                .object_only
                .binary_search_by(|t| t.as_str().cmp(term))
                .ok()
                .map(|i| (self.shared.len() + i) as u32),
        }
    }

    pub fn predicate_id(&self, term: &str) -> Option<u32> {
        self.predicates
            .binary_search_by(|t| t.as_str().cmp(term))
            .ok()
            .map(|i| i as u32)
    }

    pub fn subject_term(&self, id: u32) -> Option<&str> {
        let id = id as usize;
        if id < self.shared.len() {
            Some(&self.shared[id])
        } else {
            self.subject_only
                .get(id - self.shared.len())
                .map(|s| s.as_str())
        }
    }

    pub fn object_term(&self, id: u32) -> Option<&str> {
        let id = id as usize;
        if id < self.shared.len() {
            Some(&self.shared[id])
        } else {
            self.object_only
                .get(id - self.shared.len())
                .map(|s| s.as_str())
        }
    }

    pub fn predicate_term(&self, id: u32) -> Option<&str> {
        self.predicates.get(id as usize).map(|s| s.as_str())
    }

    pub fn encoded_bytes(&self) -> usize {
        let mut buf = Vec::new();
        self.write_to(&mut buf).unwrap();
        buf.len()
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        for cat in [
            &self.shared,
            &self.subject_only,
            &self.object_only,
            &self.predicates,
        ] {
            wire::put_u64(w, cat.len() as u64)?;
            for term in cat {
                wire::put_u32(w, term.len() as u32)?;
                w.write_all(term.as_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Dictionary> {
        let mut cats: Vec<Vec<String>> = Vec::with_capacity(4);
        for name in ["shared", "subject", "object", "predicate"] {
            let count = wire::get_len(r, u64::from(u32::MAX), name)?;
            let mut terms = Vec::with_capacity(count.min(1 << 20));
            for _ in 0..count {
                let len = wire::get_u32(r)? as usize;
                if len > 1 << 24 {
                    return Err(Error::Format(format!("{len}-byte term is unreasonable")));
                }
                let mut bytes = vec![0u8; len];
                wire::get_exact(r, &mut bytes)?;
                let term = String::from_utf8(bytes)
                    .map_err(|_| Error::Format(format!("{name} term is not UTF-8")))?;
                if let Some(prev) = terms.last() {
                    if *prev >= term {
                        return Err(Error::Format(format!("{name} terms not strictly sorted")));
                    }
                }
                terms.push(term);
            }
            cats.push(terms);
        }
        let predicates = cats.pop().unwrap();
        let object_only = cats.pop().unwrap();
        let subject_only = cats.pop().unwrap();
        let shared = cats.pop().unwrap();
        for (other, name) in [(&subject_only, "subject"), (&object_only, "object")] {
            let mut i = 0;
            for term in other {
                while i < shared.len() && shared[i] < *term {
                    i += 1;
                }
                if i < shared.len() && shared[i] == *term {
                    return Err(Error::Format(format!(
                        "term duplicated across shared and {name}-only"
                    )));
                }
            }
        }
        Ok(Dictionary {
            shared,
            subject_only,
            object_only,
            predicates,
        })
    }
}
