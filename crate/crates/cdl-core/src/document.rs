//! The two-section CDL document and the set-diff primitive beneath the
//! sentence-level evaluation metrics.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::error::{CdlError, ValidationError};
use crate::label::PointLabel;
use crate::parser;
use crate::statement::{ConsStatement, ImgStatement};

/// A diagram description: a construction section (what exists) and an image
/// section (measured relationships).
///
/// Both sections are canonical sets: statements are canonicalized on
/// insertion, duplicates collapse, and iteration follows the canonical total
/// order, so printing is deterministic.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CdlDocument {
    cons: BTreeSet<ConsStatement>,
    img: BTreeSet<ImgStatement>,
}

impl CdlDocument {
    pub fn new() -> Self {
        Self::default()
    }

    /// Validate, canonicalize, and insert a construction statement. Returns
    /// whether the statement was new.
    pub fn insert_cons(&mut self, stmt: ConsStatement) -> Result<bool, ValidationError> {
        stmt.validate()?;
        Ok(self.cons.insert(stmt.canonicalize()))
    }

    /// Validate, canonicalize, and insert an image statement. Returns
    /// whether the statement was new.
    pub fn insert_img(&mut self, stmt: ImgStatement) -> Result<bool, ValidationError> {
        stmt.validate()?;
        Ok(self.img.insert(stmt.canonicalize()))
    }

    /// Insert a statement that is already validated and canonical (the
    /// parser's smart constructors guarantee this).
    pub(crate) fn insert_cons_canonical(&mut self, stmt: ConsStatement) -> bool {
        self.cons.insert(stmt)
    }

    pub(crate) fn insert_img_canonical(&mut self, stmt: ImgStatement) -> bool {
        self.img.insert(stmt)
    }

    pub fn cons(&self) -> &BTreeSet<ConsStatement> {
        &self.cons
    }

    pub fn img(&self) -> &BTreeSet<ImgStatement> {
        &self.img
    }

    pub fn is_empty(&self) -> bool {
        self.cons.is_empty() && self.img.is_empty()
    }

    /// Every point label the construction section introduces.
    pub fn labels(&self) -> BTreeSet<PointLabel> {
        let mut out = BTreeSet::new();
        for stmt in &self.cons {
            out.extend(stmt.labels());
        }
        out
    }

    /// Check that every point an image statement mentions is introduced by
    /// some construction statement.
    pub fn check_label_closure(&self) -> Result<(), CdlError> {
        let known = self.labels();
        for stmt in &self.img {
            for label in stmt.labels() {
                if !known.contains(&label) {
                    return Err(CdlError::DanglingLabel {
                        label: label.to_string(),
                        statement: stmt.to_string(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Canonical text: one statement per line, construction section first,
    /// lines in canonical order, LF endings, trailing newline when
    /// non-empty.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for stmt in &self.cons {
            out.push_str(&stmt.to_string());
            out.push('\n');
        }
        for stmt in &self.img {
            out.push_str(&stmt.to_string());
            out.push('\n');
        }
        out
    }
}

impl fmt::Display for CdlDocument {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl FromStr for CdlDocument {
    type Err = CdlError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parser::parse(s)
    }
}

/// Hits, misses, and spurious statements for one section.
///
/// `hits = pred ∩ gold`, `misses = gold \ pred`, `spurious = pred \ gold`;
/// the three sets partition the two sides (`hits ∪ spurious = pred`,
/// `hits ∪ misses = gold`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectionDiff<T: Ord> {
    pub hits: BTreeSet<T>,
    pub misses: BTreeSet<T>,
    pub spurious: BTreeSet<T>,
}

impl<T: Ord> SectionDiff<T> {
    /// True when prediction and gold agree exactly.
    pub fn is_exact(&self) -> bool {
        self.misses.is_empty() && self.spurious.is_empty()
    }
}

/// Per-section diffs between a predicted and a gold document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocumentDiff {
    pub cons: SectionDiff<ConsStatement>,
    pub img: SectionDiff<ImgStatement>,
}

/// Compare two canonical documents section by section.
pub fn statement_set_diff(pred: &CdlDocument, gold: &CdlDocument) -> DocumentDiff {
    DocumentDiff {
        cons: diff_sets(&pred.cons, &gold.cons),
        img: diff_sets(&pred.img, &gold.img),
    }
}

fn diff_sets<T: Ord + Clone>(pred: &BTreeSet<T>, gold: &BTreeSet<T>) -> SectionDiff<T> {
    SectionDiff {
        hits: pred.intersection(gold).cloned().collect(),
        misses: gold.difference(pred).cloned().collect(),
        spurious: pred.difference(gold).cloned().collect(),
    }
}
