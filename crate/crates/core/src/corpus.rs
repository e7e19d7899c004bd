//! Corpus ingestion: sparse document-term matrices, tokenization, vocabulary
//! filtering, and class label files.
//!
//! The sparse text format is the classic one used by clustering toolkits: a
//! header `n_docs n_terms nnz`, then one line per document holding
//! whitespace-separated `col value` pairs with 1-indexed columns.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sparse nonnegative document-term matrix.
///
/// Every document owns a row, including empty documents (rows with no
/// entries); those are representable and reported by [`Self::empty_docs`].
/// Row entries are sorted by term index and hold the count exactly as parsed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentTermMatrix {
    n_terms: usize,
    rows: Vec<Vec<(usize, f64)>>,
    vocab: Option<Vec<String>>,
}

impl DocumentTermMatrix {
    /// Builds a matrix from per-document `(term, count)` rows.
    ///
    /// Rows must be sorted by strictly increasing term index, all indices must
    /// be below `n_terms`, and counts must be nonnegative.
    pub fn new(
        n_terms: usize,
        rows: Vec<Vec<(usize, f64)>>,
        vocab: Option<Vec<String>>,
    ) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::NoDocuments);
        }
        if n_terms == 0 {
            return Err(Error::NoTerms);
        }
        if let Some(v) = &vocab {
            assert_eq!(v.len(), n_terms, "vocabulary length must equal n_terms");
        }
        for (d, row) in rows.iter().enumerate() {
            let mut prev: Option<usize> = None;
            for &(t, c) in row {
                if t >= n_terms {
                    return Err(Error::ColumnOutOfRange { line: d + 2, col: t + 1, n_terms });
                }
                if prev.is_some_and(|p| p >= t) {
                    return Err(Error::DuplicateColumn { line: d + 2, col: t + 1 });
                }
                if c < 0.0 || c.is_nan() {
                    return Err(Error::NegativeCount { line: d + 2, value: c });
                }
                prev = Some(t);
            }
        }
        Ok(Self { n_terms, rows, vocab })
    }

    pub fn n_docs(&self) -> usize {
        self.rows.len()
    }

    pub fn n_terms(&self) -> usize {
        self.n_terms
    }

    /// Total number of stored entries.
    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn row(&self, doc: usize) -> &[(usize, f64)] {
        &self.rows[doc]
    }

    pub fn rows(&self) -> &[Vec<(usize, f64)>] {
        &self.rows
    }

    pub fn vocab(&self) -> Option<&[String]> {
        self.vocab.as_deref()
    }

    /// Indices of documents with no stored entries.
    pub fn empty_docs(&self) -> Vec<usize> {
        (0..self.n_docs()).filter(|&d| self.rows[d].is_empty()).collect()
    }

    /// Corpus-wide total count per term.
    pub fn column_totals(&self) -> Vec<f64> {
        let mut totals = vec![0.0; self.n_terms];
        for row in &self.rows {
            for &(t, c) in row {
                totals[t] += c;
            }
        }
        totals
    }

    /// Restricts the matrix to a subset of document indices, preserving their
    /// given order. Term space is unchanged.
    pub fn select_docs(&self, docs: &[usize]) -> Result<Self> {
        let rows = docs.iter().map(|&d| self.rows[d].clone()).collect();
        Self::new(self.n_terms, rows, self.vocab.clone())
    }
}

/// Parses the sparse `n_docs n_terms nnz` text format.
///
/// Errors carry 1-based line numbers. The declared nonzero count must match
/// the number of stored pairs exactly.
pub fn parse_sparse_corpus<R: BufRead>(reader: R) -> Result<DocumentTermMatrix> {
    let mut lines = reader.lines();
    let header = match lines.next() {
        Some(l) => l?,
        None => return Err(Error::MalformedHeader { line: 1 }),
    };
    let head: Vec<&str> = header.split_whitespace().collect();
    if head.len() != 3 {
        return Err(Error::MalformedHeader { line: 1 });
    }
    let parse_head = |s: &str| s.parse::<usize>().map_err(|_| Error::MalformedHeader { line: 1 });
    let n_docs = parse_head(head[0])?;
    let n_terms = parse_head(head[1])?;
    let nnz = parse_head(head[2])?;
    if n_docs == 0 {
        return Err(Error::NoDocuments);
    }
    if n_terms == 0 {
        return Err(Error::NoTerms);
    }

    let mut rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(n_docs);
    let mut found = 0usize;
    for d in 0..n_docs {
        let line_no = d + 2;
        let line = match lines.next() {
            Some(l) => l?,
            None => return Err(Error::UnexpectedEof { line: line_no, expected: n_docs }),
        };
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if !tokens.len().is_multiple_of(2) {
            return Err(Error::OddPairTokens { line: line_no });
        }
        let mut row: Vec<(usize, f64)> = Vec::with_capacity(tokens.len() / 2);
        let mut seen_max: Option<usize> = None;
        for pair in tokens.chunks_exact(2) {
            let col: usize = pair[0]
                .parse()
                .map_err(|_| Error::BadToken { line: line_no, token: pair[0].to_string() })?;
            if col < 1 || col > n_terms {
                return Err(Error::ColumnOutOfRange { line: line_no, col, n_terms });
            }
            let value: f64 = pair[1]
                .parse()
                .map_err(|_| Error::BadToken { line: line_no, token: pair[1].to_string() })?;
            if value.is_nan() || value.is_infinite() {
                return Err(Error::BadToken { line: line_no, token: pair[1].to_string() });
            }
            if value < 0.0 {
                return Err(Error::NegativeCount { line: line_no, value });
            }
            let t = col - 1;
            if seen_max.is_some_and(|m| m >= t) {
                // Columns within a row must strictly increase; equal means duplicate.
                return Err(Error::DuplicateColumn { line: line_no, col });
            }
            seen_max = Some(t);
            row.push((t, value));
        }
        found += row.len();
        rows.push(row);
    }
    for extra in lines {
        let extra = extra?;
        if !extra.trim().is_empty() {
            return Err(Error::TrailingContent { line: n_docs + 2 });
        }
    }
    if found != nnz {
        return Err(Error::NnzMismatch { expected: nnz, found });
    }
    DocumentTermMatrix::new(n_terms, rows, None)
}

/// Writes the sparse text format accepted by [`parse_sparse_corpus`].
///
/// Values are printed with the shortest decimal form that parses back to the
/// identical float, so a write/parse round trip is exact.
pub fn write_sparse_corpus<W: Write>(m: &DocumentTermMatrix, mut w: W) -> Result<()> {
    writeln!(w, "{} {} {}", m.n_docs(), m.n_terms(), m.nnz())?;
    for d in 0..m.n_docs() {
        let mut first = true;
        for &(t, c) in m.row(d) {
            if !first {
                write!(w, " ")?;
            }
            write!(w, "{} {}", t + 1, c)?;
            first = false;
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn read_sparse_corpus(path: &Path) -> Result<DocumentTermMatrix> {
    let file = std::fs::File::open(path)?;
    parse_sparse_corpus(std::io::BufReader::new(file))
}

/// Builds a bag-of-words matrix from raw document texts.
///
/// Tokens are maximal runs of alphanumeric characters after lowercasing; the
/// vocabulary is the sorted set of unique tokens. Documents that tokenize to
/// nothing become empty rows.
pub fn tokenize_corpus(docs: &[String]) -> Result<DocumentTermMatrix> {
    if docs.is_empty() {
        return Err(Error::NoDocuments);
    }
    let mut token_rows: Vec<Vec<String>> = Vec::with_capacity(docs.len());
    let mut vocab_set: BTreeMap<String, usize> = BTreeMap::new();
    for doc in docs {
        let lowered = doc.to_lowercase();
        let tokens: Vec<String> = lowered
            .split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty())
            .map(str::to_string)
            .collect();
        for t in &tokens {
            vocab_set.entry(t.clone()).or_insert(0);
        }
        token_rows.push(tokens);
    }
    if vocab_set.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    let vocab: Vec<String> = vocab_set.keys().cloned().collect();
    for (i, t) in vocab.iter().enumerate() {
        *vocab_set.get_mut(t).unwrap() = i;
    }
    let rows = token_rows
        .into_iter()
        .map(|tokens| {
            let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
            for t in tokens {
                *counts.entry(vocab_set[&t]).or_insert(0.0) += 1.0;
            }
            counts.into_iter().collect()
        })
        .collect();
    DocumentTermMatrix::new(vocab.len(), rows, Some(vocab))
}

/// Drops every term whose corpus-wide total count is at most `min_total`.
///
/// Returns the filtered matrix and the kept columns' original indices (new
/// column -> old column). A `min_total` of 1 keeps terms occurring more than
/// once, the setting used for the reference corpora.
pub fn frequency_filter(
    m: &DocumentTermMatrix,
    min_total: f64,
) -> Result<(DocumentTermMatrix, Vec<usize>)> {
    let totals = m.column_totals();
    let kept: Vec<usize> = (0..m.n_terms()).filter(|&t| totals[t] > min_total).collect();
    if kept.is_empty() {
        return Err(Error::AllColumnsDropped { min_total });
    }
    let mut remap = vec![usize::MAX; m.n_terms()];
    for (new_t, &old_t) in kept.iter().enumerate() {
        remap[old_t] = new_t;
    }
    let rows = m
        .rows()
        .iter()
        .map(|row| {
            row.iter()
                .filter(|&&(t, _)| remap[t] != usize::MAX)
                .map(|&(t, c)| (remap[t], c))
                .collect()
        })
        .collect();
    let vocab = m
        .vocab()
        .map(|v| kept.iter().map(|&t| v[t].clone()).collect::<Vec<_>>());
    let filtered = DocumentTermMatrix::new(kept.len(), rows, vocab)?;
    Ok((filtered, kept))
}

/// Ground-truth class assignment for a corpus.
///
/// Classes are contiguous integers `0..k`; `names` keeps the original label
/// tokens in class order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelSet {
    labels: Vec<usize>,
    k: usize,
    names: Vec<String>,
}

impl LabelSet {
    /// Canonicalizes raw label tokens: classes are numbered by first
    /// appearance, so the output is contiguous in `0..k`.
    pub fn from_tokens(tokens: &[String]) -> Result<Self> {
        if tokens.is_empty() {
            return Err(Error::NoDocuments);
        }
        let mut names: Vec<String> = Vec::new();
        let mut index: BTreeMap<&str, usize> = BTreeMap::new();
        let mut labels = Vec::with_capacity(tokens.len());
        for tok in tokens {
            let id = match index.get(tok.as_str()) {
                Some(&id) => id,
                None => {
                    let id = names.len();
                    names.push(tok.clone());
                    index.insert(tok.as_str(), id);
                    id
                }
            };
            labels.push(id);
        }
        let k = names.len();
        Ok(Self { labels, k, names })
    }

    /// Wraps an already-contiguous assignment. Every class below `k` must be
    /// in range; names default to the class numerals.
    pub fn from_assignment(labels: Vec<usize>, k: usize) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::NoDocuments);
        }
        if k == 0 {
            return Err(Error::NoStrategies);
        }
        for &l in &labels {
            if l >= k {
                return Err(Error::ClassOutOfRange { class: l, k });
            }
        }
        let names = (0..k).map(|c| c.to_string()).collect();
        Ok(Self { labels, k, names })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Reads a label sidecar: one label token per line, one line per document.
pub fn parse_labels<R: BufRead>(reader: R) -> Result<LabelSet> {
    let mut tokens = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let tok = line.trim();
        if tok.is_empty() {
            return Err(Error::EmptyLabel { line: i + 1 });
        }
        tokens.push(tok.to_string());
    }
    LabelSet::from_tokens(&tokens)
}

pub fn read_labels(path: &Path) -> Result<LabelSet> {
    let file = std::fs::File::open(path)?;
    parse_labels(std::io::BufReader::new(file))
}

/// Writes one label name per line; a parse round trip reproduces the set.
pub fn write_labels<W: Write>(ls: &LabelSet, mut w: W) -> Result<()> {
    for &l in ls.labels() {
        writeln!(w, "{}", ls.names()[l])?;
    }
    Ok(())
}

/// Reads a directory of plain-text documents, one document per file, in
/// lexicographic filename order. Returns the texts and the filenames.
pub fn read_text_dir(dir: &Path) -> Result<(Vec<String>, Vec<String>)> {
    let mut entries: Vec<(String, std::path::PathBuf)> = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let entry = entry?;
        if entry.file_type()?.is_file() {
            entries.push((entry.file_name().to_string_lossy().into_owned(), entry.path()));
        }
    }
    entries.sort_by(|a, b| a.0.cmp(&b.0));
    let mut docs = Vec::with_capacity(entries.len());
    let mut names = Vec::with_capacity(entries.len());
    for (name, path) in entries {
        docs.push(std::fs::read_to_string(&path)?);
        names.push(name);
    }
    if docs.is_empty() {
        return Err(Error::NoDocuments);
    }
    Ok((docs, names))
}

/// Size and balance summary of a labeled corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub n_docs: usize,
    pub n_terms: usize,
    pub k: usize,
    /// Average documents per class.
    pub avg_class_size: f64,
    /// Smallest class size divided by largest.
    pub balance: f64,
}

/// Computes corpus statistics; label count must match the document count.
pub fn compute_stats(m: &DocumentTermMatrix, ls: &LabelSet) -> Result<CorpusStats> {
    if ls.len() != m.n_docs() {
        return Err(Error::LabelCountMismatch { expected: m.n_docs(), found: ls.len() });
    }
    let mut sizes = vec![0usize; ls.k()];
    for &l in ls.labels() {
        sizes[l] += 1;
    }
    let largest = *sizes.iter().max().unwrap();
    let smallest = *sizes.iter().min().unwrap();
    Ok(CorpusStats {
        n_docs: m.n_docs(),
        n_terms: m.n_terms(),
        k: ls.k(),
        avg_class_size: m.n_docs() as f64 / ls.k() as f64,
        balance: smallest as f64 / largest as f64,
    })
}
