//! Streaming reader for pipe-delimited RRF release files.
//!
//! Three file kinds are understood: concepts (`MRCONSO.RRF` / `RXNCONSO.RRF`),
//! relationships (`MRREL.RRF` / `RXNREL.RRF`) and attributes (`MRSAT.RRF` /
//! `RXNSAT.RRF`). Both distributions share the same column positions; the
//! dialect decides how identifiers are spelled (`C0000123`/`A0000456` in the
//! UMLS files, bare decimal numbers in the RxNorm-native files).
//!
//! Column contract (0-indexed, every line ends with a trailing `|`):
//!
//! | file          | columns | used                                                     |
//! |---------------|---------|----------------------------------------------------------|
//! | concepts      | 18      | 0 rxcui, 7 rxaui, 11 sab, 12 tty, 14 str, 16 suppress    |
//! | relationships | 16      | 0 rxcui1, 1 rxaui1, 4 rxcui2, 5 rxaui2, 7 rela           |
//! | attributes    | 13      | 0 rxcui, 3 rxaui, 8 atn, 10 atv                          |
//!
//! Lines that break the contract are recorded in a [`ParseReport`] and
//! skipped; reading continues with the next line.

use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Read};
use std::marker::PhantomData;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Maximum number of malformed-line details kept in a report. The count is
/// always exact; only the stored details are capped.
pub const MAX_REPORTED_LINES: usize = 1000;

const UTF8_BOM: &[u8] = b"\xEF\xBB\xBF";

/// Which distribution a file comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SourceDialect {
    /// Full UMLS Metathesaurus files (`CUI`/`AUI` columns).
    Umls,
    /// RxNorm monthly/weekly files (`RXCUI`/`RXAUI` columns).
    RxnormNative,
}

impl SourceDialect {
    pub fn concepts_file(self) -> &'static str {
        match self {
            SourceDialect::Umls => "MRCONSO.RRF",
            SourceDialect::RxnormNative => "RXNCONSO.RRF",
        }
    }

    pub fn relationships_file(self) -> &'static str {
        match self {
            SourceDialect::Umls => "MRREL.RRF",
            SourceDialect::RxnormNative => "RXNREL.RRF",
        }
    }

    pub fn attributes_file(self) -> &'static str {
        match self {
            SourceDialect::Umls => "MRSAT.RRF",
            SourceDialect::RxnormNative => "RXNSAT.RRF",
        }
    }

    /// Column names of the concept and atom identifiers in this dialect.
    pub fn identifier_columns(self) -> (&'static str, &'static str) {
        match self {
            SourceDialect::Umls => ("CUI", "AUI"),
            SourceDialect::RxnormNative => ("RXCUI", "RXAUI"),
        }
    }

    fn check_id(self, kind: IdKind, value: &str) -> bool {
        match self {
            SourceDialect::RxnormNative => is_digits(value),
            SourceDialect::Umls => {
                let mut chars = value.chars();
                let Some(prefix) = chars.next() else {
                    return false;
                };
                let prefix_ok = match kind {
                    IdKind::Concept => prefix == 'C',
                    IdKind::Atom => prefix == 'A',
                    // MRSAT.METAUI may hold an AUI, RUI or other prefixed id
                    IdKind::AnyMeta => prefix.is_ascii_uppercase(),
                };
                prefix_ok && is_digits(chars.as_str())
            }
        }
    }
}

impl fmt::Display for SourceDialect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SourceDialect::Umls => "UMLS",
            SourceDialect::RxnormNative => "RXNORM",
        })
    }
}

#[derive(Debug, Error)]
#[error("unknown source dialect '{0}' (expected UMLS or RXNORM)")]
pub struct UnknownDialect(String);

impl FromStr for SourceDialect {
    type Err = UnknownDialect;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "UMLS" => Ok(SourceDialect::Umls),
            "RXNORM" | "RXNORM_NATIVE" => Ok(SourceDialect::RxnormNative),
            _ => Err(UnknownDialect(s.to_owned())),
        }
    }
}

#[derive(Clone, Copy)]
enum IdKind {
    Concept,
    Atom,
    AnyMeta,
}

fn is_digits(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit())
}

/// One atom from the concepts file.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConceptRow {
    pub rxcui: String,
    pub rxaui: String,
    pub sab: String,
    pub tty: String,
    /// The atom's term string (`STR` column).
    pub term: String,
    pub suppress: char,
}

impl ConceptRow {
    /// `N` (or an empty column) means the atom is not suppressed.
    pub fn is_suppressed(&self) -> bool {
        self.suppress != 'N'
    }
}

/// One row from the relationships file, read as `rxaui2 <rela> rxaui1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RelationshipRow {
    pub rxcui1: String,
    pub rxaui1: String,
    pub rxcui2: String,
    pub rxaui2: String,
    pub rela: String,
}

/// One row from the attributes file.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AttributeRow {
    pub rxcui: String,
    pub rxaui: String,
    pub atn: String,
    pub atv: String,
}

/// Why a line was rejected.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MalformedReason {
    #[error("line is not valid UTF-8")]
    InvalidUtf8,
    #[error("blank line")]
    Blank,
    #[error("missing trailing '|'")]
    MissingTrailingDelimiter,
    #[error("expected {expected} columns, found {found}")]
    ColumnCount { expected: usize, found: usize },
    #[error("required column {column} is empty")]
    EmptyField { column: &'static str },
    #[error("'{value}' is not a valid {dialect} {column}")]
    InvalidIdentifier {
        column: &'static str,
        value: String,
        dialect: SourceDialect,
    },
    #[error("suppress flag '{0}' is not a single character")]
    InvalidSuppressFlag(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MalformedLine {
    /// 1-based line number in the input.
    pub line_number: usize,
    pub reason: MalformedReason,
}

impl fmt::Display for MalformedLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line_number, self.reason)
    }
}

/// Outcome of reading one file.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParseReport {
    pub lines_read: usize,
    pub rows: usize,
    pub malformed_count: usize,
    /// First [`MAX_REPORTED_LINES`] malformed lines.
    pub malformed: Vec<MalformedLine>,
}

impl ParseReport {
    pub fn is_clean(&self) -> bool {
        self.malformed_count == 0
    }

    fn record(&mut self, line_number: usize, reason: MalformedReason) {
        self.malformed_count += 1;
        if self.malformed.len() < MAX_REPORTED_LINES {
            self.malformed.push(MalformedLine { line_number, reason });
        }
    }
}

/// A record type that maps to one line of an RRF file.
pub trait RrfRecord: Sized {
    /// Number of columns in a full line (trailing pipe excluded).
    const COLUMNS: usize;

    fn from_fields(fields: &[&str], dialect: SourceDialect) -> Result<Self, MalformedReason>;

    /// `(column index, value)` pairs; unused columns are written empty.
    fn placed_fields(&self) -> Vec<(usize, String)>;

    /// Serialize back to a full-width pipe-delimited line (no newline).
    fn to_rrf_line(&self) -> String {
        let mut cols = vec![String::new(); Self::COLUMNS];
        for (idx, value) in self.placed_fields() {
            cols[idx] = value;
        }
        let mut line = cols.join("|");
        line.push('|');
        line
    }
}

fn required<'a>(fields: &[&'a str], idx: usize, column: &'static str) -> Result<&'a str, MalformedReason> {
    let v = fields[idx];
    if v.trim().is_empty() {
        Err(MalformedReason::EmptyField { column })
    } else {
        Ok(v)
    }
}

fn identifier(
    value: &str,
    column: &'static str,
    kind: IdKind,
    dialect: SourceDialect,
    optional: bool,
) -> Result<String, MalformedReason> {
    if value.is_empty() {
        return if optional {
            Ok(String::new())
        } else {
            Err(MalformedReason::EmptyField { column })
        };
    }
    if dialect.check_id(kind, value) {
        Ok(value.to_owned())
    } else {
        Err(MalformedReason::InvalidIdentifier {
            column,
            value: value.to_owned(),
            dialect,
        })
    }
}

impl RrfRecord for ConceptRow {
    const COLUMNS: usize = 18;

    fn from_fields(fields: &[&str], dialect: SourceDialect) -> Result<Self, MalformedReason> {
        let rxcui = identifier(fields[0], "rxcui", IdKind::Concept, dialect, false)?;
        let rxaui = identifier(fields[7], "rxaui", IdKind::Atom, dialect, false)?;
        let term = required(fields, 14, "str")?;
        let suppress = {
            let raw = fields[16];
            let mut chars = raw.chars();
            match (chars.next(), chars.next()) {
                (None, _) => 'N',
                (Some(c), None) => c,
                _ => return Err(MalformedReason::InvalidSuppressFlag(raw.to_owned())),
            }
        };
        Ok(ConceptRow {
            rxcui,
            rxaui,
            sab: fields[11].to_owned(),
            tty: fields[12].to_owned(),
            term: term.to_owned(),
            suppress,
        })
    }

    fn placed_fields(&self) -> Vec<(usize, String)> {
        vec![
            (0, self.rxcui.clone()),
            (7, self.rxaui.clone()),
            (11, self.sab.clone()),
            (12, self.tty.clone()),
            (14, self.term.clone()),
            (16, self.suppress.to_string()),
        ]
    }
}

/// Lowercases a relationship attribute and folds the `tradenname_of`
/// misspelling onto `tradename_of`.
pub fn normalize_rela(raw: &str) -> String {
    let lower = raw.trim().to_lowercase();
    if lower == "tradenname_of" {
        "tradename_of".to_owned()
    } else {
        lower
    }
}

impl RrfRecord for RelationshipRow {
    const COLUMNS: usize = 16;

    fn from_fields(fields: &[&str], dialect: SourceDialect) -> Result<Self, MalformedReason> {
        Ok(RelationshipRow {
            rxcui1: identifier(fields[0], "rxcui1", IdKind::Concept, dialect, false)?,
            rxaui1: identifier(fields[1], "rxaui1", IdKind::Atom, dialect, true)?,
            rxcui2: identifier(fields[4], "rxcui2", IdKind::Concept, dialect, false)?,
            rxaui2: identifier(fields[5], "rxaui2", IdKind::Atom, dialect, true)?,
            rela: normalize_rela(fields[7]),
        })
    }

    fn placed_fields(&self) -> Vec<(usize, String)> {
        vec![
            (0, self.rxcui1.clone()),
            (1, self.rxaui1.clone()),
            (4, self.rxcui2.clone()),
            (5, self.rxaui2.clone()),
            (7, self.rela.clone()),
        ]
    }
}

impl RrfRecord for AttributeRow {
    const COLUMNS: usize = 13;

    fn from_fields(fields: &[&str], dialect: SourceDialect) -> Result<Self, MalformedReason> {
        Ok(AttributeRow {
            rxcui: identifier(fields[0], "rxcui", IdKind::Concept, dialect, false)?,
            rxaui: identifier(fields[3], "rxaui", IdKind::AnyMeta, dialect, true)?,
            atn: required(fields, 8, "atn")?.to_owned(),
            atv: fields[10].to_owned(),
        })
    }

    fn placed_fields(&self) -> Vec<(usize, String)> {
        vec![
            (0, self.rxcui.clone()),
            (3, self.rxaui.clone()),
            (8, self.atn.clone()),
            (10, self.atv.clone()),
        ]
    }
}

/// Parse one line (without its newline) into a record.
pub fn parse_line<T: RrfRecord>(line: &[u8], dialect: SourceDialect) -> Result<T, MalformedReason> {
    let line = std::str::from_utf8(line).map_err(|_| MalformedReason::InvalidUtf8)?;
    if line.trim().is_empty() {
        return Err(MalformedReason::Blank);
    }
    let Some(body) = line.strip_suffix('|') else {
        return Err(MalformedReason::MissingTrailingDelimiter);
    };
    let fields: Vec<&str> = body.split('|').collect();
    if fields.len() != T::COLUMNS {
        return Err(MalformedReason::ColumnCount {
            expected: T::COLUMNS,
            found: fields.len(),
        });
    }
    T::from_fields(&fields, dialect)
}

/// Iterator over the well-formed records of an RRF stream.
///
/// Malformed lines are skipped and recorded; an I/O failure is yielded as
/// `Err` and ends iteration.
pub struct RrfReader<R, T> {
    inner: R,
    dialect: SourceDialect,
    buf: Vec<u8>,
    report: ParseReport,
    done: bool,
    _record: PhantomData<fn() -> T>,
}

impl<R: BufRead, T: RrfRecord> RrfReader<R, T> {
    pub fn new(inner: R, dialect: SourceDialect) -> Self {
        RrfReader {
            inner,
            dialect,
            buf: Vec::with_capacity(256),
            report: ParseReport::default(),
            done: false,
            _record: PhantomData,
        }
    }

    pub fn report(&self) -> &ParseReport {
        &self.report
    }

    pub fn into_report(self) -> ParseReport {
        self.report
    }
}

impl<R: BufRead, T: RrfRecord> Iterator for RrfReader<R, T> {
    type Item = io::Result<T>;

    fn next(&mut self) -> Option<Self::Item> {
        while !self.done {
            self.buf.clear();
            match self.inner.read_until(b'\n', &mut self.buf) {
                Ok(0) => self.done = true,
                Ok(_) => {
                    self.report.lines_read += 1;
                    let line_number = self.report.lines_read;
                    let mut line = self.buf.as_slice();
                    if line_number == 1 {
                        line = line.strip_prefix(UTF8_BOM).unwrap_or(line);
                    }
                    line = line.strip_suffix(b"\n").unwrap_or(line);
                    line = line.strip_suffix(b"\r").unwrap_or(line);
                    match parse_line::<T>(line, self.dialect) {
                        Ok(row) => {
                            self.report.rows += 1;
                            return Some(Ok(row));
                        }
                        Err(reason) => self.report.record(line_number, reason),
                    }
                }
                Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
                Err(e) => {
                    self.done = true;
                    return Some(Err(e));
                }
            }
        }
        None
    }
}

fn collect<T: RrfRecord>(stream: impl Read, dialect: SourceDialect) -> io::Result<(Vec<T>, ParseReport)> {
    let mut reader = RrfReader::<_, T>::new(BufReader::new(stream), dialect);
    let rows = reader.by_ref().collect::<io::Result<Vec<T>>>()?;
    Ok((rows, reader.into_report()))
}

pub fn parse_concepts(stream: impl Read, dialect: SourceDialect) -> io::Result<(Vec<ConceptRow>, ParseReport)> {
    collect(stream, dialect)
}

pub fn parse_relationships(
    stream: impl Read,
    dialect: SourceDialect,
) -> io::Result<(Vec<RelationshipRow>, ParseReport)> {
    collect(stream, dialect)
}

pub fn parse_attributes(stream: impl Read, dialect: SourceDialect) -> io::Result<(Vec<AttributeRow>, ParseReport)> {
    collect(stream, dialect)
}

/// The three files of one release, parsed.
#[derive(Debug, Clone, Default)]
pub struct Release {
    pub concepts: Vec<ConceptRow>,
    pub relationships: Vec<RelationshipRow>,
    pub attributes: Vec<AttributeRow>,
    pub concept_report: ParseReport,
    pub relationship_report: ParseReport,
    pub attribute_report: ParseReport,
}

fn open(path: &Path) -> io::Result<File> {
    File::open(path).map_err(|e| io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

impl Release {
    pub fn read(concepts: &Path, relationships: &Path, attributes: &Path, dialect: SourceDialect) -> io::Result<Self> {
        let (concepts, concept_report) = parse_concepts(open(concepts)?, dialect)?;
        let (relationships, relationship_report) = parse_relationships(open(relationships)?, dialect)?;
        let (attributes, attribute_report) = parse_attributes(open(attributes)?, dialect)?;
        Ok(Release {
            concepts,
            relationships,
            attributes,
            concept_report,
            relationship_report,
            attribute_report,
        })
    }

    /// Read the dialect's standard file names from `dir`.
    pub fn read_dir(dir: &Path, dialect: SourceDialect) -> io::Result<Self> {
        Self::read(
            &dir.join(dialect.concepts_file()),
            &dir.join(dialect.relationships_file()),
            &dir.join(dialect.attributes_file()),
            dialect,
        )
    }

    pub fn malformed_count(&self) -> usize {
        self.concept_report.malformed_count
            + self.relationship_report.malformed_count
            + self.attribute_report.malformed_count
    }
}
