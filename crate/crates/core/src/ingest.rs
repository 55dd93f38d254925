//! Compliance-report ingestion and descriptive statistics.
//!
//! A report export is a delimited table with a header row. The [`ColumnMap`]
//! names the source column for every logical field and translates the raw
//! violation-type strings into [`ViolationType`] values.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::{Read, Write};

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of violation descriptions kept in [`ViolationStats::top_codes`].
pub const DEFAULT_TOP_CODES: usize = 5;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("missing header column `{0}`")]
    MissingColumn(String),
    #[error("invalid column map: {0}")]
    InvalidColumnMap(String),
    #[error("malformed delimited input: {0}")]
    Csv(#[from] csv::Error),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ViolationType {
    None,
    Administrative,
    EnvironmentalHealthSafety,
}

impl ViolationType {
    pub const ALL: [ViolationType; 3] =
        [ViolationType::None, ViolationType::Administrative, ViolationType::EnvironmentalHealthSafety];

    /// The label used in DEP exports.
    pub fn label(self) -> &'static str {
        match self {
            ViolationType::None => "None",
            ViolationType::Administrative => "Administrative",
            ViolationType::EnvironmentalHealthSafety => "Environmental Health & Safety",
        }
    }

    pub fn is_violation(self) -> bool {
        self != ViolationType::None
    }
}

impl fmt::Display for ViolationType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// One inspection row of a compliance report.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComplianceRecord {
    pub record_id: String,
    pub inspection_date: Option<NaiveDate>,
    pub violation_type: ViolationType,
    pub violation_code: String,
    pub violation_description: String,
    pub inspection_comment: String,
}

impl ComplianceRecord {
    pub fn has_comment(&self) -> bool {
        !self.inspection_comment.trim().is_empty()
    }
}

/// Source column names for each logical field, plus the violation-type alias
/// table and the file dialect.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnMap {
    pub record_id: String,
    pub inspection_date: String,
    pub violation_type: String,
    pub violation_code: String,
    pub violation_description: String,
    pub inspection_comment: String,
    /// Raw type string to enum value. Matching trims the raw value and ignores
    /// ASCII case. The first alias listed for a type is used when writing.
    pub type_aliases: Vec<(String, ViolationType)>,
    pub delimiter: u8,
    /// chrono format string for `inspection_date`.
    pub date_format: String,
}

impl Default for ColumnMap {
    fn default() -> Self {
        ColumnMap {
            record_id: "record_id".into(),
            inspection_date: "inspection_date".into(),
            violation_type: "violation_type".into(),
            violation_code: "violation_code".into(),
            violation_description: "violation_description".into(),
            inspection_comment: "inspection_comment".into(),
            type_aliases: ViolationType::ALL.iter().map(|t| (t.label().to_string(), *t)).collect(),
            delimiter: b',',
            date_format: "%Y-%m-%d".into(),
        }
    }
}

impl ColumnMap {
    fn columns(&self) -> [(&'static str, &str); 6] {
        [
            ("record_id", &self.record_id),
            ("inspection_date", &self.inspection_date),
            ("violation_type", &self.violation_type),
            ("violation_code", &self.violation_code),
            ("violation_description", &self.violation_description),
            ("inspection_comment", &self.inspection_comment),
        ]
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        let mut seen = HashSet::new();
        for (field, column) in self.columns() {
            if column.is_empty() {
                return Err(IngestError::InvalidColumnMap(format!(
                    "field `{field}` has an empty column name"
                )));
            }
            if !seen.insert(column) {
                return Err(IngestError::InvalidColumnMap(format!(
                    "column `{column}` is mapped to more than one field"
                )));
            }
        }
        let mut aliases: HashMap<String, ViolationType> = HashMap::new();
        for (alias, ty) in &self.type_aliases {
            let key = alias.trim().to_ascii_lowercase();
            if let Some(prev) = aliases.insert(key, *ty) {
                if prev != *ty {
                    return Err(IngestError::InvalidColumnMap(format!(
                        "alias `{alias}` maps to both {prev:?} and {ty:?}"
                    )));
                }
            }
        }
        for ty in ViolationType::ALL {
            if !self.type_aliases.iter().any(|(_, t)| *t == ty) {
                return Err(IngestError::InvalidColumnMap(format!("no alias for violation type {ty:?}")));
            }
        }
        Ok(())
    }

    pub fn resolve_type(&self, raw: &str) -> Option<ViolationType> {
        let raw = raw.trim();
        self.type_aliases.iter().find(|(alias, _)| alias.trim().eq_ignore_ascii_case(raw)).map(|(_, ty)| *ty)
    }

    fn canonical_alias(&self, ty: ViolationType) -> &str {
        self.type_aliases
            .iter()
            .find(|(_, t)| *t == ty)
            .map(|(alias, _)| alias.as_str())
            .unwrap_or(ty.label())
    }
}

/// A data row that could not be turned into a record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowError {
    /// 1-based line number in the source (the header is line 1).
    pub line: u64,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct ParsedReport {
    pub records: Vec<ComplianceRecord>,
    pub row_errors: Vec<RowError>,
}

/// Parses a delimited report export.
///
/// Missing header columns are fatal. Rows with an unknown type string, an
/// unparseable date or too few fields are skipped and listed in
/// [`ParsedReport::row_errors`].
pub fn parse_report<R: Read>(reader: R, map: &ColumnMap) -> Result<ParsedReport, IngestError> {
    map.validate()?;
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(map.delimiter)
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);

    let headers = rdr.headers()?.clone();
    let index_of = |name: &str| -> Result<usize, IngestError> {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| IngestError::MissingColumn(name.to_string()))
    };
    let idx_id = index_of(&map.record_id)?;
    let idx_date = index_of(&map.inspection_date)?;
    let idx_type = index_of(&map.violation_type)?;
    let idx_code = index_of(&map.violation_code)?;
    let idx_desc = index_of(&map.violation_description)?;
    let idx_comment = index_of(&map.inspection_comment)?;

    let mut out = ParsedReport::default();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let field = |i: usize| row.get(i);
        let fields = (
            field(idx_id),
            field(idx_date),
            field(idx_type),
            field(idx_code),
            field(idx_desc),
            field(idx_comment),
        );
        let (Some(id), Some(date), Some(ty), Some(code), Some(desc), Some(comment)) = fields else {
            out.row_errors.push(RowError {
                line,
                message: format!("row has {} fields, fewer than the header", row.len()),
            });
            continue;
        };

        let Some(violation_type) = map.resolve_type(ty) else {
            out.row_errors.push(RowError { line, message: format!("unknown violation type `{ty}`") });
            continue;
        };

        let inspection_date = if date.trim().is_empty() {
            None
        } else {
            match NaiveDate::parse_from_str(date.trim(), &map.date_format) {
                Ok(d) => Some(d),
                Err(e) => {
                    out.row_errors
                        .push(RowError { line, message: format!("unparseable date `{date}`: {e}") });
                    continue;
                }
            }
        };

        out.records.push(ComplianceRecord {
            record_id: id.to_string(),
            inspection_date,
            violation_type,
            violation_code: code.to_string(),
            violation_description: desc.to_string(),
            inspection_comment: comment.to_string(),
        });
    }
    Ok(out)
}

/// Writes records in the dialect described by `map`, so that
/// [`parse_report`] reads them back unchanged.
pub fn write_report<W: Write>(
    records: &[ComplianceRecord],
    map: &ColumnMap,
    writer: W,
) -> Result<(), IngestError> {
    map.validate()?;
    let mut wtr = csv::WriterBuilder::new()
        .delimiter(map.delimiter)
        .quote_style(csv::QuoteStyle::Necessary)
        .from_writer(writer);
    wtr.write_record(map.columns().iter().map(|(_, c)| *c))?;
    for r in records {
        let date = r.inspection_date.map(|d| d.format(&map.date_format).to_string()).unwrap_or_default();
        wtr.write_record([
            r.record_id.as_str(),
            date.as_str(),
            map.canonical_alias(r.violation_type),
            r.violation_code.as_str(),
            r.violation_description.as_str(),
            r.inspection_comment.as_str(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Keeps records of type `ty`, optionally only those with a non-blank comment.
/// Input order is preserved.
pub fn filter_records(
    records: &[ComplianceRecord],
    ty: ViolationType,
    require_comment: bool,
) -> Vec<ComplianceRecord> {
    records
        .iter()
        .filter(|r| r.violation_type == ty && (!require_comment || r.has_comment()))
        .cloned()
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeCount {
    pub description: String,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViolationStats {
    pub count_by_type: BTreeMap<ViolationType, u64>,
    /// Violation (non-`None`) records per inspection year.
    pub count_by_year: BTreeMap<i32, u64>,
    pub top_codes: Vec<CodeCount>,
    pub total_records: u64,
    /// Violation records with a non-blank comment.
    pub selected_records: u64,
}

pub fn compute_stats(records: &[ComplianceRecord]) -> ViolationStats {
    compute_stats_with(records, DEFAULT_TOP_CODES)
}

pub fn compute_stats_with(records: &[ComplianceRecord], top_n: usize) -> ViolationStats {
    let mut count_by_type: BTreeMap<ViolationType, u64> =
        ViolationType::ALL.iter().map(|t| (*t, 0)).collect();
    let mut count_by_year = BTreeMap::new();
    let mut selected_records = 0;
    for r in records {
        *count_by_type.entry(r.violation_type).or_insert(0) += 1;
        if r.violation_type.is_violation() {
            if let Some(date) = r.inspection_date {
                *count_by_year.entry(date.year()).or_insert(0) += 1;
            }
            if r.has_comment() {
                selected_records += 1;
            }
        }
    }
    ViolationStats {
        count_by_type,
        count_by_year,
        top_codes: if top_n == 0 { Vec::new() } else { top_violation_codes(records, top_n) },
        total_records: records.len() as u64,
        selected_records,
    }
}

/// The `n` most frequent violation descriptions among violation records.
/// Ties are broken by lexicographic description; blank descriptions are not
/// counted.
pub fn top_violation_codes(records: &[ComplianceRecord], n: usize) -> Vec<CodeCount> {
    assert!(n >= 1, "top_violation_codes needs n >= 1");
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for r in records.iter().filter(|r| r.violation_type.is_violation()) {
        let desc = r.violation_description.trim();
        if !desc.is_empty() {
            *counts.entry(desc).or_insert(0) += 1;
        }
    }
    let mut ranked: Vec<(&str, u64)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    ranked.into_iter().take(n).map(|(d, c)| CodeCount { description: d.to_string(), count: c }).collect()
}

impl ViolationStats {
    /// Tab-delimited report with one `# section` per statistic.
    pub fn write_delimited<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# count_by_type")?;
        writeln!(w, "violation_type\tcount")?;
        for (ty, c) in &self.count_by_type {
            writeln!(w, "{}\t{}", ty.label(), c)?;
        }
        writeln!(w)?;
        writeln!(w, "# count_by_year")?;
        writeln!(w, "year\tcount")?;
        for (year, c) in &self.count_by_year {
            writeln!(w, "{year}\t{c}")?;
        }
        writeln!(w)?;
        writeln!(w, "# top_codes")?;
        writeln!(w, "rank\tviolation_description\tcount")?;
        for (i, cc) in self.top_codes.iter().enumerate() {
            writeln!(w, "{}\t{}\t{}", i + 1, sanitize_field(&cc.description), cc.count)?;
        }
        writeln!(w)?;
        writeln!(w, "# totals")?;
        writeln!(w, "statistic\tvalue")?;
        writeln!(w, "total_records\t{}", self.total_records)?;
        writeln!(w, "selected_records\t{}", self.selected_records)?;
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("stats serialize to JSON")
    }
}

fn sanitize_field(s: &str) -> String {
    s.replace(['\t', '\n', '\r'], " ")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: &str, date: &str, ty: ViolationType, desc: &str, comment: &str) -> ComplianceRecord {
        ComplianceRecord {
            record_id: id.into(),
            inspection_date: Some(NaiveDate::parse_from_str(date, "%Y-%m-%d").unwrap()),
            violation_type: ty,
            violation_code: String::new(),
            violation_description: desc.into(),
            inspection_comment: comment.into(),
        }
    }

    const HEADER: &str =
        "record_id,inspection_date,violation_type,violation_code,violation_description,inspection_comment\n";

    #[test]
    fn three_row_fixture_maps_every_type() {
        let data = format!(
            "{HEADER}1,2010-03-04,Environmental Health & Safety,78.54,\"Failure to contain, store\",Brine on pad\n\
             2,2011-05-06,Administrative,201A,Late report,\n\
             3,2012-07-08,None,,,Site OK\n"
        );
        let parsed = parse_report(data.as_bytes(), &ColumnMap::default()).unwrap();
        assert!(parsed.row_errors.is_empty());
        let types: Vec<_> = parsed.records.iter().map(|r| r.violation_type).collect();
        assert_eq!(
            types,
            vec![
                ViolationType::EnvironmentalHealthSafety,
                ViolationType::Administrative,
                ViolationType::None
            ]
        );
        assert_eq!(parsed.records[0].violation_description, "Failure to contain, store");
    }

    #[test]
    fn header_only_is_empty() {
        let parsed = parse_report(HEADER.as_bytes(), &ColumnMap::default()).unwrap();
        assert!(parsed.records.is_empty());
        assert!(parsed.row_errors.is_empty());
    }

    #[test]
    fn unknown_type_is_a_row_error() {
        let data = format!("{HEADER}1,2010-01-01,Misc,,,x\n2,2010-01-01,None,,,y\n");
        let parsed = parse_report(data.as_bytes(), &ColumnMap::default()).unwrap();
        assert_eq!(parsed.records.len(), 1);
        assert_eq!(parsed.row_errors.len(), 1);
        assert_eq!(parsed.row_errors[0].line, 2);
        assert!(parsed.row_errors[0].message.contains("Misc"));
    }

    #[test]
    fn bad_date_is_a_row_error() {
        let data = format!("{HEADER}1,2010-13-01,None,,,x\n2,,None,,,y\n");
        let parsed = parse_report(data.as_bytes(), &ColumnMap::default()).unwrap();
        assert_eq!(parsed.records.len(), 1);
        assert_eq!(parsed.records[0].inspection_date, None);
        assert_eq!(parsed.row_errors.len(), 1);
    }

    #[test]
    fn missing_column_is_fatal() {
        let data = "record_id,inspection_date,violation_type\n1,2010-01-01,None\n";
        match parse_report(data.as_bytes(), &ColumnMap::default()) {
            Err(IngestError::MissingColumn(c)) => assert_eq!(c, "violation_code"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn tab_delimited_and_aliases() {
        let mut map = ColumnMap { delimiter: b'\t', ..Default::default() };
        map.type_aliases.push(("EH&S".into(), ViolationType::EnvironmentalHealthSafety));
        let data = "record_id\tinspection_date\tviolation_type\tviolation_code\tviolation_description\tinspection_comment\textra\n\
                    9\t2015-02-03\t eh&s \tc\td\tcomment, with comma\tignored\n";
        let parsed = parse_report(data.as_bytes(), &map).unwrap();
        assert_eq!(parsed.records[0].violation_type, ViolationType::EnvironmentalHealthSafety);
        assert_eq!(parsed.records[0].inspection_comment, "comment, with comma");
    }

    #[test]
    fn duplicate_columns_rejected() {
        let mut map = ColumnMap::default();
        map.violation_code = map.violation_description.clone();
        assert!(matches!(map.validate(), Err(IngestError::InvalidColumnMap(_))));
    }

    fn five_records() -> Vec<ComplianceRecord> {
        use ViolationType as T;
        vec![
            rec("1", "2010-01-01", T::EnvironmentalHealthSafety, "a", "spill"),
            rec("2", "2010-01-01", T::Administrative, "b", "late"),
            rec("3", "2010-01-01", T::EnvironmentalHealthSafety, "a", "   "),
            rec("4", "2010-01-01", T::Administrative, "b", ""),
            rec("5", "2010-01-01", T::EnvironmentalHealthSafety, "c", "leak"),
        ]
    }

    #[test]
    fn filter_with_and_without_comment_requirement() {
        let recs = five_records();
        let ids = |v: Vec<ComplianceRecord>| v.into_iter().map(|r| r.record_id).collect::<Vec<_>>();
        assert_eq!(
            ids(filter_records(&recs, ViolationType::EnvironmentalHealthSafety, true)),
            vec!["1", "5"]
        );
        assert_eq!(
            ids(filter_records(&recs, ViolationType::EnvironmentalHealthSafety, false)),
            vec!["1", "3", "5"]
        );
        assert!(filter_records(&[], ViolationType::None, true).is_empty());
    }

    #[test]
    fn stats_empty() {
        let s = compute_stats(&[]);
        assert_eq!(s.total_records, 0);
        assert_eq!(s.selected_records, 0);
        assert!(s.count_by_type.values().all(|c| *c == 0));
        assert!(s.count_by_year.is_empty());
        assert!(s.top_codes.is_empty());
    }

    #[test]
    fn stats_by_year() {
        use ViolationType as T;
        let recs = vec![
            rec("1", "2010-01-05", T::EnvironmentalHealthSafety, "a", "x"),
            rec("2", "2010-03-05", T::Administrative, "a", "x"),
            rec("3", "2010-06-05", T::EnvironmentalHealthSafety, "b", ""),
            rec("4", "2010-12-31", T::Administrative, "a", "x"),
            rec("5", "2018-01-01", T::EnvironmentalHealthSafety, "b", "x"),
            rec("6", "2018-07-04", T::Administrative, "c", "x"),
        ];
        let s = compute_stats(&recs);
        assert_eq!(s.count_by_year, BTreeMap::from([(2010, 4), (2018, 2)]));
        assert_eq!(s.total_records, 6);
        assert_eq!(s.selected_records, 5);
        assert_eq!(s.count_by_type[&T::EnvironmentalHealthSafety], 3);
        assert_eq!(s.count_by_type[&T::None], 0);
    }

    #[test]
    fn top_codes_ranking() {
        use ViolationType as T;
        let mut recs = vec![
            rec("1", "2010-01-01", T::Administrative, "A", ""),
            rec("2", "2010-01-01", T::EnvironmentalHealthSafety, "A", ""),
            rec("3", "2010-01-01", T::EnvironmentalHealthSafety, "A", ""),
            rec("4", "2010-01-01", T::EnvironmentalHealthSafety, "B", ""),
        ];
        let top = top_violation_codes(&recs, 1);
        assert_eq!(top, vec![CodeCount { description: "A".into(), count: 3 }]);
        // None-type rows are not violations
        recs.push(rec("5", "2010-01-01", T::None, "B", ""));
        recs.push(rec("6", "2010-01-01", T::None, "B", ""));
        let all = top_violation_codes(&recs, 10);
        assert_eq!(all.len(), 2);
        assert_eq!(all[1], CodeCount { description: "B".into(), count: 1 });
    }

    #[test]
    fn top_codes_tie_break_is_lexicographic() {
        use ViolationType as T;
        let recs = vec![
            rec("1", "2010-01-01", T::Administrative, "zeta", ""),
            rec("2", "2010-01-01", T::Administrative, "alpha", ""),
        ];
        let top = top_violation_codes(&recs, 2);
        assert_eq!(top[0].description, "alpha");
        assert_eq!(top[1].description, "zeta");
    }

    #[test]
    fn delimited_stats_have_every_section() {
        let s = compute_stats(&five_records());
        let mut buf = Vec::new();
        s.write_delimited(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        for section in ["# count_by_type", "# count_by_year", "# top_codes", "# totals"] {
            assert!(text.contains(section), "{section} missing");
        }
        let back: ViolationStats = serde_json::from_str(&s.to_json()).unwrap();
        assert_eq!(back, s);
    }
}
