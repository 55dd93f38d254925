//! Plain-text analysis report.

use std::fmt::Write;

use crate::catalog::{CatalogLoad, Category};
use crate::ingest::ViolationStats;
use crate::relation::RelationChain;
use crate::similarity::SimilarityMatrix;

/// Marks the largest value of a row.
pub const ROW_MAX_MARK: char = '_';
/// Marks the largest value of a column.
pub const COL_MAX_MARK: char = '*';

pub const NO_RELATIONS: &str = "no relations above quartile";

/// Everything a report may show; absent parts are skipped.
#[derive(Debug, Default, Clone, Copy)]
pub struct ReportInputs<'a> {
    /// `(key, value)` lines printed first, in order.
    pub metadata: &'a [(String, String)],
    pub stats: Option<&'a ViolationStats>,
    pub top_words: &'a [(String, u64)],
    pub catalog: Option<&'a CatalogLoad>,
    /// `(title, matrix)` pairs.
    pub matrices: &'a [(String, SimilarityMatrix)],
    pub chains: &'a [RelationChain],
}

fn heading(out: &mut String, title: &str) {
    let _ = writeln!(out, "\n{title}\n{}", "=".repeat(title.chars().count()));
}

/// `0.692` followed by the row/column maximum marks that apply.
pub fn format_cell(matrix: &SimilarityMatrix, i: usize, j: usize) -> String {
    let mut s = format!("{:.3}", matrix.values[[i, j]]);
    if matrix.row_max_col[i] == j {
        s.push(ROW_MAX_MARK);
    }
    if matrix.col_max_row[j] == i {
        s.push(COL_MAX_MARK);
    }
    s
}

fn render_matrix(out: &mut String, m: &SimilarityMatrix) {
    let mut cells: Vec<Vec<String>> = Vec::with_capacity(m.nrows() + 1);
    let mut header = vec![String::new()];
    header.extend(m.col_labels.iter().cloned());
    cells.push(header);
    for (i, label) in m.row_labels.iter().enumerate() {
        let mut row = vec![label.clone()];
        row.extend((0..m.ncols()).map(|j| format_cell(m, i, j)));
        cells.push(row);
    }
    let widths: Vec<usize> =
        (0..=m.ncols()).map(|j| cells.iter().map(|r| r[j].chars().count()).max().unwrap_or(0)).collect();
    for row in &cells {
        let line: Vec<String> = row
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(j, (c, w))| if j == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect();
        let _ = writeln!(out, "{}", line.join("  ").trim_end());
    }
}

fn join_links<'a>(links: impl Iterator<Item = (&'a str, f64)>) -> String {
    let parts: Vec<String> = links.map(|(l, s)| format!("{l} ({s:.3})")).collect();
    if parts.is_empty() {
        "-".to_string()
    } else {
        parts.join(", ")
    }
}

/// Renders the report. Output depends only on the inputs.
pub fn render_report(inputs: &ReportInputs<'_>) -> String {
    let mut out = String::from("Violation comment analysis report\n");

    if !inputs.metadata.is_empty() {
        heading(&mut out, "Run metadata");
        let w = inputs.metadata.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        for (k, v) in inputs.metadata {
            let _ = writeln!(out, "{k:<w$}  {v}");
        }
    }

    if let Some(stats) = inputs.stats {
        heading(&mut out, "Violations by type");
        for (ty, c) in &stats.count_by_type {
            let _ = writeln!(out, "{:<36}{c:>8}", ty.label());
        }
        let _ = writeln!(out, "{:<36}{:>8}", "total records", stats.total_records);
        let _ = writeln!(out, "{:<36}{:>8}", "violations with comments", stats.selected_records);

        heading(&mut out, "Violations by year");
        if stats.count_by_year.is_empty() {
            let _ = writeln!(out, "(no dated violations)");
        }
        for (year, c) in &stats.count_by_year {
            let _ = writeln!(out, "{year}  {c:>8}");
        }

        heading(&mut out, "Most frequent violation descriptions");
        for (i, cc) in stats.top_codes.iter().enumerate() {
            let _ = writeln!(out, "{:>2}. {} ({})", i + 1, cc.description, cc.count);
        }
    }

    if !inputs.top_words.is_empty() {
        heading(&mut out, "Most frequent comment words");
        for (i, (w, c)) in inputs.top_words.iter().enumerate() {
            let _ = writeln!(out, "{:>3}. {w:<20}{c:>8}", i + 1);
        }
    }

    if let Some(load) = inputs.catalog {
        heading(&mut out, "Keyword catalog");
        for cat in Category::ALL {
            let kws = load.catalog.keywords(cat);
            let list: Vec<String> = kws.iter().map(|k| format!("{} ({})", k.label, k.frequency)).collect();
            let _ = writeln!(
                out,
                "{:<12}{}",
                cat.name(),
                if list.is_empty() { "-".into() } else { list.join(", ") }
            );
        }
        if !load.rejections.is_empty() {
            let _ = writeln!(out, "\nRejected keywords:");
            for r in &load.rejections {
                let _ = writeln!(out, "  {} `{}`: {}", r.category, r.label, r.reason);
            }
        }
    }

    for (title, m) in inputs.matrices {
        heading(&mut out, title);
        let _ = writeln!(out, "(`{ROW_MAX_MARK}` = largest in row, `{COL_MAX_MARK}` = largest in column)\n");
        render_matrix(&mut out, m);
    }

    heading(&mut out, "Location -> Operation -> Contaminant");
    let has_links =
        inputs.chains.iter().any(|c| !c.location_contaminants.is_empty() || !c.operations.is_empty());
    if !has_links {
        let _ = writeln!(out, "{NO_RELATIONS}");
    }
    for c in inputs.chains.iter() {
        if c.location_contaminants.is_empty() && c.operations.is_empty() {
            continue;
        }
        let _ = writeln!(out, "\n{}", c.location);
        let _ = writeln!(
            out,
            "  contaminants: {}",
            join_links(c.location_contaminants.iter().map(|l| (l.label.as_str(), l.similarity)))
        );
        for op in &c.operations {
            let _ = writeln!(
                out,
                "  {} ({:.3}) -> {}",
                op.operation,
                op.similarity,
                join_links(op.contaminants.iter().map(|l| (l.label.as_str(), l.similarity)))
            );
        }
    }
    out
}
