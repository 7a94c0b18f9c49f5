//! Text and CSV rendering of evaluation results. Output is a pure function
//! of the result, so repeated runs are byte-identical.

use std::fmt::Write as _;

use crate::evaluate::{Approach, CaseResult, ComparisonRow, EvaluationResult};

/// Three significant digits, two-digit exponent: `3.46E-03`.
pub fn format_sci(x: f64) -> String {
    if x == 0.0 {
        return "0.00E+00".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let s = format!("{x:.2E}");
    let (mantissa, exp) = s.split_once('E').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}E{sign}{:02}", exp.abs())
}

/// Risk reduction factors: two decimals.
pub fn format_factor(x: f64) -> String {
    format!("{x:.2}")
}

struct Row {
    metric: &'static str,
    item: String,
    cells: Vec<String>,
}

fn rows_for(result: &EvaluationResult, approach: Approach) -> Vec<Row> {
    let cases: Vec<&CaseResult> = result
        .case_ids
        .iter()
        .filter_map(|c| result.get(approach, c))
        .collect();
    let Some(first) = cases.first() else {
        return Vec::new();
    };
    let mut rows = Vec::new();
    let mut push = |metric, item: &str, cell: &dyn Fn(&CaseResult) -> String| {
        rows.push(Row {
            metric,
            item: item.to_string(),
            cells: cases.iter().map(|c| cell(c)).collect(),
        });
    };
    for b in &first.barriers {
        let id = b.barrier_id.as_str();
        match approach {
            Approach::Quantitative => push("pfd_avg", id, &|c| {
                c.barrier(id)
                    .and_then(|b| b.pfd_avg)
                    .map_or_else(String::new, format_sci)
            }),
            Approach::SemiQuantitative => push("confidence_level", id, &|c| {
                c.barrier(id)
                    .and_then(|b| b.confidence)
                    .map_or_else(String::new, |nc| nc.to_string())
            }),
        }
    }
    for b in &first.barriers {
        let id = b.barrier_id.as_str();
        push("risk_reduction_factor", id, &|c| {
            c.barrier(id)
                .map_or_else(String::new, |b| format_factor(b.risk_reduction_factor))
        });
    }
    for (ei, _) in &first.by_initiating_event {
        push("ei_contribution", ei, &|c| {
            c.initiating_event(ei).map_or_else(String::new, format_sci)
        });
    }
    push("frequency", "ERC", &|c| format_sci(c.erc_frequency));
    for (label, _) in first.phd.iter() {
        push("frequency", label, &|c| {
            c.phd.get(label).map_or_else(String::new, format_sci)
        });
    }
    rows
}

fn section_title(metric: &str) -> &'static str {
    match metric {
        "pfd_avg" => "Barrier PFDavg",
        "confidence_level" => "Confidence level",
        "risk_reduction_factor" => "Risk reduction factor",
        "ei_contribution" => "Central event frequency by initiating event (/yr)",
        _ => "Annual frequencies (/yr)",
    }
}

fn write_table(out: &mut String, header: &[String], rows: &[Vec<String>]) {
    let widths: Vec<usize> = (0..header.len())
        .map(|i| {
            rows.iter()
                .map(|r| r[i].len())
                .chain([header[i].len()])
                .max()
                .unwrap_or(0)
        })
        .collect();
    let line = |cells: &[String]| {
        let mut s = String::new();
        for (i, (c, w)) in cells.iter().zip(&widths).enumerate() {
            if i == 0 {
                let _ = write!(s, "{c:<w$}");
            } else {
                let _ = write!(s, "  {c:>w$}");
            }
        }
        s.trim_end().to_string()
    };
    let _ = writeln!(out, "{}", line(header));
    for r in rows {
        let _ = writeln!(out, "{}", line(r));
    }
}

/// Aligned plain-text tables, one block per approach.
pub fn render_table(result: &EvaluationResult) -> String {
    let mut out = String::new();
    for &approach in &result.approaches {
        let rows = rows_for(result, approach);
        let _ = writeln!(out, "{approach} approach");
        let _ = writeln!(out);
        let mut i = 0;
        while i < rows.len() {
            let metric = rows[i].metric;
            let block: Vec<Vec<String>> = rows[i..]
                .iter()
                .take_while(|r| r.metric == metric)
                .map(|r| {
                    std::iter::once(r.item.clone())
                        .chain(r.cells.clone())
                        .collect()
                })
                .collect();
            i += block.len();
            let header: Vec<String> = std::iter::once(section_title(metric).to_string())
                .chain(result.case_ids.iter().cloned())
                .collect();
            write_table(&mut out, &header, &block);
            let _ = writeln!(out);
        }
    }
    let m = &result.metadata;
    let _ = writeln!(
        out,
        "horizon {} h, grid step {} h, model {}",
        m.horizon_hours, m.grid_step_hours, m.model_hash
    );
    out
}

/// One row per metric, one column per case.
pub fn render_csv(result: &EvaluationResult) -> String {
    let mut out = String::from("approach,metric,item");
    for c in &result.case_ids {
        out.push(',');
        out.push_str(c);
    }
    out.push('\n');
    for &approach in &result.approaches {
        for row in rows_for(result, approach) {
            let _ = write!(out, "{},{},{}", approach.key(), row.metric, row.item);
            for cell in row.cells {
                out.push(',');
                out.push_str(&cell);
            }
            out.push('\n');
        }
    }
    out
}

pub fn render_comparison_csv(rows: &[ComparisonRow]) -> String {
    let mut out =
        String::from("case,quantitative_erc,semi_quantitative_erc,ratio_quant_over_semi\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            r.case_id,
            format_sci(r.quantitative_erc),
            format_sci(r.semiquantitative_erc),
            format_sci(r.ratio)
        );
    }
    out
}

pub fn render_comparison_table(rows: &[ComparisonRow]) -> String {
    let header = [
        "case",
        "quantitative ERC",
        "semi-quantitative ERC",
        "quant/semi",
    ]
    .map(String::from);
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.case_id.clone(),
                format_sci(r.quantitative_erc),
                format_sci(r.semiquantitative_erc),
                format_sci(r.ratio),
            ]
        })
        .collect();
    let mut out = String::new();
    write_table(&mut out, &header, &body);
    out
}
