//! Attention heatmaps: a static SVG with one row of context tokens (α) and
//! one row of target tokens (β), an HTML page wrapping it, and a plain-text
//! dump of the same weights.
//!
//! Each token cell carries its exact weight in a `data-weight` attribute
//! (shortest round-trip formatting), and the text dump uses the same
//! formatting, so both outputs encode identical values. Fill opacity is the
//! weight divided by the largest weight of its row.

use std::fmt::Write as _;

use crate::data::label_name;
use crate::embeddings::Vocab;
use crate::error::{Error, Result};
use crate::model::ForwardTrace;
use crate::numerics::argmax;

#[derive(Clone, Debug, PartialEq)]
pub struct AttentionRow {
    pub name: &'static str,
    pub tokens: Vec<String>,
    pub weights: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AttentionView {
    pub rows: Vec<AttentionRow>,
    pub label: usize,
    pub probs: Vec<f64>,
}

/// Collects the attention rows of `trace`. Variants without any attention
/// layer are an error.
pub fn attention_view(trace: &ForwardTrace, vocab: &Vocab) -> Result<AttentionView> {
    let words = |ids: &[usize]| -> Vec<String> { ids.iter().map(|&i| vocab.token(i).unwrap_or("?").to_string()).collect() };
    let mut rows = Vec::new();
    if let (Some(alpha), Some(ctx)) = (&trace.alpha, &trace.context) {
        rows.push(AttentionRow { name: "context", tokens: words(&ctx.tokens), weights: alpha.weights.to_vec() });
    }
    if let (Some(beta), Some(tgt)) = (&trace.beta, &trace.target) {
        rows.push(AttentionRow { name: "target", tokens: words(&tgt.tokens), weights: beta.weights.to_vec() });
    }
    if rows.is_empty() {
        return Err(Error::Invalid(format!("the {} model has no attention weights to show", trace.variant)));
    }
    for r in &rows {
        if r.tokens.len() != r.weights.len() {
            return Err(Error::shape("attention row", r.tokens.len(), r.weights.len()));
        }
    }
    Ok(AttentionView { rows, label: argmax(&trace.y)?, probs: trace.y.to_vec() })
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

const CELL_H: usize = 36;
const LABEL_W: usize = 90;
const ROW_GAP: usize = 14;

fn cell_width(token: &str) -> usize {
    (token.chars().count() * 9 + 16).max(36)
}

pub fn render_svg(view: &AttentionView) -> String {
    let widths: Vec<usize> = view.rows.iter().map(|r| r.tokens.iter().map(|t| cell_width(t)).sum()).collect();
    let width = LABEL_W + widths.iter().copied().max().unwrap_or(0) + 10;
    let height = view.rows.len() * (CELL_H + ROW_GAP) + 30;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="monospace" font-size="14">"#
    );
    let _ = writeln!(
        s,
        r#"  <text x="4" y="18" font-weight="bold">prediction: {} ({})</text>"#,
        label_name(view.label),
        view.probs.iter().map(|p| format!("{p:.3}")).collect::<Vec<_>>().join(" / ")
    );
    for (k, row) in view.rows.iter().enumerate() {
        let y = 28 + k * (CELL_H + ROW_GAP);
        let symbol = if row.name == "context" { "α" } else { "β" };
        let max = row.weights.iter().copied().fold(0.0f64, f64::max);
        let _ = writeln!(s, r#"  <g class="row" data-row="{}">"#, row.name);
        let _ = writeln!(s, r#"    <text x="4" y="{}">{} {}</text>"#, y + CELL_H / 2 + 5, row.name, symbol);
        let mut x = LABEL_W;
        for (tok, &w) in row.tokens.iter().zip(&row.weights) {
            let cw = cell_width(tok);
            let opacity = if max > 0.0 { w / max } else { 0.0 };
            let _ = writeln!(
                s,
                r##"    <g class="cell" data-token="{tok}" data-weight="{w}"><rect x="{x}" y="{y}" width="{cw}" height="{CELL_H}" fill="#c0392b" fill-opacity="{opacity:.6}" stroke="#999"/><text x="{tx}" y="{ty}" text-anchor="middle">{tok}</text></g>"##,
                tok = escape(tok),
                tx = x + cw / 2,
                ty = y + CELL_H / 2 + 5,
            );
            x += cw;
        }
        s.push_str("  </g>\n");
    }
    s.push_str("</svg>\n");
    s
}

pub fn render_html(view: &AttentionView, title: &str) -> String {
    format!(
        "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n<title>{t}</title>\n</head>\n<body>\n<h1>{t}</h1>\n<p>Darker cells carry more attention weight.</p>\n{svg}</body>\n</html>\n",
        t = escape(title),
        svg = render_svg(view)
    )
}

/// `label`, `probs`, then one `row  token  weight` line per cell, all
/// tab-separated.
pub fn weights_text(view: &AttentionView) -> String {
    let mut s = format!("label\t{}\n", label_name(view.label));
    s.push_str("probs");
    for p in &view.probs {
        let _ = write!(s, "\t{p}");
    }
    s.push('\n');
    for row in &view.rows {
        for (tok, w) in row.tokens.iter().zip(&row.weights) {
            let _ = writeln!(s, "{}\t{}\t{}", row.name, tok, w);
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embeddings::EmbeddingTable;
    use crate::model::{forward, IanParams, Instance, ModelConfig, ModelVariant};
    use crate::numerics::Rng;

    fn setup(variant: ModelVariant, range: f64) -> (IanParams, Vocab, Instance) {
        let vocab = Vocab::build(&[vec!["the", "<b>", "&", "fish", "."]]).unwrap();
        let mut rng = Rng::new(4);
        let table = EmbeddingTable::random(vocab.len(), 4, 0.5, &mut rng);
        let config = ModelConfig { variant, hidden_dim: 5, init_range: range, ..Default::default() };
        let p = IanParams::init(&config, table, &mut rng).unwrap();
        let inst = Instance { id: "v".into(), context: vec![1, 2, 3, 4, 5], target: vec![4], span: Some((3, 4)), label: None };
        (p, vocab, inst)
    }

    fn attr_values(svg: &str, attr: &str) -> Vec<String> {
        let key = format!("{attr}=\"");
        svg.match_indices(&key)
            .map(|(i, _)| {
                let rest = &svg[i + key.len()..];
                rest[..rest.find('"').unwrap()].to_string()
            })
            .collect()
    }

    #[test]
    fn svg_and_dump_match_trace_exactly() {
        let (p, vocab, inst) = setup(ModelVariant::Ian, 0.5);
        let trace = forward(&p, &inst, None).unwrap();
        let view = attention_view(&trace, &vocab).unwrap();
        let svg = render_svg(&view);
        let from_svg: Vec<f64> = attr_values(&svg, "data-weight").iter().map(|v| v.parse().unwrap()).collect();
        let expected: Vec<f64> =
            trace.alpha.as_ref().unwrap().weights.iter().chain(trace.beta.as_ref().unwrap().weights.iter()).copied().collect();
        assert_eq!(from_svg, expected);
        let from_dump: Vec<f64> = weights_text(&view)
            .lines()
            .filter(|l| l.starts_with("context\t") || l.starts_with("target\t"))
            .map(|l| l.rsplit('\t').next().unwrap().parse().unwrap())
            .collect();
        assert_eq!(from_dump, expected);
        for row in &view.rows {
            assert!((row.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert!(svg.contains("&lt;b&gt;") && svg.contains("&amp;"));
        assert!(render_html(&view, "fish").starts_with("<!DOCTYPE html>"));
    }

    #[test]
    fn zero_model_gives_uniform_rows() {
        let (mut p, vocab, inst) = setup(ModelVariant::Ian, 0.5);
        for (_, s) in p.named_slots_mut() {
            s.data.fill(0.0);
        }
        let view = attention_view(&forward(&p, &inst, None).unwrap(), &vocab).unwrap();
        let svg = render_svg(&view);
        let opacities = attr_values(&svg, "fill-opacity");
        assert_eq!(opacities.len(), 6);
        assert!(opacities.iter().all(|o| o == "1.000000"));
        assert_eq!(view.rows[0].weights, vec![0.2; 5]);
    }

    #[test]
    fn single_row_variants_and_missing_attention() {
        let (p, vocab, inst) = setup(ModelVariant::Target2Content, 0.5);
        let view = attention_view(&forward(&p, &inst, None).unwrap(), &vocab).unwrap();
        assert_eq!(view.rows.len(), 1);
        let (p, vocab, inst) = setup(ModelVariant::LstmAvg, 0.5);
        assert!(attention_view(&forward(&p, &inst, None).unwrap(), &vocab).is_err());
    }
}
