//! SemEval-2014 Task 4 (aspect term polarity) ingestion.
//!
//! Files follow the official schema:
//!
//! ```text
//! <sentences>
//!   <sentence id="...">
//!     <text>...</text>
//!     <aspectTerms>
//!       <aspectTerm term="..." polarity="positive" from="4" to="9"/>
//!     </aspectTerms>
//!   </sentence>
//! </sentences>
//! ```
//!
//! `from`/`to` are character (not byte) offsets into the decoded text.
//! Terms labeled `conflict` are dropped, leaving three classes:
//! positive = 0, neutral = 1, negative = 2.
//!
//! Instance dump format, one instance per line, tab-separated:
//! `id  label  start:end  context tokens  target tokens`, tokens joined by
//! single spaces, `-` for a missing label or span.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::embeddings::Vocab;
use crate::error::{Error, Result};
use crate::model::Instance;
use crate::NUM_CLASSES;

/// Directory holding the official XML files; unset means fixture-only mode.
pub const DATA_DIR_ENV: &str = "IAN_SEMEVAL_DIR";

pub const LABEL_NAMES: [&str; NUM_CLASSES] = ["positive", "neutral", "negative"];

pub fn label_name(label: usize) -> &'static str {
    LABEL_NAMES.get(label).copied().unwrap_or("?")
}

/// Class index of a polarity string; `None` for `conflict` and anything
/// unrecognized.
pub fn parse_label(s: &str) -> Option<usize> {
    LABEL_NAMES.iter().position(|&n| n.eq_ignore_ascii_case(s.trim()))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AspectTerm {
    pub term: String,
    pub from: usize,
    pub to: usize,
    pub polarity: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawReview {
    pub id: String,
    pub text: String,
    pub terms: Vec<AspectTerm>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ParseReport {
    pub sentences: usize,
    /// Sentences without aspect terms, which are skipped.
    pub without_terms: usize,
    pub terms: usize,
    /// Terms whose offsets did not match and were moved to the nearest
    /// occurrence of the term text.
    pub realigned: usize,
    /// Terms whose text does not occur in the sentence at all.
    pub unaligned: usize,
}

fn normalize_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn char_slice(chars: &[char], from: usize, to: usize) -> Option<String> {
    (from <= to && to <= chars.len()).then(|| chars[from..to].iter().collect())
}

/// Start positions (in chars) where `needle` occurs in `hay`.
fn occurrences(hay: &[char], needle: &[char], fold_case: bool) -> Vec<usize> {
    if needle.is_empty() || needle.len() > hay.len() {
        return Vec::new();
    }
    let eq = |a: char, b: char| {
        if fold_case {
            a.to_lowercase().eq(b.to_lowercase())
        } else {
            a == b
        }
    };
    (0..=hay.len() - needle.len()).filter(|&s| needle.iter().enumerate().all(|(k, &c)| eq(hay[s + k], c))).collect()
}

/// Checks a term's offsets and, when they disagree with the text, moves
/// them to the occurrence nearest the original `from`. Returns
/// `Some(true)` if realigned, `None` if the term cannot be found.
fn realign(text: &[char], term: &mut AspectTerm) -> Option<bool> {
    if char_slice(text, term.from, term.to).is_some_and(|s| normalize_ws(&s) == normalize_ws(&term.term)) {
        return Some(false);
    }
    let needle: Vec<char> = term.term.chars().collect();
    let mut hits = occurrences(text, &needle, false);
    if hits.is_empty() {
        hits = occurrences(text, &needle, true);
    }
    let best = hits.into_iter().min_by_key(|&s| (s as isize - term.from as isize).unsigned_abs())?;
    term.from = best;
    term.to = best + needle.len();
    Some(true)
}

/// Parses an XML document; `origin` names it in errors and warnings.
pub fn parse_semeval_str(xml: &str, origin: &str) -> Result<(Vec<RawReview>, ParseReport)> {
    let opts = roxmltree::ParsingOptions { allow_dtd: true, ..Default::default() };
    let doc =
        roxmltree::Document::parse_with_options(xml, opts).map_err(|e| Error::Xml { path: origin.to_string(), msg: e.to_string() })?;
    let at = |node: roxmltree::Node, msg: String| Error::Xml {
        path: origin.to_string(),
        msg: format!("{} at {}", msg, doc.text_pos_at(node.range().start)),
    };

    let mut report = ParseReport::default();
    let mut reviews = Vec::new();
    for sentence in doc.descendants().filter(|n| n.has_tag_name("sentence")) {
        report.sentences += 1;
        let id = sentence.attribute("id").unwrap_or_default().to_string();
        let text: String = sentence
            .children()
            .find(|n| n.has_tag_name("text"))
            .ok_or_else(|| at(sentence, format!("sentence {id:?} has no <text>")))?
            .descendants()
            .filter(|n| n.is_text())
            .filter_map(|n| n.text())
            .collect();
        let chars: Vec<char> = text.chars().collect();

        let mut terms = Vec::new();
        for node in sentence.descendants().filter(|n| n.has_tag_name("aspectTerm")) {
            let attr = |name: &str| node.attribute(name).ok_or_else(|| at(node, format!("aspectTerm missing {name:?}")));
            let offset = |name: &str| -> Result<usize> {
                let raw = attr(name)?;
                raw.trim().parse().map_err(|_| at(node, format!("bad {name} offset {raw:?}")))
            };
            let mut term = AspectTerm {
                term: attr("term")?.to_string(),
                from: offset("from")?,
                to: offset("to")?,
                polarity: node.attribute("polarity").unwrap_or_default().to_string(),
            };
            match realign(&chars, &mut term) {
                Some(false) => {}
                Some(true) => {
                    log::warn!("{origin}: sentence {id}: offsets of {:?} realigned to {}..{}", term.term, term.from, term.to);
                    report.realigned += 1;
                }
                None => {
                    log::warn!("{origin}: sentence {id}: term {:?} not found in text", term.term);
                    report.unaligned += 1;
                }
            }
            terms.push(term);
        }
        report.terms += terms.len();
        if terms.is_empty() {
            report.without_terms += 1;
            continue;
        }
        reviews.push(RawReview { id, text, terms });
    }
    Ok((reviews, report))
}

pub fn parse_semeval_xml(path: &Path) -> Result<(Vec<RawReview>, ParseReport)> {
    let xml = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_semeval_str(&xml, &path.display().to_string())
}

/// A token with its character span `[start, end)` in the source text.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

fn is_punct(c: char) -> bool {
    c.is_ascii_punctuation() || matches!(c, '“' | '”' | '‘' | '’' | '–' | '—' | '…' | '«' | '»' | '¡' | '¿' | '·' | '′' | '″')
}

fn is_word_char(c: char) -> bool {
    !c.is_whitespace() && !is_punct(c)
}

/// Lowercases and splits on whitespace. Punctuation becomes a token of its
/// own unless a word character sits on both sides of it, so `built-in`,
/// `don't` and `2.5` stay whole while `bad,` splits into `bad` and `,`.
pub fn tokenize_with_spans(text: &str) -> Vec<Token> {
    let chars: Vec<char> = text.chars().collect();
    let n = chars.len();
    let inner = |j: usize| j > 0 && j + 1 < n && is_word_char(chars[j - 1]) && is_word_char(chars[j + 1]);
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < n {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if is_punct(c) && !inner(i) {
            i += 1;
        } else {
            while i < n && !chars[i].is_whitespace() && (!is_punct(chars[i]) || inner(i)) {
                i += 1;
            }
        }
        let raw: String = chars[start..i].iter().collect();
        tokens.push(Token { text: raw.to_lowercase(), start, end: i });
    }
    tokens
}

pub fn tokenize(text: &str) -> Vec<String> {
    tokenize_with_spans(text).into_iter().map(|t| t.text).collect()
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BuildReport {
    pub instances: usize,
    pub conflict: usize,
    /// Terms with a missing or unrecognized polarity.
    pub unlabeled: usize,
    pub located_by_offset: usize,
    pub located_by_search: usize,
    /// Ids of instances whose target could not be found in the context.
    pub dropped: Vec<String>,
}

/// Token range covering the chars `[from, to)` when it spells `target`.
fn span_from_offsets(tokens: &[Token], from: usize, to: usize, target: &[String]) -> Option<(usize, usize)> {
    let covered: Vec<usize> = (0..tokens.len()).filter(|&k| tokens[k].start < to && tokens[k].end > from).collect();
    let (&s, &e) = (covered.first()?, covered.last()?);
    let words: Vec<&str> = tokens[s..=e].iter().map(|t| t.text.as_str()).collect();
    (words == target).then_some((s, e + 1))
}

fn find_tokens(context: &[String], target: &[String]) -> Option<usize> {
    if target.is_empty() || target.len() > context.len() {
        return None;
    }
    context.windows(target.len()).position(|w| w == target)
}

/// One instance per (sentence, labeled aspect term). Tokens missing from
/// `vocab` are encoded as PAD.
pub fn build_instances(reviews: &[RawReview], vocab: &Vocab) -> (Vec<Instance>, BuildReport) {
    let mut report = BuildReport::default();
    let mut out = Vec::new();
    for review in reviews {
        let tokens = tokenize_with_spans(&review.text);
        let words: Vec<String> = tokens.iter().map(|t| t.text.clone()).collect();
        let context: Vec<usize> = words.iter().map(|w| vocab.index_or_pad(w)).collect();
        for (k, term) in review.terms.iter().enumerate() {
            let id = format!("{}#{k}", review.id);
            if term.polarity.trim().eq_ignore_ascii_case("conflict") {
                report.conflict += 1;
                continue;
            }
            let Some(label) = parse_label(&term.polarity) else {
                log::warn!("instance {id}: unrecognized polarity {:?}", term.polarity);
                report.unlabeled += 1;
                continue;
            };
            let target_words = tokenize(&term.term);
            let span = match span_from_offsets(&tokens, term.from, term.to, &target_words) {
                Some(s) => {
                    report.located_by_offset += 1;
                    Some(s)
                }
                None => find_tokens(&words, &target_words).map(|s| {
                    log::warn!("instance {id}: offsets of {:?} do not match token boundaries; using first occurrence", term.term);
                    report.located_by_search += 1;
                    (s, s + target_words.len())
                }),
            };
            let Some(span) = span else {
                log::warn!("instance {id}: target {:?} not found in sentence, dropped", term.term);
                report.dropped.push(id);
                continue;
            };
            out.push(Instance {
                id,
                context: context.clone(),
                target: target_words.iter().map(|w| vocab.index_or_pad(w)).collect(),
                span: Some(span),
                label: Some(label),
            });
        }
    }
    report.instances = out.len();
    (out, report)
}

/// Every sentence and term text of `reviews`, tokenized, for vocabulary
/// construction.
pub fn corpus_tokens(reviews: &[RawReview]) -> Vec<Vec<String>> {
    let mut docs = Vec::new();
    for r in reviews {
        docs.push(tokenize(&r.text));
        for t in &r.terms {
            docs.push(tokenize(&t.term));
        }
    }
    docs
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Category {
    Restaurants,
    Laptops,
}

impl Category {
    pub const ALL: [Category; 2] = [Category::Restaurants, Category::Laptops];

    pub fn name(self) -> &'static str {
        match self {
            Category::Restaurants => "restaurants",
            Category::Laptops => "laptops",
        }
    }

    fn file_stem(self) -> &'static str {
        match self {
            Category::Restaurants => "restaurant",
            Category::Laptops => "laptop",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Category {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "restaurants" | "restaurant" | "rest" => Ok(Category::Restaurants),
            "laptops" | "laptop" => Ok(Category::Laptops),
            other => Err(Error::Invalid(format!("unknown category {other:?} (expected restaurants or laptops)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Bundled miniature files in the official schema.
pub fn fixture_xml(category: Category, split: Split) -> &'static str {
    match (category, split) {
        (Category::Restaurants, Split::Train) => include_str!("../fixtures/restaurants_train.xml"),
        (Category::Restaurants, Split::Test) => include_str!("../fixtures/restaurants_test.xml"),
        (Category::Laptops, Split::Train) => include_str!("../fixtures/laptops_train.xml"),
        (Category::Laptops, Split::Test) => include_str!("../fixtures/laptops_test.xml"),
    }
}

/// Finds the XML file for `category`/`split` in `dir` by case-insensitive
/// name matching (`Restaurants_Train_v2.xml`, `Laptops_Test_Gold.xml`,
/// ...). Test files with `gold` in the name win; otherwise the
/// lexicographically last candidate is taken, which prefers `_v2`.
pub fn locate_file(dir: &Path, category: Category, split: Split) -> Result<PathBuf> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut candidates: Vec<(bool, String, PathBuf)> = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()).map(str::to_ascii_lowercase) else {
            continue;
        };
        if name.ends_with(".xml") && name.contains(category.file_stem()) && name.contains(split.name()) {
            candidates.push((name.contains("gold"), name, path));
        }
    }
    candidates.sort();
    candidates.pop().map(|(_, _, p)| p).ok_or_else(|| {
        Error::Invalid(format!(
            "no {} {} XML file in {} (expected a name containing {:?} and {:?})",
            category,
            split,
            dir.display(),
            category.file_stem(),
            split.name()
        ))
    })
}

/// Where the XML comes from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Source {
    Dir(PathBuf),
    /// Explicit train and test files.
    Files {
        train: PathBuf,
        test: PathBuf,
    },
    Fixture,
}

impl Source {
    /// `Dir` from [`DATA_DIR_ENV`] when set and non-empty, else `Fixture`.
    pub fn from_env() -> Source {
        match std::env::var_os(DATA_DIR_ENV) {
            Some(v) if !v.is_empty() => Source::Dir(PathBuf::from(v)),
            _ => Source::Fixture,
        }
    }

    pub fn is_fixture(&self) -> bool {
        matches!(self, Source::Fixture)
    }

    pub fn load(&self, category: Category, split: Split) -> Result<(Vec<RawReview>, ParseReport)> {
        match self {
            Source::Fixture => parse_semeval_str(fixture_xml(category, split), &format!("fixture:{category}_{split}")),
            Source::Dir(dir) => parse_semeval_xml(&locate_file(dir, category, split)?),
            Source::Files { train, test } => parse_semeval_xml(match split {
                Split::Train => train,
                Split::Test => test,
            }),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub category: String,
    pub split: Split,
    pub instances: Vec<Instance>,
    pub parse_report: ParseReport,
    pub build_report: BuildReport,
}

impl Dataset {
    pub fn name(&self) -> String {
        format!("{}-{}", self.category, self.split)
    }

    pub fn stats(&self) -> DatasetStats {
        dataset_stats(&self.instances)
    }
}

/// A train/test pair sharing one vocabulary.
#[derive(Clone, Debug, PartialEq)]
pub struct Corpus {
    pub vocab: Vocab,
    pub train: Dataset,
    pub test: Dataset,
}

/// Loads both splits of `category`. With `transductive` the vocabulary
/// covers train and test text, otherwise train only (test-only words then
/// encode as PAD).
pub fn load_corpus(source: &Source, category: Category, transductive: bool) -> Result<Corpus> {
    let (train_reviews, train_parse) = source.load(category, Split::Train)?;
    let (test_reviews, test_parse) = source.load(category, Split::Test)?;
    let mut docs = corpus_tokens(&train_reviews);
    if transductive {
        docs.extend(corpus_tokens(&test_reviews));
    }
    let vocab = Vocab::build(&docs)?;
    let make = |reviews: &[RawReview], split, parse_report| {
        let (instances, build_report) = build_instances(reviews, &vocab);
        Dataset { category: category.name().to_string(), split, instances, parse_report, build_report }
    };
    let train = make(&train_reviews, Split::Train, train_parse);
    let test = make(&test_reviews, Split::Test, test_parse);
    Ok(Corpus { vocab, train, test })
}

pub const LENGTH_BINS: [&str; 6] = ["1", "2", "3", "4", "5", ">5"];

/// Polarity counts and target-length histogram.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DatasetStats {
    /// Indexed by class: positive, neutral, negative.
    pub polarity: [usize; NUM_CLASSES],
    /// Bins of [`LENGTH_BINS`].
    pub lengths: [usize; 6],
}

impl DatasetStats {
    pub fn total(&self) -> usize {
        self.lengths.iter().sum()
    }

    pub fn length_ratio(&self, bin: usize) -> f64 {
        match self.total() {
            0 => 0.0,
            n => self.lengths[bin] as f64 / n as f64,
        }
    }
}

pub fn dataset_stats(instances: &[Instance]) -> DatasetStats {
    let mut s = DatasetStats::default();
    for inst in instances {
        if let Some(l) = inst.label.filter(|&l| l < NUM_CLASSES) {
            s.polarity[l] += 1;
        }
        s.lengths[inst.target.len().clamp(1, 6) - 1] += 1;
    }
    s
}

fn render_table(header: &[String], rows: &[Vec<String>]) -> String {
    let widths: Vec<usize> =
        (0..header.len()).map(|c| rows.iter().map(|r| r[c].chars().count()).fold(header[c].chars().count(), usize::max)).collect();
    let line = |r: &[String]| -> String {
        let cells: Vec<String> = r
            .iter()
            .enumerate()
            .map(|(c, cell)| {
                let pad = " ".repeat(widths[c] - cell.chars().count());
                if c == 0 {
                    format!("{cell}{pad}")
                } else {
                    format!("{pad}{cell}")
                }
            })
            .collect();
        cells.join("  ").trim_end().to_string()
    };
    let mut out = line(header);
    out.push('\n');
    out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
    out.push('\n');
    for r in rows {
        out.push_str(&line(r));
        out.push('\n');
    }
    out
}

/// Polarity table followed by the target-length table (`count/ratio`).
pub fn render_stats(rows: &[(String, DatasetStats)]) -> String {
    let mut header: Vec<String> = vec!["dataset".into()];
    header.extend(LABEL_NAMES.iter().map(|s| s.to_string()));
    header.push("total".into());
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|(name, s)| {
            let mut r = vec![name.clone()];
            r.extend(s.polarity.iter().map(|c| c.to_string()));
            r.push(s.total().to_string());
            r
        })
        .collect();
    let mut out = render_table(&header, &body);
    out.push('\n');

    let mut header: Vec<String> = vec!["target length".into()];
    header.extend(LENGTH_BINS.iter().map(|s| s.to_string()));
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|(name, s)| {
            let mut r = vec![name.clone()];
            r.extend((0..6).map(|b| format!("{}/{:.4}", s.lengths[b], s.length_ratio(b))));
            r
        })
        .collect();
    out.push_str(&render_table(&header, &body));
    out
}

pub fn dump_instances(instances: &[Instance], vocab: &Vocab) -> String {
    let words = |ids: &[usize]| ids.iter().map(|&i| vocab.token(i).unwrap_or("?")).collect::<Vec<_>>().join(" ");
    let mut out = String::new();
    for inst in instances {
        let label = inst.label.map_or("-", label_name);
        let span = inst.span.map_or("-".to_string(), |(s, e)| format!("{s}:{e}"));
        out.push_str(&format!("{}\t{}\t{}\t{}\t{}\n", inst.id, label, span, words(&inst.context), words(&inst.target)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{prop_assert_eq, proptest};

    fn words(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn tokenizer_examples() {
        assert_eq!(tokenize("The pizza is not bad,"), words(&["the", "pizza", "is", "not", "bad", ","]));
        assert!(tokenize("").is_empty());
        assert!(tokenize("  \t\n").is_empty());
        assert_eq!(tokenize("Built-in  don't 2.5GHz"), words(&["built-in", "don't", "2.5ghz"]));
        assert_eq!(tokenize("(SSD)!"), words(&["(", "ssd", ")", "!"]));
        assert_eq!(tokenize("a--b"), words(&["a", "-", "-", "b"]));
        assert_eq!(tokenize("Crème brûlée."), words(&["crème", "brûlée", "."]));
    }

    #[test]
    fn case_study_sentence_token_count() {
        let t = tokenize("the fish is fresh but the variety of fish is noting out of ordinary.");
        assert_eq!(t.len(), 15);
        assert_eq!(t.last().map(String::as_str), Some("."));
    }

    #[test]
    fn spans_are_char_offsets() {
        let t = tokenize_with_spans("é, ab");
        assert_eq!(
            t,
            vec![
                Token { text: "é".into(), start: 0, end: 1 },
                Token { text: ",".into(), start: 1, end: 2 },
                Token { text: "ab".into(), start: 3, end: 5 },
            ]
        );
    }

    #[test]
    fn labels() {
        assert_eq!(parse_label("positive"), Some(0));
        assert_eq!(parse_label("neutral"), Some(1));
        assert_eq!(parse_label("Negative"), Some(2));
        assert_eq!(parse_label("conflict"), None);
        assert_eq!(label_name(2), "negative");
    }

    const ONE: &str = r#"<sentences>
  <sentence id="s1">
    <text>Fish &amp; chips were great but the service was slow.</text>
    <aspectTerms>
      <aspectTerm term="Fish &amp; chips" polarity="positive" from="0" to="12"/>
      <aspectTerm term="service" polarity="negative" from="32" to="39"/>
    </aspectTerms>
  </sentence>
  <sentence id="s2"><text>Nothing here.</text></sentence>
</sentences>"#;

    #[test]
    fn parses_one_sentence_with_two_terms() {
        let (reviews, report) = parse_semeval_str(ONE, "inline").unwrap();
        assert_eq!(reviews.len(), 1);
        assert_eq!(reviews[0].text, "Fish & chips were great but the service was slow.");
        assert_eq!(reviews[0].terms.len(), 2);
        assert_eq!(reviews[0].terms[0].term, "Fish & chips");
        assert_eq!((reviews[0].terms[1].from, reviews[0].terms[1].to), (32, 39));
        assert_eq!(report, ParseReport { sentences: 2, without_terms: 1, terms: 2, realigned: 0, unaligned: 0 });
    }

    #[test]
    fn malformed_xml_reports_location() {
        let err = parse_semeval_str("<sentences><sentence id=\"1\"><text>x</sentence>", "bad.xml").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("bad.xml") && msg.contains("1:36"), "{msg}");
        let err = parse_semeval_str(r#"<sentences><sentence id="1"><text>ab</text><aspectTerms><aspectTerm term="ab" polarity="positive" from="x" to="2"/></aspectTerms></sentence></sentences>"#, "o").unwrap_err();
        assert!(err.to_string().contains("from"));
    }

    #[test]
    fn misaligned_offsets_move_to_nearest_occurrence() {
        let xml = r#"<sentences><sentence id="1"><text>a cat and a cat</text><aspectTerms>
            <aspectTerm term="cat" polarity="neutral" from="11" to="14"/>
            <aspectTerm term="dog" polarity="neutral" from="0" to="3"/>
        </aspectTerms></sentence></sentences>"#;
        let (reviews, report) = parse_semeval_str(xml, "o").unwrap();
        assert_eq!((reviews[0].terms[0].from, reviews[0].terms[0].to), (12, 15));
        assert_eq!((report.realigned, report.unaligned), (1, 1));

        let vocab = Vocab::build(&corpus_tokens(&reviews)).unwrap();
        let (instances, build) = build_instances(&reviews, &vocab);
        assert_eq!(instances.len(), 1);
        assert_eq!(instances[0].span, Some((4, 5)));
        assert_eq!(build.dropped, vec!["1#1".to_string()]);
    }

    #[test]
    fn offsets_inside_a_token_fall_back_to_search() {
        let reviews = vec![RawReview {
            id: "x".into(),
            text: "great pizza-place pizza".into(),
            terms: vec![AspectTerm { term: "pizza".into(), from: 6, to: 11, polarity: "positive".into() }],
        }];
        let vocab = Vocab::build(&corpus_tokens(&reviews)).unwrap();
        let (instances, report) = build_instances(&reviews, &vocab);
        assert_eq!(instances[0].span, Some((2, 3)));
        assert_eq!((report.located_by_offset, report.located_by_search), (0, 1));
    }

    #[test]
    fn three_targets_share_one_context() {
        let (reviews, _) = parse_semeval_str(fixture_xml(Category::Restaurants, Split::Train), "f").unwrap();
        let vocab = Vocab::build(&corpus_tokens(&reviews)).unwrap();
        let (instances, _) = build_instances(&reviews[..1], &vocab);
        assert_eq!(instances.len(), 3);
        assert!(instances.iter().all(|i| i.context == instances[0].context));
        let spans: Vec<_> = instances.iter().map(|i| i.span.unwrap()).collect();
        assert_eq!(spans, [(1, 2), (3, 4), (5, 7)]);
    }

    #[test]
    fn repeated_word_uses_offsets() {
        let (reviews, _) = parse_semeval_str(fixture_xml(Category::Restaurants, Split::Train), "f").unwrap();
        let vocab = Vocab::build(&corpus_tokens(&reviews)).unwrap();
        let (instances, _) = build_instances(&reviews[1..2], &vocab);
        assert_eq!(instances[0].span, Some((1, 2)));
        assert_eq!(instances[1].span, Some((6, 9)));
        assert_eq!(instances[1].target.len(), 3);
    }

    #[test]
    fn empty_dataset_stats_are_zero() {
        let s = dataset_stats(&[]);
        assert_eq!(s, DatasetStats::default());
        assert_eq!(s.length_ratio(0), 0.0);
    }

    #[test]
    fn locate_file_prefers_gold_and_v2() {
        let dir = tempfile::tempdir().unwrap();
        for name in [
            "Restaurants_Train.xml",
            "Restaurants_Train_v2.xml",
            "Restaurants_Test_Gold.xml",
            "Restaurants_Test_Data_phaseB.xml",
            "notes.txt",
        ] {
            std::fs::write(dir.path().join(name), "").unwrap();
        }
        let train = locate_file(dir.path(), Category::Restaurants, Split::Train).unwrap();
        assert!(train.ends_with("Restaurants_Train_v2.xml"));
        let test = locate_file(dir.path(), Category::Restaurants, Split::Test).unwrap();
        assert!(test.ends_with("Restaurants_Test_Gold.xml"));
        assert!(locate_file(dir.path(), Category::Laptops, Split::Train).is_err());
    }

    #[test]
    fn dump_format() {
        let (reviews, _) = parse_semeval_str(ONE, "inline").unwrap();
        let vocab = Vocab::build(&corpus_tokens(&reviews)).unwrap();
        let (instances, _) = build_instances(&reviews, &vocab);
        let dump = dump_instances(&instances, &vocab);
        let lines: Vec<&str> = dump.lines().collect();
        assert_eq!(lines[0], "s1#0\tpositive\t0:3\tfish & chips were great but the service was slow .\tfish & chips");
        assert_eq!(lines[1], "s1#1\tnegative\t7:8\tfish & chips were great but the service was slow .\tservice");
    }

    proptest! {
        #[test]
        fn tokenization_is_idempotent(s in "\\PC{0,40}") {
            let once = tokenize(&s);
            prop_assert_eq!(tokenize(&once.join(" ")), once);
        }

        #[test]
        fn spans_cover_token_text(s in "[a-zA-Z0-9 ,.!'\\-]{0,40}") {
            let chars: Vec<char> = s.chars().collect();
            for t in tokenize_with_spans(&s) {
                let raw: String = chars[t.start..t.end].iter().collect();
                prop_assert_eq!(raw.to_lowercase(), t.text);
            }
        }
    }
}
