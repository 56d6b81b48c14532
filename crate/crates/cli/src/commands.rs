//! Subcommand implementations. Each `cmd_*` writes its report to `out`,
//! prints errors to stderr and returns the process exit status.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use ian_core::checkpoint::{self, Checkpoint};
use ian_core::data::{build_instances, dump_instances, label_name, load_corpus, parse_label, render_stats, tokenize, Split};
use ian_core::embeddings::{load_pretrained, EmbeddingTable, Vocab, OOV_RANGE, PAD};
use ian_core::eval::{compare_variants, evaluate, reports_to_tsv};
use ian_core::gradcheck::{self, GradCheckConfig, GradFn};
use ian_core::model::{forward, predict, Instance, ModelVariant};
use ian_core::numerics::Rng;
use ian_core::training::{backward_full, train_from_scratch};
use ian_core::viz;

use crate::config::RunConfig;

/// Offset mixed into the seed for the random embedding table, so it does
/// not replay the stream used for the network weights.
const EMBEDDING_SEED_OFFSET: u64 = 0x9e37_79b9_7f4a_7c15;

fn finish(result: Result<i32>) -> i32 {
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}

pub fn cmd_stats(cfg: &RunConfig, out: &mut dyn Write) -> i32 {
    finish(stats(cfg, out))
}

fn stats(cfg: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    let source = cfg.source()?;
    if source.is_fixture() {
        writeln!(out, "fixture mode: using the bundled miniature files")?;
    }
    let mut rows = Vec::new();
    let mut notes = Vec::new();
    for category in cfg.categories() {
        let corpus = load_corpus(&source, category, cfg.transductive)?;
        for ds in [&corpus.train, &corpus.test] {
            let p = &ds.parse_report;
            let b = &ds.build_report;
            notes.push(format!(
                "{}: {} sentences ({} without aspect terms), {} terms, {} conflict dropped, {} unlabeled, {} realigned offsets, {} located by search, {} unlocatable",
                ds.name(),
                p.sentences,
                p.without_terms,
                p.terms,
                b.conflict,
                b.unlabeled,
                p.realigned,
                b.located_by_search,
                b.dropped.len()
            ));
            rows.push((ds.name(), ds.stats()));
            if cfg.dump_instances {
                let path = cfg.out_dir.join(format!("{}.instances.tsv", ds.name()));
                write_file(&path, &dump_instances(&ds.instances, &corpus.vocab))?;
                notes.push(format!("wrote {}", path.display()));
            }
        }
    }
    write!(out, "{}", render_stats(&rows))?;
    writeln!(out)?;
    for n in notes {
        writeln!(out, "{n}")?;
    }
    Ok(0)
}

pub fn cmd_train(cfg: &RunConfig, out: &mut dyn Write) -> i32 {
    finish(train(cfg, out))
}

fn train(cfg: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    let source = cfg.source()?;
    let category = cfg.single_category();
    let corpus = load_corpus(&source, category, cfg.transductive)?;
    let variant = cfg.train.model.variant;
    writeln!(
        out,
        "training {variant} on {category}: {} train / {} test instances, vocabulary {}",
        corpus.train.instances.len(),
        corpus.test.instances.len(),
        corpus.vocab.len()
    )?;

    let mut rng = Rng::new(cfg.train.seed.wrapping_add(EMBEDDING_SEED_OFFSET));
    let table = match &cfg.embeddings {
        Some(path) => {
            let (table, stats) = load_pretrained(path, &corpus.vocab, cfg.embed_dim, cfg.lowercase_embeddings, &mut rng)?;
            writeln!(out, "pretrained vectors: {} found, {} drawn at random", stats.hits, stats.misses)?;
            table
        }
        None => {
            log::warn!("no pretrained embeddings given; all vectors drawn from U(-{OOV_RANGE}, {OOV_RANGE})");
            EmbeddingTable::random(corpus.vocab.len(), cfg.embed_dim, OOV_RANGE, &mut rng)
        }
    };

    let started = Instant::now();
    let outcome = train_from_scratch(table, &corpus.train.instances, &corpus.test.instances, &cfg.train)?;
    let elapsed = started.elapsed();

    create_dir(&cfg.out_dir)?;
    let history_path = cfg.out_dir.join("history.tsv");
    write_file(&history_path, &outcome.history.to_tsv())?;
    let mut ckpt = Checkpoint::new(outcome.params.clone(), corpus.vocab.clone());
    ckpt.meta = cfg.echo();
    let ckpt_path = cfg.checkpoint_path();
    checkpoint::save(&ckpt_path, &ckpt)?;

    let train_report = match outcome.final_train {
        Some(r) => r,
        None => evaluate(&outcome.params, &corpus.train.instances)?,
    };
    writeln!(out, "trained for {} epochs in {:.1}s", outcome.history.epochs.len(), elapsed.as_secs_f64())?;
    if variant == ModelVariant::Majority {
        writeln!(out, "majority label: {}", label_name(outcome.params.majority_label))?;
    }
    writeln!(out, "final train accuracy: {} ({}/{})", train_report.accuracy, train_report.correct, train_report.total)?;
    if !corpus.test.instances.is_empty() {
        let test_report = match outcome.final_test {
            Some(r) => r,
            None => evaluate(&outcome.params, &corpus.test.instances)?,
        };
        if let Some(best) = &outcome.best {
            writeln!(out, "best test accuracy: {} at epoch {}", best.test_acc, best.epoch)?;
        }
        writeln!(out, "final test accuracy: {} ({}/{})", test_report.accuracy, test_report.correct, test_report.total)?;
    }
    writeln!(out, "wrote {} and {}", ckpt_path.display(), history_path.display())?;
    Ok(0)
}

pub fn cmd_eval(cfg: &RunConfig, out: &mut dyn Write) -> i32 {
    finish(eval(cfg, out))
}

fn eval(cfg: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    let ckpt = checkpoint::load(&cfg.checkpoint_path())?;
    let category = cfg.single_category();
    let (reviews, _) = cfg.source()?.load(category, Split::Test)?;
    let (instances, build) = build_instances(&reviews, &ckpt.vocab);
    if !build.dropped.is_empty() {
        log::warn!("{} test instances could not be located and were skipped", build.dropped.len());
    }
    let report = evaluate(&ckpt.params, &instances)?.with_labels(ckpt.params.variant.name(), category.name());
    write!(out, "{}", compare_variants(std::slice::from_ref(&report)))?;
    writeln!(out, "test accuracy: {} ({}/{})", report.accuracy, report.correct, report.total)?;
    writeln!(out, "confusion (rows gold, columns predicted: positive neutral negative)")?;
    for (k, row) in report.confusion.iter().enumerate() {
        writeln!(out, "  {:<8} {:>6} {:>6} {:>6}", label_name(k), row[0], row[1], row[2])?;
    }
    write_file(&cfg.out_dir.join("eval.tsv"), &reports_to_tsv(&[report]))?;
    Ok(0)
}

/// Tokenizes a sentence/target pair against a trained vocabulary. Tokens
/// the model has never seen are encoded as PAD and ignored.
pub fn encode_pair(vocab: &Vocab, id: &str, sentence: &str, target: &str, span: Option<(usize, usize)>) -> Result<Instance> {
    let words = tokenize(sentence);
    let (start, end) = match span {
        Some((s, e)) => {
            if e > words.len() {
                bail!("span {s}:{e} is outside the {} tokens of the sentence", words.len());
            }
            (s, e)
        }
        None => {
            let target_words = tokenize(target);
            if target_words.is_empty() {
                bail!("empty target");
            }
            let pos = words.windows(target_words.len()).position(|w| w == target_words.as_slice()).ok_or_else(|| {
                anyhow!("target {target:?} not found in the tokenized sentence; pass --span start:end to place it explicitly")
            })?;
            (pos, pos + target_words.len())
        }
    };
    let target_words = if span.is_some() && target.trim().is_empty() { words[start..end].to_vec() } else { tokenize(target) };
    let context: Vec<usize> = words.iter().map(|w| vocab.index_or_pad(w)).collect();
    let target_ids: Vec<usize> = target_words.iter().map(|w| vocab.index_or_pad(w)).collect();
    if target_ids.iter().all(|&t| t == PAD) {
        bail!("no token of target {target:?} is in the model vocabulary");
    }
    Ok(Instance { id: id.to_string(), context, target: target_ids, span: Some((start, end)), label: None })
}

pub fn cmd_predict(cfg: &RunConfig, out: &mut dyn Write) -> i32 {
    finish(predict_cmd(cfg, out))
}

fn predict_cmd(cfg: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    let input_path = cfg.input.as_ref().ok_or_else(|| anyhow!("predict needs --input"))?;
    let ckpt = checkpoint::load(&cfg.checkpoint_path())?;
    let input = fs::read_to_string(input_path).with_context(|| format!("cannot read {}", input_path.display()))?;

    let mut lines = String::new();
    let (mut failed, mut scored, mut correct) = (0usize, 0usize, 0usize);
    for (k, line) in input.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let result = (|| -> Result<(usize, Option<usize>)> {
            if fields.len() < 2 || fields.len() > 3 {
                bail!("expected `sentence<TAB>target[<TAB>gold]`, found {} fields", fields.len());
            }
            let gold = match fields.get(2).map(|g| g.trim()) {
                None | Some("") => None,
                Some(g) => Some(
                    parse_label(g)
                        .or_else(|| g.parse().ok().filter(|&l: &usize| l < 3))
                        .ok_or_else(|| anyhow!("unknown gold label {g:?}"))?,
                ),
            };
            let inst = encode_pair(&ckpt.vocab, &format!("line{}", k + 1), fields[0], fields[1], None)?;
            Ok((predict(&ckpt.params, &inst)?, gold))
        })();
        match result {
            Ok((pred, gold)) => {
                lines.push_str(label_name(pred));
                if let Some(g) = gold {
                    lines.push('\t');
                    lines.push_str(label_name(g));
                    scored += 1;
                    correct += usize::from(g == pred);
                }
                lines.push('\n');
            }
            Err(e) => {
                eprintln!("warning: {}:{}: {e:#}", input_path.display(), k + 1);
                lines.push_str("-\n");
                failed += 1;
            }
        }
    }
    match &cfg.output {
        Some(path) => write_file(path, &lines)?,
        None => out.write_all(lines.as_bytes())?,
    }
    if scored > 0 {
        eprintln!("accuracy on lines with gold labels: {} ({correct}/{scored})", correct as f64 / scored as f64);
    }
    if failed > 0 {
        eprintln!("{failed} line(s) could not be processed");
        return Ok(1);
    }
    Ok(0)
}

pub fn cmd_gradcheck(cfg: &RunConfig, out: &mut dyn Write) -> i32 {
    cmd_gradcheck_with(cfg, out, &backward_full)
}

/// [`cmd_gradcheck`] against an arbitrary gradient routine.
pub fn cmd_gradcheck_with(cfg: &RunConfig, out: &mut dyn Write, grad_fn: &GradFn<'_>) -> i32 {
    finish(gradcheck_cmd(cfg, out, grad_fn))
}

fn gradcheck_cmd(cfg: &RunConfig, out: &mut dyn Write, grad_fn: &GradFn<'_>) -> Result<i32> {
    let variants: Vec<ModelVariant> = if cfg.all_variants { ModelVariant::ALL.to_vec() } else { vec![cfg.train.model.variant] };
    let started = Instant::now();
    let mut failed = false;
    writeln!(out, "{:<15} {:>3}  {:<11} {:>7}  {:>12}  worst coordinate", "variant", "dim", "group", "checked", "max rel err")?;
    for &variant in &variants {
        for &dim in &cfg.gradcheck_dims {
            let gc = GradCheckConfig {
                variant,
                embed_dim: dim,
                hidden_dim: dim,
                context_len: cfg.context_len,
                target_len: cfg.target_len,
                seed: cfg.gradcheck_seed,
                tie_attention: cfg.train.model.tie_attention,
                tie_lstm: cfg.train.model.tie_lstm,
                tolerance: cfg.tolerance,
                ..GradCheckConfig::default()
            };
            let reports = gradcheck::run_with(&gc, grad_fn)?;
            if reports.is_empty() {
                writeln!(out, "{:<15} {:>3}  (no parameters)", variant.name(), dim)?;
            }
            for r in &reports {
                let coord = r.worst.as_ref().map_or("-".to_string(), |c| format!("{}[{}]", c.slot, c.index));
                let mark = if r.passed() { "" } else { "  FAIL" };
                writeln!(
                    out,
                    "{:<15} {:>3}  {:<11} {:>7}  {:>12.3e}  {coord}{mark}",
                    variant.name(),
                    dim,
                    r.group,
                    r.checked,
                    r.worst_rel_error()
                )?;
                for c in r.failures.iter().take(10) {
                    let note = if c.below_resolution() { "  (below finite-difference resolution)" } else { "" };
                    writeln!(
                        out,
                        "    {}[{}]: analytic {} numeric {} rel {:.3e}{note}",
                        c.slot, c.index, c.analytic, c.numeric, c.rel_error
                    )?;
                }
                if r.failures.len() > 10 {
                    writeln!(out, "    ... {} more", r.failures.len() - 10)?;
                }
                failed |= !r.passed();
            }
        }
    }
    writeln!(out, "tolerance {:e}, elapsed {:.2}s", cfg.tolerance, started.elapsed().as_secs_f64())?;
    if failed {
        writeln!(out, "gradient check FAILED")?;
        return Ok(1);
    }
    writeln!(out, "gradient check passed")?;
    Ok(0)
}

pub fn cmd_attention_viz(cfg: &RunConfig, out: &mut dyn Write) -> i32 {
    finish(viz_cmd(cfg, out))
}

fn viz_cmd(cfg: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    let sentence = cfg.sentence.as_deref().ok_or_else(|| anyhow!("viz needs --sentence"))?;
    let target = cfg.target.as_deref().unwrap_or("");
    if target.trim().is_empty() && cfg.span.is_none() {
        bail!("viz needs --target or --span");
    }
    let ckpt = checkpoint::load(&cfg.checkpoint_path())?;
    let inst = encode_pair(&ckpt.vocab, "viz", sentence, target, cfg.span)?;
    let trace = forward(&ckpt.params, &inst, None)?;
    let view = viz::attention_view(&trace, &ckpt.vocab)?;

    let svg = cfg.out_dir.join("attention.svg");
    let html = cfg.out_dir.join("attention.html");
    let txt = cfg.out_dir.join("attention.txt");
    let dump = viz::weights_text(&view);
    write_file(&svg, &viz::render_svg(&view))?;
    write_file(&html, &viz::render_html(&view, &format!("{target} | {sentence}")))?;
    write_file(&txt, &dump)?;
    writeln!(out, "predicted: {}", label_name(view.label))?;
    write!(out, "{dump}")?;
    writeln!(out, "wrote {}, {} and {}", svg.display(), html.display(), txt.display())?;
    Ok(0)
}
