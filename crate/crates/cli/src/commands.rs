use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use svi_core::corpus::{generate_lda_corpus, write_matrix_csv, write_uci_bow, SyntheticSpec};
use svi_core::eval::top_terms;

use crate::args::{EvalArgs, ModelKind, SweepArgs, SynthArgs, TopicsArgs, TrainArgs};
use crate::error::{io_at, CliError};
use crate::model_file::ModelFile;
use crate::train::{self, evaluate, load_corpus_with, test_set, with_threads};

pub fn train(args: TrainArgs) -> Result<(), CliError> {
    let summary = if args.resume {
        if args.run.batch {
            return Err(CliError::config("--resume applies to stochastic runs only, not --batch"));
        }
        let fixed = args.run.fixed_on_resume();
        if !fixed.is_empty() {
            return Err(CliError::config(format!(
                "a resumed run keeps its configuration; cannot set {}",
                fixed.iter().map(|f| format!("--{f}")).collect::<Vec<_>>().join(", ")
            )));
        }
        let out = args.run.out.ok_or_else(|| CliError::config("--resume needs --out"))?;
        train::resume(&out, args.run.iterations, args.run.threads)?
    } else {
        train::train(&args.run.resolve()?)?
    };
    match summary.final_log_likelihood {
        Some(ll) => println!("iteration {} held-out log likelihood {ll}", summary.iteration),
        None => println!("iteration {}", summary.iteration),
    }
    Ok(())
}

fn cell_name(kappa: f64, batch_size: usize) -> String {
    format!("kappa-{kappa}_S-{batch_size}")
}

/// One stochastic run per (κ, S) cell. Cells that fail are recorded in the
/// summary and the sweep moves on.
pub fn sweep(args: SweepArgs) -> Result<(), CliError> {
    if args.run.batch {
        return Err(CliError::config("a sweep varies the stochastic schedule; --batch does not apply"));
    }
    if args.kappas.is_empty() || args.batch_sizes.is_empty() {
        return Err(CliError::config("the grid needs at least one kappa and one batch size"));
    }
    let base = args.run.resolve()?;
    fs::create_dir_all(&base.out).map_err(|e| io_at(&base.out, e))?;
    let summary_path = base.out.join("summary.csv");
    let mut summary = String::from("cell,kappa,batch_size,status,iteration,final_predictive_log_likelihood,wall_clock_seconds\n");
    for &kappa in &args.kappas {
        for &batch_size in &args.batch_sizes {
            let name = cell_name(kappa, batch_size);
            let mut cell = base.clone();
            cell.kappa = kappa;
            cell.batch_size = batch_size;
            cell.out = base.out.join(&name);
            let row = match cell.validate().and_then(|()| train::train(&cell)) {
                Ok(s) => format!(
                    "{name},{kappa},{batch_size},ok,{},{},{}",
                    s.iteration,
                    s.final_log_likelihood.map(|x| x.to_string()).unwrap_or_default(),
                    s.wall_clock_seconds
                ),
                Err(e) => {
                    eprintln!("{name}: {e}");
                    let msg = e.to_string().replace('"', "'");
                    format!("{name},{kappa},{batch_size},\"failed: {msg}\",,,")
                }
            };
            summary.push_str(&row);
            summary.push('\n');
            fs::write(&summary_path, &summary).map_err(|e| io_at(&summary_path, e))?;
        }
    }
    print!("{summary}");
    Ok(())
}

/// CSV of the top terms of every topic, one row per (topic, rank).
pub fn topics(args: TopicsArgs) -> Result<(), CliError> {
    let file = ModelFile::read(&args.model_file)?;
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    let hdp = file.model == ModelKind::Hdp;
    let header = if hdp { "topic,stick_weight,rank,term_index,term,probability" } else { "topic,rank,term_index,term,probability" };
    let fail = |e: io::Error| CliError::io(format!("stdout: {e}"));
    writeln!(out, "{header}").map_err(fail)?;
    for topic in file.ranked_topics()? {
        for (rank, v) in top_terms(&topic.terms, args.top).into_iter().enumerate() {
            let term = &file.vocabulary[v];
            match topic.weight {
                Some(w) => writeln!(out, "{},{w},{rank},{v},{term},{}", topic.index, topic.terms[v]),
                None => writeln!(out, "{},{rank},{v},{term},{}", topic.index, topic.terms[v]),
            }
            .map_err(fail)?;
        }
    }
    out.flush().map_err(fail)
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|e| io_at(path, e))
}

/// Writes `docword.txt`, `vocab.txt`, `truth_topics.csv` and
/// `truth_proportions.csv`; with test documents also `test.docword.txt`
/// and `test_truth_proportions.csv`.
pub fn synth(args: SynthArgs) -> Result<(), CliError> {
    let spec = SyntheticSpec {
        num_topics: args.k,
        num_terms: args.terms,
        num_documents: args.documents + args.test_documents,
        doc_length: args.doc_length,
        alpha: args.alpha,
        eta: args.eta,
        seed: args.seed,
    };
    if args.documents == 0 {
        return Err(CliError::config("--documents must be positive"));
    }
    let (all, truth) = generate_lda_corpus(&spec)?;
    fs::create_dir_all(&args.out).map_err(|e| io_at(&args.out, e))?;
    let path = |name: &str| args.out.join(name);
    let vocab = all.vocabulary().terms().to_vec();
    let topic_labels: Vec<String> = (0..args.k).map(|k| format!("topic{k}")).collect();
    let train = all.slice(0..args.documents);
    write_uci_bow(&train, create(&path("docword.txt"))?, create(&path("vocab.txt"))?)
        .map_err(|e| io_at(&args.out, e))?;
    write_matrix_csv(create(&path("truth_topics.csv"))?, "topic", &vocab, &truth.topics)
        .map_err(|e| io_at(&path("truth_topics.csv"), e))?;
    write_matrix_csv(
        create(&path("truth_proportions.csv"))?,
        "document",
        &topic_labels,
        &truth.proportions[..args.documents],
    )
    .map_err(|e| io_at(&path("truth_proportions.csv"), e))?;
    if args.test_documents > 0 {
        let test = all.slice(args.documents..all.num_documents());
        write_uci_bow(&test, create(&path("test.docword.txt"))?, io::sink()).map_err(|e| io_at(&args.out, e))?;
        write_matrix_csv(
            create(&path("test_truth_proportions.csv"))?,
            "document",
            &topic_labels,
            &truth.proportions[args.documents..],
        )
        .map_err(|e| io_at(&path("test_truth_proportions.csv"), e))?;
    }
    println!("wrote {} training and {} test documents to {}", args.documents, args.test_documents, args.out.display());
    Ok(())
}

/// Score a saved model and print the report as JSON.
pub fn eval(args: EvalArgs) -> Result<(), CliError> {
    let file = ModelFile::read(&args.model_file)?;
    let settings = file.eval;
    let fraction = args.heldout_fraction.unwrap_or(settings.heldout_fraction);
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(CliError::config("heldout-fraction must lie in (0, 1)"));
    }
    if !args.test.is_file() {
        return Err(CliError::config(format!("input file {} does not exist", args.test.display())));
    }
    // the test corpus is read against the model's own vocabulary
    let vocab = file.vocabulary.join("\n");
    let corpus = load_corpus_with(&args.test, vocab.as_bytes())?;
    let test = test_set(&corpus, fraction, args.seed.unwrap_or(settings.split_seed))?;
    let control = svi_core::engine::LocalControl {
        tolerance: args.local_tolerance.unwrap_or(settings.local_tolerance),
        max_sweeps: args.local_max_sweeps.unwrap_or(settings.local_max_sweeps),
    };
    if !(control.tolerance > 0.0) || control.max_sweeps == 0 {
        return Err(CliError::config("local-tolerance and local-max-sweeps must be positive"));
    }
    let model = file.model()?;
    let report = with_threads(args.threads, || evaluate(&model, &file.globals, file.iteration, &test, control))??;
    println!("{}", serde_json::to_string_pretty(&report).map_err(|e| CliError::io(e.to_string()))?);
    Ok(())
}
