//! Command-line interface.

use std::io::Write;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use conceptrank::eval::{Judgments, ParamGrid, SearchMode};
use conceptrank::experiment::{evaluate, read_topics, tune, ExperimentConfig, Target, UserModel};
use conceptrank::synth::{Fixture, SynthConfig};
use conceptrank::{io, AnnotationStore, Engine, InvertedIndex, KnowledgeBase, Tokenizer, UserFeedback};

use crate::api;
use crate::journal::Journal;
use crate::session::{ServiceConfig, SessionManager};

#[derive(Debug, Parser)]
#[command(name = "conceptrank", version, about = "Concept-feedback retrieval: indexing, search, evaluation and the session API")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct TextArgs {
    /// One stopword per line; replaces the built-in English list.
    #[arg(long, global = true)]
    pub stopwords: Option<PathBuf>,
    /// Apply English stemming to every token.
    #[arg(long, global = true)]
    pub stem: bool,
}

impl TextArgs {
    fn tokenizer(&self) -> anyhow::Result<Tokenizer> {
        let tok = match &self.stopwords {
            Some(p) => Tokenizer::from_stopword_file(p)?,
            None => Tokenizer::default(),
        };
        Ok(tok.with_stemming(self.stem))
    }
}

#[derive(Debug, Args)]
pub struct EngineArgs {
    /// Corpus JSONL: {doc_id, title, body}.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Knowledge-base JSONL: {concept_id, title, article_text, anchors, url}.
    #[arg(long)]
    pub kb: PathBuf,
    /// Annotation JSONL: {doc_id, concept_id, freq}. Computed with the
    /// built-in annotator when omitted.
    #[arg(long)]
    pub annotations: Option<PathBuf>,
    #[command(flatten)]
    pub text: TextArgs,
}

impl EngineArgs {
    fn load(&self) -> anyhow::Result<Engine> {
        Ok(Engine::load(&self.corpus, &self.kb, self.annotations.as_deref(), self.text.tokenizer()?)?)
    }
}

#[derive(Debug, Args, Default)]
pub struct ParamArgs {
    /// Override a scoring parameter, e.g. `--set beta1=0.5`. Names:
    /// alpha1..alpha4, rank_decay, beta1..beta5. Repeatable.
    #[arg(long = "set", value_name = "NAME=VALUE")]
    pub overrides: Vec<String>,
    /// Concepts shown on the slate.
    #[arg(long)]
    pub slate_size: Option<usize>,
}

impl ParamArgs {
    fn config(&self) -> anyhow::Result<ExperimentConfig> {
        let mut config = ExperimentConfig::default();
        for o in &self.overrides {
            let (name, value) = o.split_once('=').with_context(|| format!("expected NAME=VALUE, got {o:?}"))?;
            let value: f64 = value.trim().parse().with_context(|| format!("bad value in {o:?}"))?;
            config.set(name.trim(), value)?;
        }
        if let Some(k) = self.slate_size {
            config.select.slate_size = k;
        }
        config.select.validate()?;
        config.rerank.validate()?;
        Ok(config)
    }
}

#[derive(Debug, Args)]
pub struct JudgedArgs {
    /// Topics JSONL: {query_id, text}.
    #[arg(long)]
    pub topics: PathBuf,
    /// Document judgments, TREC qrels format.
    #[arg(long)]
    pub qrels: PathBuf,
    /// Concept judgments, TREC qrels format.
    #[arg(long)]
    pub concept_qrels: PathBuf,
    /// Flip each simulated selection with this probability.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    /// Number of simulated users averaged per query.
    #[arg(long, default_value_t = 1)]
    pub seeds: u64,
    /// First simulated-user seed; users get seed, seed+1, ...
    #[arg(long, default_value_t = 0)]
    pub user_seed: u64,
}

impl JudgedArgs {
    fn user(&self) -> anyhow::Result<UserModel> {
        if !(0.0..=1.0).contains(&self.noise) {
            bail!("--noise must be in [0, 1]");
        }
        if self.seeds == 0 {
            bail!("--seeds must be at least 1");
        }
        Ok(UserModel { noise: self.noise, seeds: (self.user_seed..self.user_seed + self.seeds).collect() })
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a planted synthetic corpus, KB, topics and judgments.
    GenerateFixture {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        topics: usize,
    },
    /// Index a corpus and print its statistics.
    Ingest {
        #[arg(long)]
        corpus: PathBuf,
        #[command(flatten)]
        text: TextArgs,
    },
    /// Load a knowledge base and print its statistics.
    LoadKb {
        #[arg(long)]
        kb: PathBuf,
        #[command(flatten)]
        text: TextArgs,
    },
    /// Annotate the corpus with KB concepts and write the annotation file.
    Annotate {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        kb: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        text: TextArgs,
    },
    /// BM25 ranking for a query.
    Search {
        query: String,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[command(flatten)]
        engine: EngineArgs,
    },
    /// Concept slate for a query.
    Suggest {
        query: String,
        #[command(flatten)]
        engine: EngineArgs,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Re-rank a query's results with selected concepts.
    Rerank {
        query: String,
        /// Selected concept ids, comma separated.
        #[arg(long, value_delimiter = ',')]
        concepts: Vec<String>,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[command(flatten)]
        engine: EngineArgs,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Baseline versus simulated-feedback evaluation over judged topics.
    Eval {
        #[command(flatten)]
        engine: EngineArgs,
        #[command(flatten)]
        judged: JudgedArgs,
        #[command(flatten)]
        params: ParamArgs,
        /// Print the full evaluation as JSON instead of tables.
        #[arg(long)]
        json: bool,
    },
    /// Cross-validated grid search over scoring parameters.
    Tune {
        #[command(flatten)]
        engine: EngineArgs,
        #[command(flatten)]
        judged: JudgedArgs,
        #[command(flatten)]
        params: ParamArgs,
        /// Grid such as `beta1=0,0.5,1;beta2=0,1`.
        #[arg(long)]
        grid: String,
        #[arg(long, default_value_t = 2)]
        folds: usize,
        /// Seed for the topic-to-fold shuffle.
        #[arg(long)]
        seed: u64,
        /// `map` or `ndcg`.
        #[arg(long, default_value = "map")]
        target: Target,
        /// Coordinate ascent instead of the full grid.
        #[arg(long)]
        greedy: bool,
        #[arg(long, default_value_t = 10)]
        max_rounds: usize,
    },
    /// Serve the session API.
    Serve {
        #[command(flatten)]
        engine: EngineArgs,
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
        /// Append-only session journal, replayed at startup.
        #[arg(long)]
        journal: Option<PathBuf>,
        /// Evict least recently used sessions beyond this many.
        #[arg(long)]
        max_sessions: Option<usize>,
        /// Serve UI assets from this directory.
        #[arg(long)]
        static_dir: Option<PathBuf>,
    },
}

fn judged(args: &JudgedArgs) -> anyhow::Result<(Vec<conceptrank::experiment::Topic>, Judgments, Judgments)> {
    Ok((read_topics(&args.topics)?, Judgments::from_path(&args.qrels)?, Judgments::from_path(&args.concept_qrels)?))
}

pub fn run(cli: Cli, out: &mut dyn Write) -> anyhow::Result<()> {
    match cli.command {
        Command::GenerateFixture { out: dir, seed, topics } => {
            std::fs::create_dir_all(&dir)?;
            let f = Fixture::generate(&SynthConfig { seed, topics, ..SynthConfig::default() })?;
            f.write_to(&dir)?;
            writeln!(out, "wrote {} docs, {} concepts, {} topics to {}", f.docs.len(), f.concepts.len(), f.topics.len(), dir.display())?;
        }
        Command::Ingest { corpus, text } => {
            let index = InvertedIndex::from_path(&corpus, text.tokenizer()?)?;
            writeln!(out, "{}", serde_json::to_string(&index.stats())?)?;
        }
        Command::LoadKb { kb, text } => {
            let kb = KnowledgeBase::from_path(&kb, text.tokenizer()?)?;
            writeln!(out, "{}", serde_json::to_string(&kb.stats())?)?;
        }
        Command::Annotate { corpus, kb, out: path, text } => {
            let tok = text.tokenizer()?;
            let index = InvertedIndex::from_path(&corpus, tok.clone())?;
            let kb = KnowledgeBase::from_path(&kb, tok)?;
            let store = AnnotationStore::annotate_corpus(&index, &kb, index.parallelism());
            let anns = store.annotations(&index, &kb);
            io::write_jsonl_path(&path, &anns)?;
            writeln!(out, "wrote {} annotations to {}", anns.len(), path.display())?;
        }
        Command::Search { query, k, engine } => {
            let e = engine.load()?;
            let ranking = e.search(&e.query("q", query), k);
            io::write_jsonl(&mut *out, &ranking.entries)?;
        }
        Command::Suggest { query, engine, params } => {
            let config = params.config()?;
            let e = engine.load()?;
            let slate = e.suggest(&e.query("q", query), &config.select)?;
            io::write_jsonl(&mut *out, &slate.rows())?;
        }
        Command::Rerank { query, concepts, k, engine, params } => {
            let config = params.config()?;
            let e = engine.load()?;
            let outcome = e.rerank(&e.query("q", query), &UserFeedback::new("q", concepts), &config.rerank)?;
            let rows: Vec<_> = outcome.rows().into_iter().take(k).collect();
            io::write_jsonl(&mut *out, &rows)?;
        }
        Command::Eval { engine, judged: args, params, json } => {
            let mut config = params.config()?;
            config.user = args.user()?;
            let (topics, qrels, cqrels) = judged(&args)?;
            let e = engine.load()?;
            let ev = evaluate(&e, &topics, &qrels, &cqrels, &config)?;
            if json {
                writeln!(out, "{}", serde_json::to_string_pretty(&ev)?)?;
            } else {
                writeln!(out, "baseline (BM25)\n{}", ev.baseline.table())?;
                writeln!(out, "with concept feedback (NDCG scores the slate)\n{}", ev.feedback.table())?;
                writeln!(out, "MAP change: {:+.1}%", 100.0 * ev.map_improvement())?;
                for (name, t) in [("MAP", &ev.map_t_test), ("P@10", &ev.p10_t_test)] {
                    match t {
                        Some(t) => writeln!(out, "paired t-test {name}: t = {:.3}, df = {}, p = {:.4}", t.t, t.df, t.p_value)?,
                        None => writeln!(out, "paired t-test {name}: not enough queries")?,
                    }
                }
            }
        }
        Command::Tune { engine, judged: args, params, grid, folds, seed, target, greedy, max_rounds } => {
            let mut config = params.config()?;
            config.user = args.user()?;
            let grid = ParamGrid::parse(&grid)?;
            let mode = if greedy { SearchMode::Greedy { max_rounds } } else { SearchMode::Exhaustive };
            let (topics, qrels, cqrels) = judged(&args)?;
            let e = engine.load()?;
            let report = tune(&e, &topics, &qrels, &cqrels, &config, &grid, target, mode, folds, seed)?;
            writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
        }
        Command::Serve { engine, params, port, host, journal, max_sessions, static_dir } => {
            let config = params.config()?;
            let e = Arc::new(engine.load()?);
            let mut manager = SessionManager::new(e, ServiceConfig { select: config.select, rerank: config.rerank, max_sessions });
            if let Some(path) = journal {
                manager = manager.with_journal(Journal::open(&path)?)?;
                writeln!(out, "replayed {} sessions from {}", manager.len(), path.display())?;
            }
            let app = api::router(Arc::new(manager), static_dir.as_deref());
            let addr = SocketAddr::new(host, port);
            tokio::runtime::Runtime::new()?.block_on(async {
                let listener = tokio::net::TcpListener::bind(addr).await?;
                writeln!(out, "listening on http://{}", listener.local_addr()?)?;
                out.flush()?;
                axum::serve(listener, app).with_graceful_shutdown(async {
                    let _ = tokio::signal::ctrl_c().await;
                })
                .await?;
                anyhow::Ok(())
            })?;
        }
    }
    Ok(())
}
