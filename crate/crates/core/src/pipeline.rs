//! End-to-end commands: design a DSL from a corpus, check programs against
//! it, evaluate it, inspect filter scores and summarize an artifact.
//!
//! Every command returns its report as text so the binary only has to print
//! it and pick an exit code.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::artifact::{DslArtifact, Provenance};
use crate::checker::{Checker, Diagnostic};
use crate::corpus::{load_corpus_with, CorpusError, Domain, DomainMappingTable, Protocol};
use crate::em::{run_em, EmConfig, EmReport, ScoreMap};
use crate::error::{Error, Result};
use crate::features::{Annotator, StepFeatures};
use crate::filters::{score_all, FilterConfig};
use crate::gateway::{judge_all, judge_questions, Gateway, JudgeSummary, Mode, DEFAULT_MODEL};
use crate::grammar::Grammar;
use crate::lexicon::Lexicons;
use crate::ontology::{build_ontology, evaluate, load_triplets, overlap, MappingReport, Overlap, RelationDictionary};
use crate::program::{parse_program_text, ProtocolProgram};
use crate::semantic::{extract_records, reduce, DpmmConfig, DpmmTrace};
use crate::similarity::LexicalSimilarity;
use crate::utility::{score_utility, FeatureClass, UtilityScore};

pub const ARTIFACT_FILE: &str = "artifact.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MappingConfig {
    pub threshold: f64,
}

impl Default for MappingConfig {
    fn default() -> Self {
        MappingConfig {
            threshold: crate::ontology::DEFAULT_MAPPING_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GatewayConfig {
    pub mode: Mode,
    pub fixtures: PathBuf,
    pub model: String,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        GatewayConfig {
            mode: Mode::Replay,
            fixtures: PathBuf::from("fixtures/judge"),
            model: DEFAULT_MODEL.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub corpus: PathBuf,
    /// Domain recorded in the artifact; defaults to the corpus' most common.
    pub domain: Option<String>,
    pub output_dir: PathBuf,
    /// Directory overriding the bundled lexicons.
    pub lexicon_dir: Option<PathBuf>,
    pub domain_table: Option<PathBuf>,
    pub em: EmConfig,
    pub dpmm: DpmmConfig,
    pub filters: FilterConfig,
    pub mapping: MappingConfig,
    pub gateway: GatewayConfig,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            corpus: PathBuf::from("corpus.jsonl"),
            domain: None,
            output_dir: PathBuf::from("out"),
            lexicon_dir: None,
            domain_table: None,
            em: EmConfig::default(),
            dpmm: DpmmConfig::default(),
            filters: FilterConfig::default(),
            mapping: MappingConfig::default(),
            gateway: GatewayConfig::default(),
        }
    }
}

impl Config {
    /// Reads a TOML file. Relative paths inside it resolve against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Config::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.corpus);
        fix(&mut self.output_dir);
        fix(&mut self.gateway.fixtures);
        if let Some(p) = &mut self.lexicon_dir {
            fix(p);
        }
        if let Some(p) = &mut self.domain_table {
            fix(p);
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.em.validate()?;
        self.dpmm.validate()?;
        self.filters.validate()?;
        if !(self.mapping.threshold > 0.0 && self.mapping.threshold <= 1.0) {
            return Err(Error::Config("mapping.threshold must lie in (0, 1]".into()));
        }
        Ok(())
    }

    /// The parameters that shape the artifact, without any paths.
    pub fn snapshot(&self) -> serde_json::Value {
        serde_json::json!({
            "domain": self.domain,
            "em": self.em,
            "dpmm": self.dpmm,
            "filters": self.filters,
            "mapping": self.mapping,
        })
    }

    pub fn lexicons(&self) -> Result<Lexicons> {
        match &self.lexicon_dir {
            Some(dir) => Lexicons::from_dir(dir),
            None => Ok(Lexicons::bundled()),
        }
    }

    pub fn domain_table(&self) -> Result<DomainMappingTable> {
        match &self.domain_table {
            Some(p) => DomainMappingTable::load(p),
            None => Ok(DomainMappingTable::default()),
        }
    }
}

/// Applies `f` to every item on up to `jobs` threads, keeping order.
pub fn par_map<T: Sync, R: Send>(items: &[T], jobs: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let jobs = jobs.clamp(1, items.len().max(1));
    if jobs == 1 {
        return items.iter().map(f).collect();
    }
    let chunk = items.len().div_ceil(jobs);
    std::thread::scope(|s| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|c| {
                let f = &f;
                s.spawn(move || c.iter().map(f).collect::<Vec<_>>())
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("worker panicked"))
            .collect()
    })
}

pub fn annotate_corpus(protocols: &[Protocol], annotator: &Annotator, jobs: usize) -> Vec<StepFeatures> {
    par_map(protocols, jobs, |p| annotator.annotate_protocol(p))
}

pub fn score_corpus(features: &[StepFeatures], cfg: &FilterConfig, jobs: usize) -> Vec<ScoreMap> {
    let sim = LexicalSimilarity::default();
    par_map(features, jobs, |f| score_all(f, cfg, &sim))
}

fn modal_domain(protocols: &[Protocol]) -> Domain {
    let mut counts: BTreeMap<&Domain, usize> = BTreeMap::new();
    for p in protocols {
        *counts.entry(&p.domain).or_default() += 1;
    }
    counts
        .into_iter()
        .fold((None, 0), |(best, n), (d, c)| if c > n { (Some(d), c) } else { (best, n) })
        .0
        .cloned()
        .unwrap_or(Domain::Other("unknown".into()))
}

#[derive(Debug, Clone)]
pub struct DesignOutput {
    pub artifact: DslArtifact,
    pub em_report: EmReport,
    pub dpmm_trace: DpmmTrace,
    pub artifact_path: PathBuf,
}

/// Runs the whole design pipeline on an in-memory corpus without writing
/// anything.
pub fn design(protocols: &[Protocol], cfg: &Config, jobs: usize) -> Result<(DslArtifact, EmReport, DpmmTrace)> {
    cfg.validate()?;
    if protocols.is_empty() {
        return Err(Error::from(CorpusError::Empty).in_stage("ingest"));
    }
    let annotator = Annotator::new(cfg.lexicons().map_err(|e| e.in_stage("annotate"))?);
    let features = annotate_corpus(protocols, &annotator, jobs);
    let scores = score_corpus(&features, &cfg.filters, jobs);
    let (syntax, em_report) = run_em(&scores, &Grammar::load_prior(), &cfg.em).map_err(|e| e.in_stage("syntax"))?;
    let records = extract_records(&features);
    let (_, registry, dpmm_trace) = reduce(&records, &cfg.dpmm).map_err(|e| e.in_stage("semantics"))?;
    let domain = cfg.domain.as_deref().map_or_else(|| modal_domain(protocols), Domain::parse);
    let provenance = Provenance {
        config: cfg.snapshot(),
        em: Some(em_report.clone()),
        dpmm: Some(cfg.dpmm.clone()),
        ..Provenance::for_corpus(protocols)
    };
    let artifact = DslArtifact::assemble(domain, syntax, registry, provenance)
        .map_err(|e| Error::from(e).in_stage("assemble"))?;
    Ok((artifact, em_report, dpmm_trace))
}

/// Design from the configured corpus and write the artifact, the EM report
/// and both convergence traces into the output directory.
pub fn cmd_design(cfg: &Config, jobs: usize, timestamp: Option<u64>) -> Result<DesignOutput> {
    let table = cfg.domain_table().map_err(|e| e.in_stage("ingest"))?;
    let protocols = load_corpus_with(&cfg.corpus, &table).map_err(|e| e.in_stage("ingest"))?;
    let (mut artifact, em_report, dpmm_trace) = design(&protocols, cfg, jobs)?;
    artifact.provenance.created_unix = timestamp;
    let out = &cfg.output_dir;
    let write = |name: &str, text: String| -> Result<()> {
        let p = out.join(name);
        std::fs::write(&p, text).map_err(|e| Error::io(&p, e).in_stage("save"))
    };
    let artifact_path = out.join(ARTIFACT_FILE);
    artifact.save(&artifact_path).map_err(|e| e.in_stage("save"))?;
    write(
        "em_report.json",
        serde_json::to_string_pretty(&em_report).expect("report serializes") + "\n",
    )?;
    write("em_trace.csv", em_report.trace_csv())?;
    write("dpmm_trace.csv", dpmm_trace.to_csv())?;
    Ok(DesignOutput {
        artifact,
        em_report,
        dpmm_trace,
        artifact_path,
    })
}

pub fn design_summary(out: &DesignOutput) -> String {
    let a = &out.artifact;
    let r = &out.em_report;
    let mut s = String::new();
    let _ = writeln!(s, "artifact     {}", out.artifact_path.display());
    let _ = writeln!(s, "domain       {}", a.domain.name());
    let _ = writeln!(s, "protocols    {}", a.provenance.protocols);
    let _ = writeln!(
        s,
        "em           {} iterations, converged={}, K={} -> K'={}",
        r.iterations, r.converged, r.k, r.k_prime
    );
    let _ = writeln!(
        s,
        "active       {}",
        a.active_constraints.iter().map(|k| k.name()).collect::<Vec<_>>().join(", ")
    );
    let _ = writeln!(
        s,
        "registry     {} opcodes, {} patterns ({} sweeps)",
        a.registry.entries.len(),
        a.registry.pattern_count(),
        out.dpmm_trace.sweeps.len()
    );
    s
}

/// Programs from a file: `.jsonl` holds one program per line, anything else
/// is a single program (JSON object or table notation).
pub fn load_programs(path: &Path) -> Result<Vec<ProtocolProgram>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if path.extension().is_some_and(|e| e == "jsonl") {
        text.lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                let mut p = parse_program_text(l).map_err(|e| Error::Config(format!("{}:{}: {e}", path.display(), i + 1)))?;
                p.name.get_or_insert_with(|| format!("line-{}", i + 1));
                Ok(p)
            })
            .collect()
    } else {
        let mut p = parse_program_text(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        p.name.get_or_insert_with(|| {
            path.file_stem()
                .map_or_else(|| "program".into(), |s| s.to_string_lossy().into_owned())
        });
        Ok(vec![p])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub findings: Vec<(String, Diagnostic)>,
    pub programs: usize,
}

impl CheckReport {
    /// One finding per line: program, location, kind, detail, suggestion.
    pub fn render(&self) -> String {
        let mut s = String::new();
        for (name, d) in &self.findings {
            let _ = writeln!(s, "{name}\t{d}");
        }
        let _ = writeln!(s, "# {} program(s), {} finding(s)", self.programs, self.findings.len());
        s
    }

    pub fn is_clean(&self) -> bool {
        self.findings.is_empty()
    }
}

pub fn check_programs(artifact: &DslArtifact, programs: &[ProtocolProgram], jobs: usize) -> CheckReport {
    let checker = Checker::default();
    let per = par_map(programs, jobs, |p| checker.check(p, artifact));
    let findings = programs
        .iter()
        .zip(per)
        .flat_map(|(p, ds)| {
            let name = p.name.clone().unwrap_or_default();
            ds.into_iter().map(move |d| (name.clone(), d))
        })
        .collect();
    CheckReport {
        findings,
        programs: programs.len(),
    }
}

pub fn cmd_check(artifact_path: &Path, programs_path: &Path, jobs: usize) -> Result<CheckReport> {
    let artifact = DslArtifact::load(artifact_path)?;
    let programs = load_programs(programs_path)?;
    Ok(check_programs(&artifact, &programs, jobs))
}

#[derive(Debug, Clone)]
pub enum EvalRequest {
    Ontology { artifact: PathBuf, triplets: PathBuf, threshold: f64 },
    Utility { predicted: PathBuf, truth: PathBuf },
    Overlap { a: PathBuf, b: PathBuf },
    Judge { artifact: PathBuf, gateway: GatewayConfig },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum EvalReport {
    Ontology(MappingReport),
    Utility(UtilityScore),
    Overlap(Overlap),
    Judge(JudgeSummary),
}

pub fn cmd_eval(req: &EvalRequest, jobs: usize) -> Result<EvalReport> {
    Ok(match req {
        EvalRequest::Ontology {
            artifact,
            triplets,
            threshold,
        } => {
            let a = DslArtifact::load(artifact)?;
            let graph = build_ontology(load_triplets(triplets)?, &RelationDictionary::default())?;
            EvalReport::Ontology(evaluate(&graph, &a, &LexicalSimilarity::default(), *threshold))
        }
        EvalRequest::Utility { predicted, truth } => {
            EvalReport::Utility(score_utility(&load_programs(predicted)?, &load_programs(truth)?)?)
        }
        EvalRequest::Overlap { a, b } => EvalReport::Overlap(overlap(&DslArtifact::load(a)?, &DslArtifact::load(b)?)),
        EvalRequest::Judge { artifact, gateway } => {
            let a = DslArtifact::load(artifact)?;
            let gw = Gateway::new(gateway.mode, &gateway.fixtures, &gateway.model);
            EvalReport::Judge(judge_all(&a, &judge_questions(), &gw, jobs)?)
        }
    })
}

fn fmt_rate(x: f64) -> String {
    format!("{x:.4}")
}

impl EvalReport {
    pub fn render(&self) -> String {
        let mut s = String::new();
        match self {
            EvalReport::Ontology(r) => {
                let _ = writeln!(s, "metric        value");
                for (k, v) in [
                    ("soundness", r.soundness),
                    ("lucidity", r.lucidity),
                    ("completeness", r.completeness),
                    ("laconicity", r.laconicity),
                ] {
                    let _ = writeln!(s, "{k:<13} {}", fmt_rate(v));
                }
                let _ = writeln!(s, "mapped pairs  {}", r.mapping.len());
                let _ = writeln!(s, "unmapped elements    {}", r.unmapped_elements.len());
                let _ = writeln!(s, "unmapped constructs  {}", r.unmapped_constructs.len());
            }
            EvalReport::Utility(u) => {
                let _ = writeln!(s, "class                        hits/total  rate");
                for f in FeatureClass::ALL {
                    if let Some(r) = u.syntactic_success.get(&f) {
                        let _ = writeln!(s, "{:<28} {:>4}/{:<5}  {}", format!("{f:?}"), r.hits, r.total, fmt_rate(r.value()));
                    }
                }
                for (k, r) in &u.semantic_success {
                    let _ = writeln!(s, "{:<28} {:>4}/{:<5}  {}", k.name(), r.hits, r.total, fmt_rate(r.value()));
                }
                let o = &u.overall;
                let _ = writeln!(s, "{:<28} {:>4}/{:<5}  {}", "overall", o.hits, o.total, fmt_rate(o.value()));
            }
            EvalReport::Overlap(o) => {
                let _ = writeln!(s, "syntactic jaccard  {}", fmt_rate(o.syntactic_jaccard));
                let _ = writeln!(s, "semantic jaccard   {}", fmt_rate(o.semantic_jaccard));
            }
            EvalReport::Judge(j) => {
                let _ = writeln!(s, "#   opinion  confidence  question");
                for (i, v) in j.verdicts.iter().enumerate() {
                    let _ = writeln!(s, "{:<3} {:<8} {:<11} {}", i + 1, v.opinion, v.confidence, v.question);
                }
                let _ = writeln!(s, "mean opinion     {}", fmt_rate(j.mean_opinion));
                let _ = writeln!(s, "mean confidence  {}", fmt_rate(j.mean_confidence));
            }
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

/// Filter scores per protocol; only constructs scoring above zero unless
/// `all` is set.
pub fn cmd_filters(protocols: &[Protocol], filters: &FilterConfig, lex: Lexicons, all: bool, jobs: usize) -> String {
    let annotator = Annotator::new(lex);
    let features = annotate_corpus(protocols, &annotator, jobs);
    let scores = score_corpus(&features, filters, jobs);
    let mut s = String::from("protocol\tconstruct\tscore\n");
    for (p, sc) in protocols.iter().zip(scores) {
        for (k, v) in sc {
            if all || v > 0.0 {
                let _ = writeln!(s, "{}\t{k}\t{v}", p.id);
            }
        }
    }
    s
}

pub fn cmd_report(artifact_path: &Path) -> Result<String> {
    let a = DslArtifact::load(artifact_path)?;
    let mut s = String::new();
    let _ = writeln!(s, "domain        {}", a.domain.name());
    let _ = writeln!(s, "checksum      {}", a.checksum());
    let _ = writeln!(s, "corpus hash   {}", a.provenance.corpus_hash);
    let _ = writeln!(s, "protocols     {}", a.provenance.protocols);
    let _ = writeln!(s, "tool version  {}", a.provenance.tool_version);
    let _ = writeln!(
        s,
        "grammar       {} productions, {} nonterminals",
        a.grammar.productions().len(),
        a.grammar.nonterminals().len()
    );
    let _ = writeln!(s, "\nactive constructs ({}):", a.active_constraints.len());
    for k in &a.active_constraints {
        let _ = writeln!(s, "  {k}");
    }
    if let Some(em) = &a.provenance.em {
        let _ = writeln!(s, "\nem: {} iterations, converged={}", em.iterations, em.converged);
        for (it, k) in &em.pruned {
            let _ = writeln!(s, "  pruned {k} at iteration {it}");
        }
    }
    let _ = writeln!(
        s,
        "\nregistry ({} opcodes, {} patterns):",
        a.registry.entries.len(),
        a.registry.pattern_count()
    );
    for (op, entries) in &a.registry.entries {
        for e in entries {
            let _ = writeln!(s, "  {op:<14} [{}]", e.pattern.join(", "));
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_defaults_and_overrides() {
        let cfg = Config::from_toml("corpus = \"c.jsonl\"\n[em]\nmax_iters = 7\n[dpmm]\nseed = 3\n").unwrap();
        assert_eq!(cfg.em.max_iters, 7);
        assert_eq!(cfg.dpmm.seed, 3);
        assert_eq!(cfg.filters, FilterConfig::default());
        assert!(Config::from_toml("[em]\nbogus = 1\n").is_err());
        assert!(Config::from_toml("[mapping]\nthreshold = 0.0\n").is_err());
    }

    #[test]
    fn empty_corpus_names_the_stage() {
        let e = design(&[], &Config::default(), 1).unwrap_err();
        assert_eq!(e.to_string(), "ingest: empty corpus");
    }

    #[test]
    fn par_map_keeps_order() {
        let xs: Vec<u32> = (0..103).collect();
        assert_eq!(par_map(&xs, 4, |x| x * 2), xs.iter().map(|x| x * 2).collect::<Vec<_>>());
    }
}
