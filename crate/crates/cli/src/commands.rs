//! One function per pipeline stage. Each reads the previous stage's files
//! from the output directory and writes its own.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use gkc_core::cohort::{
    cohort_labels, generate_synthetic_cohort, read_cohort_file, validate_cohort, write_cohort, LandmarkPolicy,
    PatientRecord,
};
use gkc_core::curation::{
    build_prompt, cache_key, load_report_dir, render_report_text, save_report_dir, Curator, CuratorProvider,
    ExternalCurator, MockCurator, PromptTemplate,
};
use gkc_core::digest::Digest256;
use gkc_core::embedding::{load_embedding_dir, save_embedding_dir, EMBEDDING_MANIFEST};
use gkc_core::eval::{
    attribute_cv, compare_records, make_cv_plan, metric_values, read_records_tsv, records_tsv, run_ablation, run_cv,
    summarize, AblationSummaryRow, ConfigSummary, CvOptions, CvPlan, EvalError, Metric, MetricsRecord, MetricsSummary,
    ResultsSummary,
};
use gkc_core::features::{enf_column_names, FeatureSource, Strategy, TextFeatures};
use gkc_core::knowledge::{load_knowledge_base, KnowledgeBase, KnowledgePaths, LoadOptions};
use gkc_core::pipeline::{curate_corpus, default_templates, embed_profiles, embed_reports, ReportSet, EMBEDDING_HINT};
use gkc_core::profiles::{profile_corpus, read_profile_dir, write_profile_dir, ProfileCorpus, MANIFEST_FILE};
use gkc_core::seeds::{derive_seed, purpose};
use gkc_core::{Modality, ModalitySubset};
use serde::Serialize;

use crate::config::{CohortSource, CuratorKind, Overrides, RunConfig};
use crate::error::CliError;
use crate::layout::{read_text, write_atomic, OutputLayout, RunLock};

/// What a command did; printed as one JSON line.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct StageReport {
    pub command: String,
    pub status: &'static str,
    pub provider_calls: usize,
    pub cache_entries: usize,
    pub written: Vec<String>,
}

impl StageReport {
    fn new(command: &str) -> Self {
        Self { command: command.to_string(), status: "ok", ..Default::default() }
    }
}

/// A locked output directory with its resolved configuration.
pub struct Workspace {
    pub layout: OutputLayout,
    pub config: RunConfig,
    kb: KnowledgeBase,
    _lock: RunLock,
}

impl Workspace {
    /// Config precedence: `config_path`, then the saved `configs/run.json`,
    /// then defaults; `overrides` apply last. The result is saved back.
    pub fn open(out: &Path, config_path: Option<&Path>, overrides: &Overrides) -> Result<Self, CliError> {
        let layout = OutputLayout::new(out);
        let lock = layout.lock()?;
        let mut config = match config_path {
            Some(p) => RunConfig::from_file(p)?,
            None if layout.config().exists() => RunConfig::from_file(&layout.config())?,
            None => RunConfig::default(),
        };
        config.apply(overrides);
        config.validate()?;
        let kb = match &config.knowledge_dir {
            Some(dir) => load_knowledge_base(&KnowledgePaths::in_dir(dir), &LoadOptions::default())
                .map_err(|e| CliError::Config(format!("knowledge base: {e}")))?,
            None => KnowledgeBase::bundled(),
        };
        write_atomic(&layout.config(), config.to_canonical_json())?;
        Ok(Self { layout, config, kb, _lock: lock })
    }

    pub fn knowledge(&self) -> &KnowledgeBase {
        &self.kb
    }

    fn write(&self, report: &mut StageReport, path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
        write_atomic(path, contents)?;
        report.written.push(self.layout.display(path));
        Ok(())
    }

    pub fn load_cohort(&self) -> Result<Vec<PatientRecord>, CliError> {
        let path = self.layout.cohort();
        self.layout.require(&path, "synth")?;
        read_cohort_file(&path, true).map_err(|e| CliError::artifact(&path, e))
    }

    pub fn load_profiles(&self) -> Result<ProfileCorpus, CliError> {
        let dir = self.layout.profiles();
        self.layout.require(&dir.join(MANIFEST_FILE), "profiles")?;
        read_profile_dir(&dir).map_err(|e| CliError::artifact(&dir, e))
    }

    pub fn templates(&self) -> Result<BTreeMap<Modality, PromptTemplate>, CliError> {
        let mut templates = default_templates();
        let Some(dir) = &self.config.curator.templates_dir else {
            return Ok(templates);
        };
        for m in Modality::ALL {
            let path = dir.join(format!("{}.json", m.as_str()));
            if !path.exists() {
                continue;
            }
            let tpl: PromptTemplate = serde_json::from_str(&read_text(&path)?)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            if tpl.modality() != m {
                return Err(CliError::Config(format!("{} declares modality {}", path.display(), tpl.modality())));
            }
            templates.insert(m, tpl);
        }
        Ok(templates)
    }

    fn curator(&self) -> Result<Curator, CliError> {
        let c = &self.config.curator;
        let provider: Arc<dyn CuratorProvider> = match c.provider {
            CuratorKind::Mock => Arc::new(MockCurator::new()),
            CuratorKind::External => Arc::new(ExternalCurator::from_env().map_err(CliError::Config)?),
        };
        Ok(Curator::new(provider, c.strict_schema, c.max_in_flight))
    }

    /// Reports by `(patient, modality)`, resolved through the index.
    pub fn load_reports(&self) -> Result<ReportSet, CliError> {
        let index = self.layout.report_index();
        self.layout.require(&index, "curate")?;
        let cache_dir = self.layout.report_cache();
        let cached: BTreeMap<String, _> = load_report_dir(&cache_dir)
            .map_err(|e| CliError::artifact(&cache_dir, e))?
            .into_iter()
            .map(|e| (e.key.to_hex(), e.report))
            .collect();
        let mut out = ReportSet::new();
        for row in read_index(&index, 3)? {
            let modality: Modality = row[1].parse().map_err(|e: String| CliError::artifact(&index, e))?;
            let report = cached
                .get(&row[2])
                .ok_or_else(|| CliError::artifact(&cache_dir, format!("no cached report for key {}", row[2])))?;
            out.insert((row[0].clone(), modality), report.clone());
        }
        Ok(out)
    }

    pub fn load_text_features(&self, strategy: Strategy) -> Result<TextFeatures, CliError> {
        let index = self.layout.embedding_index();
        self.layout.require(&index, "embed")?;
        let rows: Vec<Vec<String>> =
            read_index(&index, 4)?.into_iter().filter(|r| r[0] == strategy.to_string()).collect();
        if rows.is_empty() {
            return Err(CliError::MissingArtifact {
                artifact: format!("{strategy} rows in {}", self.layout.display(&index)),
                stage: "embed",
            });
        }
        let cache_dir = self.layout.embedding_cache();
        let vectors: BTreeMap<String, _> = load_embedding_dir(&cache_dir)
            .map_err(|e| CliError::artifact(&cache_dir, e))?
            .into_iter()
            .map(|(k, v)| (k.digest().to_hex(), v))
            .collect();
        let mut features = TextFeatures::default();
        for row in rows {
            let modality: Modality = row[2].parse().map_err(|e: String| CliError::artifact(&index, e))?;
            let v = vectors
                .get(&row[3])
                .ok_or_else(|| CliError::artifact(&cache_dir, format!("no cached vector for key {}", row[3])))?;
            features.insert(&row[1], modality, v.clone());
        }
        Ok(features)
    }

    pub fn source(
        &self,
        cohort: &[PatientRecord],
        strategy: Strategy,
        subset: ModalitySubset,
        text: Option<&TextFeatures>,
    ) -> Result<FeatureSource, CliError> {
        FeatureSource::new(cohort, &self.kb, strategy, subset, text).map_err(CliError::stage)
    }

    fn text_for(&self, strategy: Strategy) -> Result<Option<TextFeatures>, CliError> {
        match strategy {
            Strategy::ENF => Ok(None),
            s => self.load_text_features(s).map(Some),
        }
    }

    fn plan(&self, cohort: &[PatientRecord]) -> Result<CvPlan, CliError> {
        let labels = cohort_labels(cohort).map_err(CliError::stage)?;
        let cv = &self.config.cv;
        make_cv_plan(&labels, cv.folds, cv.repeats, cv.seed).map_err(CliError::stage)
    }

    fn cv_options(&self, audit: bool) -> CvOptions {
        CvOptions { inner_folds: self.config.cv.inner_folds, audit }
    }

    fn bootstrap_seed(&self) -> u64 {
        derive_seed(self.config.cv.seed, &[purpose::BOOTSTRAP])
    }

    fn load_records(&self) -> Result<Vec<MetricsRecord>, CliError> {
        let path = self.layout.result("records.tsv");
        self.layout.require(&path, "eval")?;
        read_records_tsv(&read_text(&path)?).map_err(|e| CliError::artifact(&path, e))
    }
}

/// Tab-separated index with a header line and `width` columns.
fn read_index(path: &Path, width: usize) -> Result<Vec<Vec<String>>, CliError> {
    let text = read_text(path)?;
    text.lines()
        .skip(1)
        .filter(|l| !l.is_empty())
        .map(|l| {
            let f: Vec<String> = l.split('\t').map(str::to_string).collect();
            if f.len() == width {
                Ok(f)
            } else {
                Err(CliError::artifact(path, format!("expected {width} columns in `{l}`")))
            }
        })
        .collect()
}

pub fn cmd_synth(ws: &Workspace) -> Result<StageReport, CliError> {
    let mut report = StageReport::new("synth");
    let cohort = match &ws.config.cohort {
        CohortSource::Synthetic(cfg) => generate_synthetic_cohort(cfg, &ws.kb).map_err(CliError::stage)?.patients,
        CohortSource::Path(path) => {
            let cohort = read_cohort_file(path, true).map_err(|e| CliError::artifact(path, e))?;
            let check = validate_cohort(&cohort, &ws.kb, &LandmarkPolicy::default());
            if let Some(v) = check.violations.first() {
                return Err(CliError::Stage(format!(
                    "{} cohort violation(s); first: patient {} {}: {}",
                    check.violations.len(),
                    v.patient_id,
                    v.rule,
                    v.detail
                )));
            }
            cohort
        }
    };
    cohort_labels(&cohort).map_err(CliError::stage)?;
    ws.write(&mut report, &ws.layout.cohort(), write_cohort(&cohort))?;
    Ok(report)
}

pub fn cmd_profiles(ws: &Workspace) -> Result<StageReport, CliError> {
    let mut report = StageReport::new("profiles");
    let cohort = ws.load_cohort()?;
    let corpus = profile_corpus(&cohort, &ws.kb, true).map_err(CliError::stage)?;
    let dir = ws.layout.profiles();
    write_profile_dir(&dir, &corpus).map_err(|e| CliError::io(&dir, e))?;
    report.written.push(ws.layout.display(&dir.join(MANIFEST_FILE)));
    Ok(report)
}

pub fn cmd_curate(ws: &Workspace) -> Result<StageReport, CliError> {
    let mut report = StageReport::new("curate");
    let corpus = ws.load_profiles()?;
    let templates = ws.templates()?;
    let curator = ws.curator()?;
    let cache_dir = ws.layout.report_cache();
    curator.preload(load_report_dir(&cache_dir).map_err(|e| CliError::artifact(&cache_dir, e))?);
    let params = &ws.config.curator.decoding;
    curate_corpus(&corpus, &curator, &templates, params).map_err(CliError::stage)?;
    save_report_dir(&cache_dir, &curator.entries()).map_err(|e| CliError::io(&cache_dir, e))?;

    let mut index = String::from("patient_id\tmodality\tkey\n");
    for ((pid, m), profile) in &corpus.profiles {
        let tpl = &templates[m];
        let prompt = build_prompt(profile, tpl).map_err(CliError::stage)?;
        let key = cache_key(&prompt, &curator.provider_name(), params, tpl.version());
        let _ = writeln!(index, "{pid}\t{}\t{}", m.as_str(), key.to_hex());
    }
    ws.write(&mut report, &ws.layout.report_index(), index)?;
    report.provider_calls = curator.provider_calls();
    report.cache_entries = curator.cached();
    Ok(report)
}

pub fn cmd_embed(ws: &Workspace) -> Result<StageReport, CliError> {
    let mut report = StageReport::new("embed");
    let embedder = ws.config.embedder.build().map_err(|e| CliError::Config(e.to_string()))?;
    let cache_dir = ws.layout.embedding_cache();
    embedder
        .preload(load_embedding_dir(&cache_dir).map_err(|e| CliError::artifact(&cache_dir, e))?)
        .map_err(|e| CliError::artifact(&cache_dir, e))?;

    let mut index = String::from("strategy\tpatient_id\tmodality\tkey\n");
    let mut add_rows = |strategy: Strategy, texts: Vec<(&(String, Modality), String)>| {
        for ((pid, m), text) in texts {
            let key = embedder.key_for(&text, EMBEDDING_HINT).digest();
            let _ = writeln!(index, "{strategy}\t{pid}\t{}\t{}", m.as_str(), key.to_hex());
        }
    };
    let wants = |s: Strategy| ws.config.strategies.contains(&s) || ws.config.ablation.strategy == s;
    if wants(Strategy::CTE) {
        let corpus = ws.load_profiles()?;
        embed_profiles(&corpus, &embedder).map_err(CliError::stage)?;
        add_rows(Strategy::CTE, corpus.profiles.iter().map(|(k, p)| (k, p.text.clone())).collect());
    }
    if wants(Strategy::GKC) {
        let reports = ws.load_reports()?;
        embed_reports(&reports, &embedder).map_err(CliError::stage)?;
        add_rows(Strategy::GKC, reports.iter().map(|(k, r)| (k, render_report_text(r))).collect());
    }
    save_embedding_dir(&cache_dir, &embedder.entries()).map_err(|e| CliError::io(&cache_dir, e))?;
    report.written.push(ws.layout.display(&cache_dir.join(EMBEDDING_MANIFEST)));
    ws.write(&mut report, &ws.layout.embedding_index(), index)?;
    report.provider_calls = embedder.provider_calls();
    report.cache_entries = embedder.cached();
    Ok(report)
}

fn summary_of(records: &[MetricsRecord], seed: u64) -> ConfigSummary {
    ConfigSummary {
        auc_roc: summarize(&metric_values(records, Metric::AucRoc), seed),
        auc_prc: summarize(&metric_values(records, Metric::AucPrc), seed),
    }
}

fn group_by_config(records: &[MetricsRecord]) -> BTreeMap<String, Vec<MetricsRecord>> {
    let mut groups: BTreeMap<String, Vec<MetricsRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(r.config_label()).or_default().push(r.clone());
    }
    groups
}

pub fn cmd_eval(ws: &Workspace, audit: bool) -> Result<StageReport, CliError> {
    let mut report = StageReport::new("eval");
    let cohort = ws.load_cohort()?;
    let plan = ws.plan(&cohort)?;
    let mut sources = Vec::new();
    for &strategy in &ws.config.strategies {
        let text = ws.text_for(strategy)?;
        sources.push(ws.source(&cohort, strategy, ModalitySubset::FULL, text.as_ref())?);
    }

    let all_rows: Vec<usize> = (0..cohort.len()).collect();
    for source in &sources {
        let fm = source.matrix_for_fold(&all_rows, None).map_err(CliError::stage)?;
        let names = (source.strategy() == Strategy::ENF).then(|| enf_column_names(&ws.kb, ModalitySubset::FULL));
        let path = ws.layout.matrices().join(format!("{}.tsv", source.strategy()));
        ws.write(&mut report, &path, fm.to_tsv(names.as_deref()))?;
    }

    let mut records = Vec::new();
    let mut audits = Vec::new();
    let mut summary = ResultsSummary::default();
    for &kind in &ws.config.models {
        let grid = ws.config.grid(kind);
        let mut per_strategy = Vec::new();
        for source in &sources {
            let run = run_cv(&plan, source, kind, &grid, &ws.cv_options(audit)).map_err(CliError::stage)?;
            log::info!("{}/{kind}: {} folds", source.strategy(), run.records.len());
            audits.extend(run.audits);
            per_strategy.push(run.records);
        }
        for (i, a) in per_strategy.iter().enumerate() {
            for b in &per_strategy[..i] {
                summary.comparisons.push(compare_records(a, b, Metric::AucRoc).map_err(CliError::stage)?);
            }
        }
        records.extend(per_strategy.into_iter().flatten());
    }
    for (label, group) in group_by_config(&records) {
        summary.configurations.insert(label, summary_of(&group, ws.bootstrap_seed()));
    }
    ws.write(&mut report, &ws.layout.result("records.tsv"), records_tsv(&records))?;
    ws.write(&mut report, &ws.layout.result("summary.json"), summary.to_json())?;
    if audit {
        let json = serde_json::to_string_pretty(&audits).expect("audits serialize") + "\n";
        ws.write(&mut report, &ws.layout.result("audit.json"), json)?;
    }
    Ok(report)
}

fn summary_cells(s: &MetricsSummary) -> String {
    format!("{}\t{:?}\t{:?}\t{:?}\t{:?}", s.n, s.mean, s.sd, s.ci_lo, s.ci_hi)
}

pub fn cmd_ablate(ws: &Workspace) -> Result<StageReport, CliError> {
    let mut report = StageReport::new("ablate");
    let cohort = ws.load_cohort()?;
    let plan = ws.plan(&cohort)?;
    let (strategy, kind) = (ws.config.ablation.strategy, ws.config.ablation.model);
    let text = ws.text_for(strategy)?;
    let rows = run_ablation(
        &plan,
        |subset| FeatureSource::new(&cohort, &ws.kb, strategy, subset, text.as_ref()).map_err(EvalError::from),
        kind,
        &ws.config.grid(kind),
        &ws.cv_options(false),
    )
    .map_err(CliError::stage)?;

    let mut table = String::from("subset\tn\tauc_roc_mean\tauc_roc_sd\tauc_roc_ci_lo\tauc_roc_ci_hi\t");
    table.push_str("n_prc\tauc_prc_mean\tauc_prc_sd\tauc_prc_ci_lo\tauc_prc_ci_hi\n");
    for r in &rows {
        let _ = writeln!(table, "{}\t{}\t{}", r.subset, summary_cells(&r.auc_roc), summary_cells(&r.auc_prc));
    }
    let records: Vec<MetricsRecord> = rows.iter().flat_map(|r| r.records.iter().cloned()).collect();
    let summary =
        ResultsSummary { ablation: rows.iter().map(AblationSummaryRow::from).collect(), ..Default::default() };
    ws.write(&mut report, &ws.layout.result("ablation.tsv"), table)?;
    ws.write(&mut report, &ws.layout.result("ablation_records.tsv"), records_tsv(&records))?;
    ws.write(&mut report, &ws.layout.result("ablation.json"), summary.to_json())?;
    Ok(report)
}

pub fn cmd_attribute(ws: &Workspace) -> Result<StageReport, CliError> {
    let mut report = StageReport::new("attribute");
    let cohort = ws.load_cohort()?;
    let plan = ws.plan(&cohort)?;
    let a = &ws.config.attribution;
    let text = ws.text_for(a.strategy)?;
    let source = ws.source(&cohort, a.strategy, ModalitySubset::FULL, text.as_ref())?;
    let result = attribute_cv(&plan, &source, a.model, &ws.config.grid(a.model), a.repeats, a.permutations)
        .map_err(CliError::stage)?;

    let mut per_patient = String::from("patient_id");
    for g in &result.groups {
        let _ = write!(per_patient, "\t{}", g.modality.as_str());
    }
    per_patient.push('\n');
    for (pid, row) in source.row_ids().iter().zip(&result.per_patient) {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        let _ = writeln!(per_patient, "{pid}\t{}", cells.join("\t"));
    }
    let summary = ResultsSummary { attribution: Some(result), ..Default::default() };
    ws.write(&mut report, &ws.layout.result("attribution.json"), summary.to_json())?;
    ws.write(&mut report, &ws.layout.result("attribution_patients.tsv"), per_patient)?;
    Ok(report)
}

/// Strategy table plus pairwise tests over the saved fold records.
/// Returns the report and the rendered table.
pub fn cmd_compare(ws: &Workspace, strategies: &[Strategy], metric: Metric) -> Result<(StageReport, String), CliError> {
    let mut report = StageReport::new("compare");
    let wanted: BTreeSet<Strategy> = if strategies.is_empty() {
        ws.config.strategies.iter().copied().collect()
    } else {
        strategies.iter().copied().collect()
    };
    let records: Vec<MetricsRecord> = ws.load_records()?.into_iter().filter(|r| wanted.contains(&r.strategy)).collect();
    let groups = group_by_config(&records);
    for s in &wanted {
        if !records.iter().any(|r| r.strategy == *s) {
            return Err(CliError::MissingArtifact {
                artifact: format!("{s} records in results/records.tsv"),
                stage: "eval",
            });
        }
    }

    let mut table = String::from("config\tn\tmean\tsd\tci_lo\tci_hi\n");
    for (label, group) in &groups {
        let s = summarize(&metric_values(group, metric), ws.bootstrap_seed());
        let _ = writeln!(table, "{label}\t{}", summary_cells(&s));
    }
    let mut tests = String::from("a\tb\tmean_a\tmean_b\tw\tn_effective\tp_value\tmethod\n");
    let labels: Vec<&String> = groups.keys().collect();
    for (i, a) in labels.iter().enumerate() {
        for b in &labels[i + 1..] {
            let c = compare_records(&groups[*a], &groups[*b], metric).map_err(CliError::stage)?;
            let _ = writeln!(
                tests,
                "{}\t{}\t{:?}\t{:?}\t{:?}\t{}\t{:?}\t{:?}",
                c.a, c.b, c.mean_a, c.mean_b, c.test.w, c.test.n_effective, c.test.p_value, c.test.method
            );
        }
    }

    let mut series = String::from("repeat\tfold");
    for l in &labels {
        let _ = write!(series, "\t{l}");
    }
    series.push('\n');
    let keyed: Vec<BTreeMap<(usize, usize), f64>> =
        groups.values().map(|g| g.iter().map(|r| ((r.repeat, r.fold), r.metric(metric))).collect()).collect();
    let keys: BTreeSet<(usize, usize)> = keyed.iter().flat_map(|m| m.keys().copied()).collect();
    for k in keys {
        let cells: Vec<String> =
            keyed.iter().map(|m| m.get(&k).map_or_else(|| "NA".into(), |v| format!("{v:?}"))).collect();
        let _ = writeln!(series, "{}\t{}\t{}", k.0, k.1, cells.join("\t"));
    }

    let stem = match metric {
        Metric::AucRoc => "auc_roc",
        Metric::AucPrc => "auc_prc",
    };
    ws.write(&mut report, &ws.layout.result(&format!("comparison.{stem}.tsv")), &table)?;
    ws.write(&mut report, &ws.layout.result(&format!("comparison_tests.{stem}.tsv")), &tests)?;
    ws.write(&mut report, &ws.layout.result(&format!("fold_series.{stem}.tsv")), series)?;
    Ok((report, format!("{table}\n{tests}")))
}

/// Hex digest of every file under `dir`, keyed by relative path.
pub fn tree_digests(dir: &Path) -> Result<BTreeMap<String, String>, CliError> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<String, String>) -> Result<(), CliError> {
        for entry in std::fs::read_dir(dir).map_err(|e| CliError::io(dir, e))? {
            let path = entry.map_err(|e| CliError::io(dir, e))?.path();
            if path.is_dir() {
                walk(root, &path, out)?;
            } else {
                let bytes = std::fs::read(&path).map_err(|e| CliError::io(&path, e))?;
                let rel = path.strip_prefix(root).unwrap_or(&path).display().to_string();
                out.insert(rel, Digest256::of(bytes).to_hex());
            }
        }
        Ok(())
    }
    let mut out = BTreeMap::new();
    if dir.exists() {
        walk(dir, dir, &mut out)?;
    }
    Ok(out)
}
