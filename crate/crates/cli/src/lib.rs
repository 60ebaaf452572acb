//! Commands behind the `lovasz` binary: end-to-end runs, demos, and
//! re-verification of saved artifacts.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use lovasz_core::effective::manifest::{
    parse_coloring, parse_manifest, write_coloring, write_manifest,
};
use lovasz_core::effective::{
    check_coloring, color_prefix, validate_sparsity, ConstraintStream, StreamError,
};
use lovasz_core::hindman::{
    baseline_single_diag, baseline_witnesses, build_stream_comp, build_stream_main,
    builtin_addition_like, choose_m, gen_family, pigeonhole_check, write_family, FamilyParams,
    PairStream, StreamMode,
};
use lovasz_core::lll::check_condition;
use lovasz_core::lll::format::verdict_json;
use lovasz_core::ratio::{self, Rational};
use lovasz_core::verify::audit_solution;
use lovasz_core::{fixtures, seed};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("construction failed: {0}")]
    Construction(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("{path}: {message}")]
    Input { path: String, message: String },
}

impl CliError {
    /// 1 verification failure, 2 configuration or input error, 3 construction failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Verification(_) => 1,
            CliError::Config(_) | CliError::Input { .. } => 2,
            CliError::Construction(_) => 3,
        }
    }
}

fn io_error(path: &Path, err: std::io::Error) -> CliError {
    CliError::Input {
        path: path.display().to_string(),
        message: err.to_string(),
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub mode: StreamMode,
    pub function: String,
    /// `None` picks the least admissible `M`.
    pub min_size: Option<usize>,
    pub q: Rational,
    pub seed: u64,
    pub horizon: usize,
    pub members: usize,
    /// Family stages; defaults to the horizon.
    pub stages: Option<usize>,
    pub mind_changes: usize,
    pub out_dir: PathBuf,
}

impl RunConfig {
    pub fn new(
        mode: StreamMode,
        function: &str,
        seed: u64,
        horizon: usize,
        members: usize,
        out_dir: PathBuf,
    ) -> Self {
        RunConfig {
            mode,
            function: function.to_string(),
            min_size: None,
            q: ratio::from_ratio(1, 2),
            seed,
            horizon,
            members,
            stages: None,
            mind_changes: 3,
            out_dir,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub min_size: usize,
    pub committed_len: usize,
    pub items_in_prefix: usize,
    pub sparsity_violations: usize,
    /// Largest locality count per size.
    pub max_counts: BTreeMap<usize, u64>,
    pub audit_translates: usize,
    pub audit_violations: usize,
    pub stabilized: usize,
    pub vacuous: usize,
}

impl RunSummary {
    pub fn render(&self) -> String {
        format!(
            "M = {}, committed {} bits, {} constraints in prefix, {} sparsity violations; audit: {} stabilized, {} vacuous, {} translates checked, {} violations",
            self.min_size,
            self.committed_len,
            self.items_in_prefix,
            self.sparsity_violations,
            self.stabilized,
            self.vacuous,
            self.audit_translates,
            self.audit_violations
        )
    }
}

/// Per-size count bound of a construction: `m` (comp) or `b m^2` (main).
pub fn construction_bound(mode: StreamMode, b: usize, m: usize) -> u64 {
    match mode {
        StreamMode::Comp => m as u64,
        StreamMode::Main => (b * m * m) as u64,
    }
}

fn validate(config: &RunConfig) -> Result<(Box<dyn lovasz_core::AdditionLike>, usize), CliError> {
    if !ratio::in_open_unit(&config.q) {
        return Err(CliError::Config(format!(
            "q = {} outside (0,1)",
            ratio::format(&config.q)
        )));
    }
    let f = builtin_addition_like(&config.function).map_err(|e| CliError::Config(e.to_string()))?;
    if config.mode == StreamMode::Comp && config.function != "sum" {
        return Err(CliError::Config(
            "comp mode diagonalizes against sums; use --f sum".into(),
        ));
    }
    let b = match config.mode {
        StreamMode::Comp => 1,
        StreamMode::Main => f.mult_bound(),
    };
    let least = choose_m(b, &config.q, config.mode.size_rule())
        .map_err(|e| CliError::Config(e.to_string()))?;
    let m = config.min_size.unwrap_or(least);
    if m < least {
        return Err(CliError::Config(format!(
            "M = {m} is below the least admissible M = {least} for {} mode with {}",
            config.mode.as_str(),
            config.function
        )));
    }
    if config.horizon < 4 * m {
        return Err(CliError::Config(format!(
            "horizon {} is below 4 M = {}",
            config.horizon,
            4 * m
        )));
    }
    if config.members == 0 {
        return Err(CliError::Config("need at least one family member".into()));
    }
    if config.stages.is_some_and(|s| s < 2) {
        return Err(CliError::Config("need at least two stages".into()));
    }
    Ok((f, m))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| io_error(path, e))
}

/// Generates a family, builds its stream, colors, validates, audits, and
/// writes `family.txt`, `stream.txt`, `coloring.txt`, `sparsity.csv` and
/// `audit.json` into the output directory.
pub fn cmd_run(config: &RunConfig) -> Result<RunSummary, CliError> {
    let (f, min_size) = validate(config)?;
    let b = f.mult_bound();
    let family_mode = config.mode.family_mode();
    let mut params = FamilyParams::for_threshold(family_mode, min_size, b);
    params.max_mind_changes = config.mind_changes;
    let stages = config.stages.unwrap_or(config.horizon);
    let family = gen_family(
        seed::sub_seed(config.seed, "family"),
        config.members,
        stages,
        family_mode,
        &params,
    )
    .map_err(|e| CliError::Config(e.to_string()))?;
    let stream: PairStream = match config.mode {
        StreamMode::Comp => build_stream_comp(&family, min_size, &config.q),
        StreamMode::Main => build_stream_main(
            &family,
            builtin_addition_like(&config.function).expect("checked"),
            min_size,
            &config.q,
        ),
    }
    .map_err(|e| CliError::Config(e.to_string()))?;

    let coloring = color_prefix(
        &stream,
        config.horizon,
        seed::sub_seed(config.seed, "colorer"),
    )
    .map_err(|e| match e {
        StreamError::ConstructionFailure { .. } => CliError::Construction(e.to_string()),
        other => CliError::Config(other.to_string()),
    })?;
    let committed = coloring.committed();
    let coverage = check_coloring(&stream, committed);
    let sparsity = validate_sparsity(&stream, committed.len())
        .map_err(|e| CliError::Verification(e.to_string()))?;
    let guard = (4 * min_size).max(64);
    let audit = audit_solution(committed, &family, f.as_ref(), min_size, config.mode, guard)
        .map_err(|e| CliError::Verification(e.to_string()))?;

    let dir = &config.out_dir;
    fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    let path = dir.join("family.txt");
    let mut out = create(&path)?;
    write_family(&family, &mut out)
        .and_then(|_| out.flush())
        .map_err(|e| io_error(&path, e))?;

    let path = dir.join("stream.txt");
    let mut out = create(&path)?;
    let annotate = |j: usize| stream.origin(j).map(|(i, s)| format!("by {i} at {s}"));
    write_manifest(&stream, committed.len(), &annotate, &mut out)
        .and_then(|_| out.flush())
        .map_err(|e| io_error(&path, e))?;

    let path = dir.join("coloring.txt");
    let mut out = create(&path)?;
    write_coloring(&coloring, &mut out)
        .and_then(|_| out.flush())
        .map_err(|e| io_error(&path, e))?;

    let path = dir.join("sparsity.csv");
    let mut csv = String::from("m,n,count,bound\n");
    for (&(m, n), &count) in &sparsity.counts {
        writeln!(
            csv,
            "{m},{n},{count},{}",
            construction_bound(config.mode, b, m)
        )
        .expect("string write");
    }
    fs::write(&path, csv).map_err(|e| io_error(&path, e))?;

    let path = dir.join("audit.json");
    fs::write(&path, audit.to_json() + "\n").map_err(|e| io_error(&path, e))?;

    let over_bound = sparsity
        .counts
        .iter()
        .filter(|(&(m, _), &c)| c > construction_bound(config.mode, b, m))
        .count();
    let summary = RunSummary {
        min_size,
        committed_len: committed.len(),
        items_in_prefix: coverage.checked,
        sparsity_violations: sparsity.violations.len() + over_bound,
        max_counts: sparsity.max_count_by_size(),
        audit_translates: audit.summary.translates_checked,
        audit_violations: audit.summary.violations,
        stabilized: audit.summary.stabilized,
        vacuous: audit.summary.vacuous,
    };
    if !coverage.passed() {
        return Err(CliError::Verification(format!(
            "{} constraints monochromatic, first {:?}",
            coverage.violated.len(),
            &coverage.violated[..coverage.violated.len().min(5)]
        )));
    }
    if summary.sparsity_violations > 0 {
        return Err(CliError::Verification(format!(
            "{} sparsity violations",
            summary.sparsity_violations
        )));
    }
    if !audit.passed() {
        return Err(CliError::Verification(format!(
            "audit found {} homogeneous translates",
            audit.summary.violations
        )));
    }
    Ok(summary)
}

#[derive(Debug, Clone, Default)]
pub struct VerifySummary {
    /// Per size: constraints checked and constraints violated.
    pub by_size: BTreeMap<usize, (usize, usize)>,
    pub violated: Vec<usize>,
    /// Manifest constraints reaching past the committed prefix.
    pub skipped: usize,
    pub warnings: Vec<String>,
}

impl VerifySummary {
    pub fn render(&self) -> String {
        let mut out = String::new();
        for w in &self.warnings {
            writeln!(out, "warning: {w}").expect("string write");
        }
        for (m, (checked, bad)) in &self.by_size {
            writeln!(out, "size {m}: {checked} checked, {bad} violated").expect("string write");
        }
        if self.skipped > 0 {
            writeln!(
                out,
                "{} constraints extend past the committed prefix (not checked)",
                self.skipped
            )
            .expect("string write");
        }
        match self.violated.first() {
            None => writeln!(out, "all constraints satisfied").expect("string write"),
            Some(first) => writeln!(
                out,
                "{} violated constraints, first: item {first}",
                self.violated.len()
            )
            .expect("string write"),
        }
        out
    }
}

/// Re-checks every manifest constraint inside the coloring's committed prefix.
pub fn cmd_verify(coloring_path: &Path, stream_path: &Path) -> Result<VerifySummary, CliError> {
    let read = |p: &Path| fs::read_to_string(p).map_err(|e| io_error(p, e));
    let coloring = parse_coloring(&read(coloring_path)?).map_err(|e| CliError::Input {
        path: coloring_path.display().to_string(),
        message: e.to_string(),
    })?;
    let manifest = parse_manifest(&read(stream_path)?).map_err(|e| CliError::Input {
        path: stream_path.display().to_string(),
        message: e.to_string(),
    })?;
    let mut summary = VerifySummary::default();
    let stream = &manifest.stream;
    if stream.fingerprint() != coloring.fingerprint() {
        summary.warnings.push(format!(
            "coloring was made for stream {}, manifest describes {}",
            coloring.fingerprint(),
            stream.fingerprint()
        ));
    }
    let bits = coloring.committed();
    for item in stream.items() {
        if item.dom()[item.len() - 1] >= bits.len() {
            summary.skipped += 1;
            continue;
        }
        let entry = summary.by_size.entry(item.len()).or_insert((0, 0));
        entry.0 += 1;
        if !item.satisfied_by(bits) {
            entry.1 += 1;
            summary.violated.push(item.id());
        }
    }
    if summary.violated.is_empty() {
        Ok(summary)
    } else {
        Err(CliError::Verification(summary.render()))
    }
}

/// Text report of a bundled demonstration.
pub fn cmd_demo(name: &str) -> Result<String, CliError> {
    let mut out = String::new();
    match name {
        "pigeonhole" => {
            let report = pigeonhole_check(12).expect("valid range");
            writeln!(
                out,
                "E0 = {{0,1}}, E1 = {{0,2}}, all 2-colorings of [0, s+3) for s <= 12"
            )
            .unwrap();
            writeln!(out, "colorings checked: {}", report.colorings_checked).unwrap();
            writeln!(out, "{}", report.summary()).unwrap();
        }
        "baseline" => {
            let (a, b) = (1, 3);
            for announce in [0, 5] {
                let c = baseline_single_diag(a, b, announce, 24).expect("valid parameters");
                let prefix: String = c.iter().map(|&x| char::from(b'0' + x)).collect();
                writeln!(out, "a = {a}, b = {b}, announced at {announce}: {prefix}").unwrap();
                writeln!(out, "  s  c(a+s)  c(b+s)").unwrap();
                for (s, x, y) in baseline_witnesses(a, b, announce, &c) {
                    writeln!(
                        out,
                        "{s:>3}  {x:>6}  {y:>6}{}",
                        if x == y { "  HOMOGENEOUS" } else { "" }
                    )
                    .unwrap();
                }
            }
        }
        "lll-cert" => {
            let (vars, events) = fixtures::three_event_fixture();
            let r = vec![ratio::from_ratio(1, 3); events.len()];
            for q in [ratio::from_ratio(1, 1), ratio::from_ratio(3, 4)] {
                let verdict =
                    check_condition(&events, &vars, &r, &q).expect("fixture parameters are valid");
                let word = if verdict.is_accepted() {
                    "accepted"
                } else {
                    "refused"
                };
                writeln!(out, "three-event fixture, r = 1/3, q = {q}: {word}").unwrap();
                writeln!(out, "{}", verdict_json(&verdict)).unwrap();
            }
        }
        other => {
            return Err(CliError::Config(format!(
                "unknown demo '{other}' (pigeonhole, baseline, lll-cert)"
            )))
        }
    }
    Ok(out)
}
