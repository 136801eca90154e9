//! Config parsing and serialization of reports, series and tables.
//!
//! A CSV report is written as rows at `<stem>.csv`, aggregates at
//! `<stem>.agg.csv` and the manifest at `<stem>.manifest.json`. Floats use
//! Rust's shortest round-trip formatting, so reading a report back
//! reproduces it exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bootstrap::EmpiricalDistribution;
use crate::dgp::TimeSeriesPair;
use crate::error::{Error, Result};
use crate::harness::{Aggregate, ExperimentConfig, ExperimentReport, Row, RunManifest, AGGREGATE_COLUMNS, ROW_COLUMNS};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::config("format", format!("unknown format `{other}`"))),
        }
    }
}

pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_str(&text)
}

/// Parses and validates a JSON config; unknown and duplicate keys are errors.
pub fn parse_config_str(text: &str) -> Result<ExperimentConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::config(path, e.into_inner().to_string())
    })?;
    cfg.validate()?;
    Ok(cfg)
}

/// Parses a tagged enum given either as a JSON object or as a bare kind
/// name, so `wild` and `{"kind":"wild"}` are the same.
pub fn parse_tagged<T: serde::de::DeserializeOwned>(key: &str, text: &str) -> Result<T> {
    let text = text.trim();
    let json = if text.starts_with('{') { text.to_string() } else { serde_json::json!({ "kind": text }).to_string() };
    parse_json(key, &json)
}

/// Parses JSON, reporting errors at `key` plus the path inside the value.
pub fn parse_json<T: serde::de::DeserializeOwned>(key: &str, text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let path = if path == "." { key.to_string() } else { format!("{key}.{path}") };
        Error::config(path, e.into_inner().to_string())
    })
}

/// Sibling path with `suffix` in place of the extension: `out.csv` becomes
/// `out.agg.csv` for `suffix = "agg.csv"`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Writes `report`. CSV puts aggregates in `<stem>.agg.csv` and the
/// manifest in `<stem>.manifest.json`; JSON is a single document.
pub fn write_report(report: &ExperimentReport, path: &Path, format: Format) -> Result<()> {
    match format {
        Format::Json => write_file(path, report_json(report).as_bytes()),
        Format::Csv => {
            write_file(path, rows_csv(&report.rows).as_bytes())?;
            write_file(&sibling(path, "agg.csv"), aggregates_csv(&report.aggregates).as_bytes())?;
            let manifest = serde_json::to_string_pretty(&report.manifest).expect("manifest serializes");
            write_file(&sibling(path, "manifest.json"), manifest.as_bytes())
        }
    }
}

pub fn read_report(path: &Path, format: Format) -> Result<ExperimentReport> {
    match format {
        Format::Json => {
            serde_json::from_str(&read_file(path)?).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
        }
        Format::Csv => {
            let rows = parse_rows_csv(&read_file(path)?)?;
            let aggregates = parse_aggregates_csv(&read_file(&sibling(path, "agg.csv"))?)?;
            let mpath = sibling(path, "manifest.json");
            let manifest: RunManifest = serde_json::from_str(&read_file(&mpath)?)
                .map_err(|e| Error::Format(format!("{}: {e}", mpath.display())))?;
            Ok(ExperimentReport { experiment: manifest.config.experiment.as_str().into(), rows, aggregates, manifest })
        }
    }
}

pub fn report_json(report: &ExperimentReport) -> String {
    serde_json::to_string_pretty(report).expect("report serializes")
}

/// Wall-clock record kept beside the data files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunTiming {
    pub config_digest: String,
    /// Seconds since the Unix epoch.
    pub start: f64,
    pub end: f64,
    pub wall_seconds: f64,
    pub threads: usize,
}

pub fn write_timing(timing: &RunTiming, data_path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(timing).expect("timing serializes");
    write_file(&sibling(data_path, "run.json"), text.as_bytes())
}

fn num(x: f64) -> String {
    format!("{x:?}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn rows_csv(rows: &[Row]) -> String {
    let mut s = ROW_COLUMNS.join(",");
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.experiment,
            r.cell_id,
            r.n,
            num(r.c),
            num(r.gamma),
            num(r.beta),
            num(r.sigma_uv),
            num(r.rho_u),
            r.method,
            r.scheme,
            r.rep,
            opt(r.estimate),
            opt(r.statistic),
            opt(r.pvalue),
            r.reject.map(|b| b.to_string()).unwrap_or_default(),
        );
    }
    s
}

pub fn aggregates_csv(aggs: &[Aggregate]) -> String {
    let mut s = AGGREGATE_COLUMNS.join(",");
    s.push('\n');
    for a in aggs {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            a.cell_id,
            opt(a.rejection_rate),
            opt(a.se),
            opt(a.ks),
            a.excluded,
            opt(a.mean),
            opt(a.variance),
            a.count,
            a.label,
            a.n,
        );
    }
    s
}

struct Fields<'a> {
    line: usize,
    it: std::str::Split<'a, char>,
}

impl<'a> Fields<'a> {
    fn next_str(&mut self) -> Result<&'a str> {
        self.it.next().ok_or_else(|| Error::Format(format!("line {}: too few fields", self.line)))
    }

    fn parse<T: FromStr>(&mut self) -> Result<T> {
        let line = self.line;
        let f = self.next_str()?;
        f.parse().map_err(|_| Error::Format(format!("line {line}: cannot parse `{f}`")))
    }

    fn opt<T: FromStr>(&mut self) -> Result<Option<T>> {
        let line = self.line;
        match self.next_str()? {
            "" => Ok(None),
            f => f.parse().map(Some).map_err(|_| Error::Format(format!("line {line}: cannot parse `{f}`"))),
        }
    }

    fn finish(mut self) -> Result<()> {
        match self.it.next() {
            None => Ok(()),
            Some(_) => Err(Error::Format(format!("line {}: too many fields", self.line))),
        }
    }
}

fn records<'a>(text: &'a str, header: &[&str]) -> Result<Vec<Fields<'a>>> {
    let mut lines = text.lines();
    let head = lines.next().ok_or_else(|| Error::Format("missing header".into()))?;
    if head != header.join(",") {
        return Err(Error::Format(format!("unexpected header `{head}`")));
    }
    Ok(lines
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| Fields { line: i + 2, it: l.split(',') })
        .collect())
}

pub fn parse_rows_csv(text: &str) -> Result<Vec<Row>> {
    records(text, &ROW_COLUMNS)?
        .into_iter()
        .map(|mut f| {
            let row = Row {
                experiment: f.next_str()?.into(),
                cell_id: f.parse()?,
                n: f.parse()?,
                c: f.parse()?,
                gamma: f.parse()?,
                beta: f.parse()?,
                sigma_uv: f.parse()?,
                rho_u: f.parse()?,
                method: f.next_str()?.into(),
                scheme: f.next_str()?.into(),
                rep: f.parse()?,
                estimate: f.opt()?,
                statistic: f.opt()?,
                pvalue: f.opt()?,
                reject: f.opt()?,
            };
            f.finish()?;
            Ok(row)
        })
        .collect()
}

pub fn parse_aggregates_csv(text: &str) -> Result<Vec<Aggregate>> {
    records(text, &AGGREGATE_COLUMNS)?
        .into_iter()
        .map(|mut f| {
            let agg = Aggregate {
                cell_id: f.parse()?,
                rejection_rate: f.opt()?,
                se: f.opt()?,
                ks: f.opt()?,
                excluded: f.parse()?,
                mean: f.opt()?,
                variance: f.opt()?,
                count: f.parse()?,
                label: f.next_str()?.into(),
                n: f.parse()?,
            };
            f.finish()?;
            Ok(agg)
        })
        .collect()
}

/// Series CSV with header `y,x` and an optional leading `# x0=VALUE` line.
pub fn pair_csv(data: &TimeSeriesPair) -> String {
    let mut s = String::new();
    if data.x0 != 0.0 {
        let _ = writeln!(s, "# x0={}", num(data.x0));
    }
    s.push_str("y,x\n");
    for (y, x) in data.y.iter().zip(&data.x) {
        let _ = writeln!(s, "{},{}", num(*y), num(*x));
    }
    s
}

pub fn write_pair_csv(data: &TimeSeriesPair, path: &Path) -> Result<()> {
    write_file(path, pair_csv(data).as_bytes())
}

pub fn read_pair_csv(path: &Path) -> Result<TimeSeriesPair> {
    parse_pair_csv(&read_file(path)?)
}

/// Missing x0 defaults to 0.
pub fn parse_pair_csv(text: &str) -> Result<TimeSeriesPair> {
    let mut x0 = 0.0;
    let mut y = Vec::new();
    let mut x = Vec::new();
    let mut header = false;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(meta) = line.strip_prefix('#') {
            if let Some(v) = meta.trim().strip_prefix("x0=") {
                x0 = v.trim().parse().map_err(|_| Error::Format(format!("line {}: bad x0 `{v}`", i + 1)))?;
            }
            continue;
        }
        if !header {
            if line.replace(' ', "") != "y,x" {
                return Err(Error::Format(format!("line {}: expected header `y,x`, got `{line}`", i + 1)));
            }
            header = true;
            continue;
        }
        let mut f = Fields { line: i + 1, it: line.split(',') };
        y.push(f.parse::<f64>()?);
        x.push(f.parse::<f64>()?);
        f.finish()?;
    }
    if !header {
        return Err(Error::Format("missing header `y,x`".into()));
    }
    TimeSeriesPair::new(y, x, x0).map_err(|e| Error::Format(e.to_string()))
}

/// Quantile table with columns `q,value`.
pub fn quantile_table(dist: &EmpiricalDistribution, levels: &[f64]) -> String {
    let mut s = String::from("q,value\n");
    for &q in levels {
        let _ = writeln!(s, "{},{}", num(q), num(dist.quantile(q)));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = parse_config_str(r#"{"experiment":"size","n":[250],"c":[0],"beta":[0],"R":100,"seed":1}"#).unwrap();
        assert_eq!(cfg.c_z, -1.0);
        assert_eq!(cfg.gamma_z, 0.95);
        assert_eq!(cfg.alpha, 0.05);
        assert_eq!(cfg.r, 100);
        assert_eq!(cfg.bootstrap_size(), 399);
        assert!(cfg.scheme.is_none());
        let with_ref = parse_config_str(
            r#"{"experiment":"limit_match","n":[50],"R":10,"seed":1,"reference":{"kind":"df_ratio"}}"#,
        )
        .unwrap();
        let r = with_ref.reference.unwrap();
        assert_eq!((r.n_steps, r.draws), (2000, 20000));
    }

    #[test]
    fn config_errors_name_the_key() {
        let e = parse_config_str(r#"{"experiment":"size","n":[250],"R":10,"seed":1,"gamma_z":1.5}"#).unwrap_err();
        assert!(matches!(&e, Error::Config { path, .. } if path == "gamma_z"), "{e}");
        let e = parse_config_str(r#"{"experiment":"size","n":[250],"R":10,"seed":1,"bogus":1}"#).unwrap_err();
        assert!(e.to_string().contains("bogus"), "{e}");
        let e = parse_config_str(r#"{"experiment":"size","n":[250],"n":[100],"R":10,"seed":1}"#).unwrap_err();
        assert!(e.to_string().contains("duplicate"), "{e}");
        let e = parse_config_str(r#"{"experiment":"size","n":[250],"R":10,"seed":1,"B":99}"#).unwrap_err();
        assert!(matches!(&e, Error::Config { path, .. } if path == "B"), "{e}");
        let e = parse_config_str(r#"{"experiment":"size","n":[250],"R":0,"seed":1}"#).unwrap_err();
        assert!(matches!(&e, Error::Config { path, .. } if path == "R"), "{e}");
        let e = parse_config_str(r#"{"experiment":"size","n":[250],"R":5,"seed":1,"alpha":1.0}"#).unwrap_err();
        assert!(matches!(&e, Error::Config { path, .. } if path == "alpha"), "{e}");
        let e = parse_config_str(r#"{"experiment":"size","n":[],"R":5,"seed":1}"#).unwrap_err();
        assert!(matches!(&e, Error::Config { path, .. } if path == "n"), "{e}");
        let e = parse_config_str(r#"{"experiment":"size","n":[250],"R":"x","seed":1}"#).unwrap_err();
        assert!(matches!(&e, Error::Config { path, .. } if path == "R"), "{e}");
    }

    #[test]
    fn empty_report_is_header_only() {
        assert_eq!(rows_csv(&[]), format!("{}\n", ROW_COLUMNS.join(",")));
        assert_eq!(parse_rows_csv(&rows_csv(&[])).unwrap(), vec![]);
    }

    #[test]
    fn pair_csv_round_trip() {
        let d = TimeSeriesPair::new(vec![0.1, -2.5e-17, 3.0], vec![1.0, 1.0 / 3.0, -7.25], 0.5).unwrap();
        let back = parse_pair_csv(&pair_csv(&d)).unwrap();
        assert_eq!((back.y, back.x, back.x0), (d.y.clone(), d.x.clone(), 0.5));
        let no_x0 = parse_pair_csv("y,x\n1,2\n3,4\n").unwrap();
        assert_eq!(no_x0.x0, 0.0);
        assert!(parse_pair_csv("a,b\n1,2\n").is_err());
        assert!(parse_pair_csv("y,x\n1,2,3\n").is_err());
        assert!(parse_pair_csv("y,x\n1,zz\n").is_err());
    }

    #[test]
    fn quantile_table_columns() {
        let d = EmpiricalDistribution::new(vec![1.0, 2.0, 3.0, 4.0], "t");
        assert_eq!(quantile_table(&d, &[0.25, 0.5, 1.0]), "q,value\n0.25,1.0\n0.5,2.0\n1.0,4.0\n");
    }

    #[test]
    fn tagged_arguments() {
        use crate::bootstrap::SchemeKind;
        assert_eq!(parse_tagged::<SchemeKind>("scheme", "wild").unwrap(), SchemeKind::Wild);
        assert_eq!(
            parse_tagged::<SchemeKind>("scheme", r#"{"kind":"residual_block","b":5}"#).unwrap(),
            SchemeKind::ResidualBlock { b: 5, mu_hat: 0.0 }
        );
        let e = parse_tagged::<SchemeKind>("scheme", "nope").unwrap_err();
        assert!(matches!(e, Error::Config { .. }));
    }

    #[test]
    fn sibling_paths() {
        assert_eq!(sibling(Path::new("/a/out.csv"), "agg.csv"), PathBuf::from("/a/out.agg.csv"));
        assert_eq!(sibling(Path::new("out"), "run.json"), PathBuf::from("out.run.json"));
    }
}
