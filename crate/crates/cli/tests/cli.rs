use std::path::Path;
use std::process::{Command, Output};

fn ivxboot(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ivxboot")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write(path: &Path, text: &str) -> String {
    std::fs::write(path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn limits_prints_quantile_table() {
    let o = ivxboot(&["limits", "--kind", "dfxi", "--N", "200", "--M", "2000", "--seed", "7"]);
    assert!(o.status.success(), "{o:?}");
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("q,value"));
    let rows: Vec<(f64, f64)> = lines
        .map(|l| {
            let (q, v) = l.split_once(',').unwrap();
            (q.parse().unwrap(), v.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 15);
    assert!(rows.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 <= w[1].1));
    let again = ivxboot(&["limits", "--kind", "dfxi", "--N", "200", "--M", "2000", "--seed", "7"]);
    assert_eq!(again.stdout, o.stdout);
}

#[test]
fn estimate_recovers_zero_noise_slope() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("y,x\n");
    let mut prev = 0.0;
    for t in 1..=50 {
        let x = (t as f64 * 0.7).sin() + 0.1 * t as f64;
        csv.push_str(&format!("{},{}\n", 0.5 * prev, x));
        prev = x;
    }
    let input = write(&dir.path().join("pair.csv"), &csv);
    for method in ["ivx", "ols"] {
        let o = ivxboot(&["estimate", "--method", method, "--input", &input]);
        assert!(o.status.success(), "{o:?}");
        assert_eq!(stdout(&o).trim(), "0.5");
    }
}

#[test]
fn exit_codes() {
    assert_eq!(ivxboot(&["frobnicate"]).status.code(), Some(1));
    assert!(!ivxboot(&["frobnicate"]).stderr.is_empty());
    assert_eq!(ivxboot(&[]).status.code(), Some(1));
    assert_eq!(ivxboot(&["--help"]).status.code(), Some(0));
    let dir = tempfile::tempdir().unwrap();
    let bad = write(&dir.path().join("bad.json"), r#"{"experiment":"size","n":[50],"R":5,"seed":1,"gamma_z":1.5}"#);
    let out = dir.path().join("o.csv");
    let o = ivxboot(&["mc", "--config", &bad, "--output", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("gamma_z"));
    let missing = dir.path().join("none.json");
    assert_eq!(ivxboot(&["mc", "--config", missing.to_str().unwrap(), "--output", "x"]).status.code(), Some(2));
    let zeros = write(&dir.path().join("z.csv"), "y,x\n1,0\n2,0\n3,0\n");
    assert_eq!(ivxboot(&["estimate", "--method", "ols", "--input", &zeros]).status.code(), Some(3));
    let garbled = write(&dir.path().join("g.csv"), "y,x\n1,abc\n");
    assert_eq!(ivxboot(&["estimate", "--method", "ols", "--input", &garbled]).status.code(), Some(2));
}

#[test]
fn simulate_then_bootstrap_test() {
    let dir = tempfile::tempdir().unwrap();
    let pair = dir.path().join("p.csv");
    let o = ivxboot(&[
        "simulate",
        "--n",
        "120",
        "--c",
        "-5",
        "--sigma-uv",
        "-0.5",
        "--x0",
        "0.25",
        "--seed",
        "3",
        "--output",
        pair.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{o:?}");
    let text = std::fs::read_to_string(&pair).unwrap();
    assert!(text.starts_with("# x0=0.25\ny,x\n"));
    assert_eq!(text.lines().count(), 122);
    let o = ivxboot(&["boot-test", "--input", pair.to_str().unwrap(), "--scheme", "wild", "-B", "99", "--seed", "4"]);
    assert!(o.status.success(), "{o:?}");
    let out = stdout(&o);
    let fields: Vec<&str> = out.lines().nth(1).unwrap().split(',').collect();
    let p: f64 = fields[2].parse().unwrap();
    assert!((0.0..=1.0).contains(&p));
    assert_eq!(fields[3], "99");
    let o =
        ivxboot(&["boot-test", "--input", pair.to_str().unwrap(), "--stat", "fm_t", "--scheme", "sieve", "-B", "19"]);
    assert!(o.status.success(), "{o:?}");
}

#[test]
fn mc_writes_data_manifest_and_timing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(&dir.path().join("c.json"), r#"{"experiment":"size","n":[60],"c":[0,-5],"R":20,"seed":2}"#);
    let out = dir.path().join("run.csv");
    let o = ivxboot(&["mc", "--config", &cfg, "--output", out.to_str().unwrap()]);
    assert!(o.status.success(), "{o:?}");
    for f in ["run.csv", "run.agg.csv", "run.manifest.json", "run.run.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let rows = std::fs::read_to_string(&out).unwrap();
    assert_eq!(rows.lines().count(), 41);
    assert!(rows.starts_with(
        "experiment,cell_id,n,c,gamma,beta,sigma_uv,rho_u,method,scheme,rep,estimate,statistic,pvalue,reject\n"
    ));
    let json = dir.path().join("run.json");
    let o = ivxboot(&["mc", "--config", &cfg, "--output", json.to_str().unwrap(), "--format", "json"]);
    assert!(o.status.success(), "{o:?}");
    assert!(std::fs::read_to_string(&json).unwrap().contains("\"config_digest\""));
}
