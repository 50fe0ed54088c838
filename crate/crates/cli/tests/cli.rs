use std::process::Command;

use eh_glue::config::{parse_config, Resolver};
use eh_glue::report::{Budget, Check, Criterion, Json, Report, Table};
use eh_glue::RunError;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_eh-glue"))
}

#[test]
fn config_parses_comments_and_blank_lines() {
    let m = parse_config("# header\ncutoff = 12  # shells\n\nfit_epsilons=0.05,0.1\n").unwrap();
    assert_eq!(m["cutoff"], "12");
    assert_eq!(m["fit-epsilons"], "0.05,0.1");
    assert!(matches!(parse_config("cutoff 12"), Err(RunError::Config { .. })));
    assert!(matches!(parse_config("a=1\na=2"), Err(RunError::Config { key, .. }) if key == "a"));
}

#[test]
fn flags_override_file_values() {
    let mut r = Resolver::new(parse_config("cutoff = 12\ndelta = 0.2").unwrap());
    assert_eq!(r.get("cutoff", Some(20usize), 40).unwrap(), 20);
    assert_eq!(r.get("delta", None, 0.3).unwrap(), 0.2);
    assert_eq!(r.get("order", None, 24usize).unwrap(), 24);
    let echo = r.finish().unwrap();
    assert_eq!(echo["cutoff"], Json::Int(20));
}

#[test]
fn unknown_and_malformed_keys_are_named() {
    let mut r = Resolver::new(parse_config("cutof = 12").unwrap());
    r.get("cutoff", None, 40usize).unwrap();
    assert_eq!(r.finish(), Err(RunError::config("cutof", "unknown key for this subcommand")));
    let mut r = Resolver::new(parse_config("cutoff = x").unwrap());
    assert!(matches!(r.get("cutoff", None, 40usize), Err(RunError::Config { key, .. }) if key == "cutoff"));
}

#[test]
fn canonical_json_sorts_keys_and_fixes_float_format() {
    let j = Json::obj([("b", Json::Num(0.1)), ("a", Json::Int(3)), ("c", Json::Num(f64::NAN))]);
    assert_eq!(j.encode(), "{\n  \"a\": 3,\n  \"b\": 1.0000000000000001e-1,\n  \"c\": \"NaN\"\n}\n");
    let parsed: serde_json::Value = serde_json::from_str(&j.encode()).unwrap();
    assert_eq!(parsed["b"].as_f64(), Some(0.1));
}

#[test]
fn pass_flags_follow_from_value_and_tolerance() {
    assert!(Check::new("a", 1.01, Criterion::Rel { reference: 1.0, tol: 0.02 }).pass);
    assert!(!Check::new("a", 1.03, Criterion::Rel { reference: 1.0, tol: 0.02 }).pass);
    assert!(Check::new("a", 2.0, Criterion::AtMost(2.0)).pass);
    assert!(!Check::new("a", f64::NAN, Criterion::AtMost(2.0)).pass);
    let mut rep = Report::new("t", Default::default());
    rep.result("x", 1.0, Budget::Exact);
    rep.check(Check::flag("ok", true));
    assert!(rep.pass());
    rep.check(Check::flag("bad", false));
    assert_eq!(rep.failing(), vec!["bad"]);
    assert!(rep.encode().contains("\"budget\": \"exact\""));
}

#[test]
fn csv_table_has_header_and_rows() {
    let mut t = Table::new(&["t", "epsilon", "pred_sup_rm", "ric_proxy"], Budget::Exact);
    t.push(vec![-1e4, 0.025, 3e4, 4e-4]);
    let s = t.to_csv();
    let mut lines = s.lines();
    assert_eq!(lines.next(), Some("t,epsilon,pred_sup_rm,ric_proxy"));
    assert_eq!(lines.next().unwrap().split(',').count(), 4);
}

#[test]
fn omega_subcommand_passes_and_is_canonical() {
    let out = bin().args(["omega", "--cutoff", "40"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["task"], "omega");
    assert_eq!(v["pass"], true);
    assert!(v.get("wall_clock_s").is_none());
    let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
}

#[test]
fn malformed_flag_exits_2_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let out = bin().args(["omega", "--cutoff", "-3", "--output"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--cutoff"));
    assert!(!path.exists());
}

#[test]
fn config_errors_exit_2_and_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.cfg");
    let path = dir.path().join("r.json");
    std::fs::write(&cfg, "radii = 0.25, -1\n").unwrap();
    let out = bin().args(["dist-laplace", "--config"]).arg(&cfg).arg("--output").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`radii`"));
    assert!(!path.exists());
    std::fs::write(&cfg, "epsilon = 0.2\ndelta = 0.3\n").unwrap();
    let out = bin().args(["flux", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn failing_checks_exit_3_and_name_the_suite() {
    // an extrapolation from 8 shells misses 7.70 ± 0.05
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let out = bin().args(["omega", "--cutoff", "8", "--output"]).arg(&path).output().unwrap();
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
    if v["pass"] == false {
        assert_eq!(out.status.code(), Some(3));
        assert!(String::from_utf8_lossy(&out.stderr).contains("suite omega"));
    } else {
        assert_eq!(out.status.code(), Some(0));
    }
}

#[test]
fn flow_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("flow.csv");
    let out = bin().args(["flow", "--proxy-times=-1e4,-1e5", "--csv"]).arg(&csv).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,epsilon,pred_sup_rm,ric_proxy");
    assert_eq!(lines.len(), 3);
}

#[test]
fn thread_count_does_not_change_reports() {
    let run = |n: &str| bin().args(["heat", "--threads", n]).output().unwrap().stdout;
    assert_eq!(run("1"), run("3"));
}

#[test]
fn report_summarizes_pass_flags() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("omega.json");
    let out = bin().args(["dist-laplace", "--output"]).arg(&a).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let out = bin().arg("report").arg(&a).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["checks"]["dist-laplace:omega"]["pass"], true);
    let out = bin().args(["report"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn background_cache_roundtrips_through_the_directory() {
    let dir = tempfile::tempdir().unwrap();
    let run = || {
        bin()
            .args(["background", "--cutoff", "2", "--delta", "0.3"])
            .env("EH_GLUE_CACHE_DIR", dir.path())
            .output()
            .unwrap()
    };
    let first = run();
    assert_eq!(first.status.code(), Some(0), "{}", String::from_utf8_lossy(&first.stderr));
    let files: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
    assert_eq!(files.len(), 1);
    let second = run();
    assert!(String::from_utf8_lossy(&second.stderr).contains("cache hit"));
    assert_eq!(first.stdout, second.stdout);
    // a corrupted file is rebuilt
    let f = files[0].as_ref().unwrap().path();
    std::fs::write(&f, b"junk").unwrap();
    let third = run();
    assert_eq!(third.status.code(), Some(0));
    assert_eq!(first.stdout, third.stdout);
}
