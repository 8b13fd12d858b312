use std::process::Command;

fn qident(args: &[&str]) -> (String, i32) {
    let out = Command::new(env!("CARGO_BIN_EXE_qident")).args(args).output().unwrap();
    (String::from_utf8(out.stdout).unwrap(), out.status.code().unwrap_or(-1))
}

fn scratch(name: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("qident-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

/// Data rows of a CSV with its comment line and header removed.
fn rows(csv: &str) -> Vec<Vec<String>> {
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# seed="));
    lines.next().unwrap();
    lines.map(|l| l.split(',').map(str::to_owned).collect()).collect()
}

#[test]
fn epslim_defaults_give_one_row_near_two_point_four_percent() {
    let (out, status) = qident(&["epslim"]);
    assert_eq!(status, 0);
    assert_eq!(out.lines().nth(1), Some("s,delta,eps_max,eps_lim"));
    let r = rows(&out);
    assert_eq!(r.len(), 1);
    let lim: f64 = r[0][3].parse().unwrap();
    assert!((lim - 0.024).abs() < 0.001);
}

#[test]
fn tampered_vector_file_fails_verification() {
    let path = scratch("vectors.txt");
    let p = path.to_str().unwrap();
    let (_, status) = qident(&["auth-tag", "--trials", "4", "--vectors", p, "--seed", "3"]);
    assert_eq!(status, 0);
    assert_eq!(qident(&["auth-verify", "--vectors", p]).1, 0);

    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_owned).collect();
    let last = lines.last_mut().unwrap();
    let flipped = if last.ends_with('0') { '1' } else { '0' };
    last.pop();
    last.push(flipped);
    std::fs::write(&path, lines.join("\n")).unwrap();
    let (out, status) = qident(&["auth-verify", "--vectors", p]);
    assert_eq!(status, 1);
    assert!(rows(&out).iter().any(|r| r[4] == "0"));
}

#[test]
fn honest_protocol_two_at_full_scale_identifies_and_refuels() {
    let (out, status) = qident(&["protocol2", "--seed", "5"]);
    assert_eq!(status, 0);
    let r = rows(&out);
    assert_eq!(r.len(), 1);
    assert_eq!(r[0][1], "6250000");
    assert_eq!((r[0][3].as_str(), r[0][4].as_str()), ("1", "1"));
    let (consumed, gained): (u64, u64) = (r[0][5].parse().unwrap(), r[0][6].parse().unwrap());
    assert!(gained > consumed);
}

#[test]
fn intercept_resend_session_exits_with_abort_status() {
    let cfg = scratch("ir.cfg");
    std::fs::write(&cfg, "eve=intercept_resend:1.0\nn_pulses=100000\n").unwrap();
    let (out, status) = qident(&["protocol2", "--config", cfg.to_str().unwrap()]);
    assert_eq!(status, 1);
    assert_eq!(rows(&out)[0][7], "error_rate_too_high");
}

#[test]
fn bad_input_exits_with_two() {
    let cfg = scratch("bad.cfg");
    std::fs::write(&cfg, "mu=1.7\n").unwrap();
    assert_eq!(qident(&["budget", "--config", cfg.to_str().unwrap()]).1, 2);
    std::fs::write(&cfg, "colour=blue\n").unwrap();
    assert_eq!(qident(&["budget", "--config", cfg.to_str().unwrap()]).1, 2);
    assert_eq!(qident(&["teleport"]).1, 2);
    assert_eq!(qident(&["auth-verify"]).1, 2);
}

#[test]
fn seed_and_hash_are_echoed() {
    let (a, _) = qident(&["budget", "--seed", "9"]);
    let (b, _) = qident(&["budget", "--seed", "10"]);
    let head_a = a.lines().next().unwrap();
    assert!(head_a.starts_with("# seed=9 config_hash="));
    assert_ne!(head_a, b.lines().next().unwrap());
}

#[test]
fn impostor_protocol_one_aborts_at_pass_two() {
    let cfg = scratch("imp.cfg");
    std::fs::write(&cfg, "impostor=true\n").unwrap();
    let (out, status) = qident(&["protocol1", "--config", cfg.to_str().unwrap()]);
    assert_eq!(status, 1);
    assert!(rows(&out).iter().all(|r| r[5] == "AbortPass2"));
}
