use std::path::Path;
use std::process::{Command, Output};

fn duflot(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_duflot")).args(args).current_dir(dir).env_remove("DUFLOT_CAP").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn binom(n: u64, k: u64) -> u64 {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

#[test]
fn generate_is_deterministic_and_valid() {
    let dir = tempfile::tempdir().unwrap();
    let a = duflot(&["generate", "filtration", "--seed", "1"], dir.path());
    let b = duflot(&["generate", "filtration", "--seed", "1"], dir.path());
    assert!(a.status.success());
    assert!(!a.stdout.is_empty());
    assert_eq!(a.stdout, b.stdout);
    let c = duflot(&["generate", "filtration", "--seed", "2"], dir.path());
    assert_ne!(a.stdout, c.stdout);
    std::fs::write(dir.path().join("a.frf"), &a.stdout).unwrap();
    let o = duflot(&["check-filtration", "a.frf"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "valid\n");
}

#[test]
fn generated_z2_bundle_checks() {
    let dir = tempfile::tempdir().unwrap();
    let o = duflot(&["generate", "kbundle", "--seed", "2", "--k", "2", "-o", "b.kb"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = duflot(&["check-bundle", "b.kb", "--format", "tsv"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("group_order\t2\n"));
}

#[test]
fn pv_local_cohomology_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    for (p, w, r) in [(2u32, 2usize, 2usize), (3, 2, 1)] {
        let (ps, ws, rs) = (p.to_string(), w.to_string(), r.to_string());
        let o = duflot(&["generate", "pv", "--prime", &ps, "--w", &ws, "--rank", &rs, "--window", "-8:8", "-o", "pv.mod"], dir.path());
        assert!(o.status.success());
        let o = duflot(&["local-cohomology", "pv.mod", "--window", "-8:8", "--format", "tsv"], dir.path());
        assert_eq!(o.status.code(), Some(0));
        let sigma: i64 = if p == 2 { 1 } else { 2 };
        let text = stdout(&o);
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("i\tdegree\tdim"));
        let mut rows = 0;
        for line in lines {
            let f: Vec<&str> = line.split('\t').collect();
            let (i, d): (usize, i64) = (f[0].parse().unwrap(), f[1].parse().unwrap());
            // H^r = P_V^* shifted down by sigma * r; monomials of P_V in degree e
            let e = -d - sigma * r as i64;
            let expect = if i != r || e < 0 || e % sigma != 0 {
                0
            } else {
                binom((e / sigma) as u64 + r as u64 - 1, r as u64 - 1)
            };
            assert_eq!(f[2], expect.to_string(), "p={p} r={r} i={i} d={d}");
            rows += 1;
        }
        assert_eq!(rows, (w + 1) * 17);
    }
}

#[test]
fn bad_filtration_exits_one_with_violations() {
    let dir = tempfile::tempdir().unwrap();
    let o = duflot(&["generate", "filtration", "--seed", "1"], dir.path());
    let mut v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let s = &mut v["summands"][1][0]["shift"];
    *s = serde_json::json!(s.as_i64().unwrap() + 1);
    std::fs::write(dir.path().join("bad.frf"), v.to_string()).unwrap();
    let o = duflot(&["check-filtration", "bad.frf"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("iso"), "{}", stdout(&o));
    assert!(!o.stderr.is_empty());

    std::fs::write(dir.path().join("junk.frf"), "{\"kind\": \"filtration\", \"module\": 3}").unwrap();
    let o = duflot(&["check-filtration", "junk.frf"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("junk.frf") && err.contains("filtration") && err.contains("module"), "{err}");
}

#[test]
fn wreath_base_is_three_trivial() {
    let dir = tempfile::tempdir().unwrap();
    let o = duflot(&["generate", "group", "--prime", "3", "--n", "2", "-o", "w2p3.grp"], dir.path());
    assert!(o.status.success());
    let o = duflot(&["i-trivial", "w2p3.grp", "--H", "base", "--i", "3"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().next(), Some("true"));
    let o = duflot(&["i-trivial", "w2p3.grp", "--H", "base", "--i", "1"], dir.path());
    assert_eq!(stdout(&o).lines().next(), Some("false"));
}

#[test]
fn limits_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = duflot(&["wreath-tower", "--n", "3", "--cap", "100"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    duflot(&["generate", "group", "--n", "2", "-o", "w.grp"], dir.path());
    let o = Command::new(env!("CARGO_BIN_EXE_duflot")).args(["ptori", "w.grp"]).current_dir(dir.path()).env("DUFLOT_CAP", "10").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unknown_flags_are_errors() {
    let dir = tempfile::tempdir().unwrap();
    let o = duflot(&["tate", "--frobnicate"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(!o.stderr.is_empty());
    let o = duflot(&["tate", "--window", "2:1"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn tate_table_without_file() {
    let dir = tempfile::tempdir().unwrap();
    let o = duflot(&["tate", "--prange", "2,3", "--window", "-1:1", "--format", "tsv"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let want = "p\ti\ttrivial\tfree\n2\t-1\t1\t0\n2\t0\t1\t0\n2\t1\t1\t0\n3\t-1\t1\t0\n3\t0\t1\t0\n3\t1\t1\t0\n";
    assert_eq!(stdout(&o), want);
}
