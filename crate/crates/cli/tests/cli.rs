use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::path::Path;
use std::process::{Command, Output};
use std::thread;

fn gl3eis(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gl3eis")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

#[test]
fn level_counts_up_to_919() {
    let o = gl3eis(&["levels", "--max-norm", "919"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert_eq!(out.lines().next(), Some("level,conjugate"));
    // 555 ideals, 47 of them self-conjugate, agreeing with the ideal-counting
    // function of Z[ω]
    assert_eq!(out.lines().count() - 1, 301);
    let all = gl3eis(&["levels", "--max-norm", "919", "--all"]);
    assert_eq!(stdout(&all).lines().count() - 1, 555);
    let t = gl3eis(&["levels", "--max-norm", "919", "--format", "table"]);
    assert_eq!(stdout(&t).lines().next(), Some("555 ideals, 301 up to conjugation"));
}

#[test]
fn conjugate_pairs_keep_the_smaller_label() {
    let o = gl3eis(&["levels", "--min-norm", "73", "--max-norm", "73"]);
    assert_eq!(stdout(&o), "level,conjugate\n\"[73,8,1]\",\"[73,64,1]\"\n");
    let o = gl3eis(&["levels", "--max-norm", "1"]);
    assert_eq!(stdout(&o), "level,conjugate\n\"[1,0,1]\",\"[1,0,1]\"\n");
    // self-conjugate levels appear once
    let o = gl3eis(&["levels", "--min-norm", "49", "--max-norm", "49", "--all"]);
    assert_eq!(stdout(&o).lines().count() - 1, 3);
    let o = gl3eis(&["levels", "--min-norm", "49", "--max-norm", "49"]);
    assert_eq!(stdout(&o), "level,conjugate\n\"[49,0,7]\",\"[49,0,7]\"\n\"[49,18,1]\",\"[49,30,1]\"\n");
}

#[test]
fn invalid_input_exits_3() {
    for args in [
        &["hecke", "--level", "[7,5,1]"][..],
        &["hecke", "--level", "73"],
        &["hecke"],
        &["hecke", "--level", "[7,4,1]", "--budget", "0"],
        &["cohomology", "--max-norm", "1001"],
        &["hecke", "--level", "[1009,374,1]"],
        &["levels", "--max-norm", "5000"],
        &["classify", "--level", "[7,4,1]", "--bogus"],
        &["frobnicate"],
    ] {
        let o = gl3eis(args);
        assert_eq!(code(&o), 3, "{args:?}: {}", stderr(&o));
        assert!(stdout(&o).is_empty(), "{args:?}");
    }
    assert_eq!(code(&gl3eis(&["--help"])), 0);
    assert_eq!(code(&gl3eis(&["--version"])), 0);
}

#[test]
fn cohomology_up_to_norm_100() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().to_str().unwrap();
    let args = ["cohomology", "--max-norm", "100", "--jobs", "2", "--cache", cache];
    let o = gl3eis(&args);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = stdout(&o);
    let nonzero: Vec<&str> = out.lines().skip(1).filter(|l| !l.ends_with(",0")).collect();
    assert_eq!(
        nonzero,
        [
            "\"[49,18,1]\",\"[49,30,1]\",2",
            "\"[73,8,1]\",\"[73,64,1]\",2",
            "\"[75,5,5]\",\"[75,5,5]\",2",
            "\"[81,0,9]\",\"[81,0,9]\",2",
        ]
    );
    assert!(dir.path().join("cohomology").join("49_18_1.txt").exists());
    let warm = gl3eis(&args);
    assert_eq!(warm.stdout, o.stdout);
}

/// Golden Hecke polynomials at the level of conductor of 73.1-a3.
#[test]
fn hecke_at_73_cold_and_warm() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().to_str().unwrap();
    let args = ["hecke", "--level", "[73,8,1]", "--prime-bound", "13", "--cache", cache];
    let cold = gl3eis(&args);
    assert_eq!(code(&cold), 0, "{}", stderr(&cold));
    let out = stdout(&cold);
    assert_eq!(out.lines().next(), Some("level,class,field,dimension,prime,a1,a2,polynomial"));
    let at3: Vec<&str> = out.lines().filter(|l| l.contains("\"[3,1,1]\"")).map(|l| l.rsplit(',').next().unwrap()).collect();
    let mut at3 = at3;
    at3.sort();
    assert_eq!(at3, ["-27t^3+21t^2+5t+1", "-27t^3-15t^2-7t+1"]);
    // six good primes of norm at most 13, two classes
    assert_eq!(out.lines().count(), 1 + 2 * 6);
    assert!(dir.path().join("hecke").join("73_8_1").join("T3_1_1_1.txt").exists());

    let warm = gl3eis(&args);
    assert_eq!(warm.stdout, cold.stdout);

    let mut table_args = args.to_vec();
    table_args.extend(["--format", "table"]);
    let table = stdout(&gl3eis(&table_args));
    assert!(table.contains("HNF(p)"), "{table}");
    assert!(table.lines().any(|l| l.trim() == "[3,1,1]       -27t^3-15t^2-7t+1"), "{table}");
}

#[test]
fn classify_at_49() {
    let o = gl3eis(&["classify", "--level", "[49,18,1]", "--prime-bound", "13"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(stdout(&o), "level,conjugate,d3,d3_new,g_prim,c2_new,delta\n\"[49,18,1]\",\"[49,30,1]\",2,2,1,0,0\n");
}

/// Takes about twenty minutes on one core.
#[test]
#[ignore]
fn classify_at_147_has_no_new_classes() {
    let o = gl3eis(&["classify", "--level", "[147,67,1]", "--prime-bound", "13"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = stdout(&o);
    let row: Vec<&str> = out.lines().nth(1).unwrap().rsplitn(6, ',').collect();
    // fields from the right: delta, c2_new, g_prim, d3_new, d3
    assert_eq!(row[4], "6", "{out}");
    assert_eq!(row[3], "0", "{out}");
}

#[test]
fn offline_fetch_of_unknown_label_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let o = gl3eis(&["fetch", "curve", "999.9-z9", "--offline", "--cache", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("unknown curve label 999.9-z9"), "{}", stderr(&o));
    assert!(stdout(&o).is_empty());
    // built-in curves need no network
    let o = gl3eis(&["fetch", "curve", "73.1-a3", "--offline"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).starts_with("curve|73.1-a3|[73,8,1]|paper|"));
}

/// Answers a single HTTP request with `body`, returning the request line.
fn serve_once(body: &'static str) -> (String, thread::JoinHandle<String>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let base = format!("http://{}", listener.local_addr().unwrap());
    let handle = thread::spawn(move || {
        let (mut stream, _) = listener.accept().unwrap();
        let mut reader = BufReader::new(stream.try_clone().unwrap());
        let mut request = String::new();
        reader.read_line(&mut request).unwrap();
        let mut line = String::new();
        while reader.read_line(&mut line).unwrap() > 2 {
            line.clear();
        }
        write!(stream, "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}", body.len()).unwrap();
        let _ = stream.flush();
        let mut rest = Vec::new();
        let _ = stream.read_to_end(&mut rest);
        request
    });
    (base, handle)
}

fn fetch_with(base: &str, cache: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["fetch", "curve", "27.1-CMa1", "--cache", cache.to_str().unwrap()];
    args.extend(extra);
    Command::new(env!("CARGO_BIN_EXE_gl3eis")).args(&args).env("GL3EIS_LMFDB_URL", base).output().unwrap()
}

#[test]
fn fetched_records_are_cached() {
    let (base, server) = serve_once(r#"{"data": [{"ainvs": "0,0;0,0;1,0;0,0;0,0", "conductor_ideal": "[27,3,3]", "cm": -3}]}"#);
    let dir = tempfile::tempdir().unwrap();
    let o = fetch_with(&base, dir.path(), &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let request = server.join().unwrap();
    assert!(request.starts_with("GET /api/ec_nfcurves/?label=2.0.3.1-27.1-CMa1&_format=json "), "{request}");
    let record = stdout(&o);
    assert_eq!(record, "curve|27.1-CMa1|[27,3,3]|lmfdb|cm=1|0,0;0,0;1,0;0,0;0,0\n");
    // the server is gone, so this can only come from the cache
    let again = fetch_with(&base, dir.path(), &["--offline"]);
    assert_eq!(code(&again), 0, "{}", stderr(&again));
    assert_eq!(stdout(&again), record);
}
