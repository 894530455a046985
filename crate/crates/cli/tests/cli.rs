use std::process::{Command, Output};

const HEADER: &str = "detector,threshold,pfa_hat,pfa_se,add_hat,add_se,m2_hat,m2_se,reps,censored,seed";

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_shiryaev-hmm"))
}

fn config(id: u8) -> String {
    format!("{}/../../configs/example{id}.toml", env!("CARGO_MANIFEST_DIR"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn simulate_writes_the_report() {
    let c = config(1);
    let o = run(&["simulate", "--config", &c, "--reps", "300", "--seed", "4"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), HEADER);
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row.len(), 11);
    assert_eq!(row[0], "shiryaev");
    assert_eq!(row[8], "300");
    assert_eq!(row[10], "4");
}

#[test]
fn simulate_to_file_is_thread_independent() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(2);
    let mut outs = Vec::new();
    for threads in ["1", "3"] {
        let path = dir.path().join(format!("t{threads}.csv"));
        let p = path.to_str().unwrap();
        let o = run(&["simulate", "--config", &c, "--reps", "200", "--threads", threads, "--out", p]);
        assert!(o.status.success(), "{}", stderr(&o));
        outs.push(std::fs::read_to_string(&path).unwrap());
    }
    assert_eq!(outs[0], outs[1]);
}

#[test]
fn missing_config_is_a_config_error() {
    let o = run(&["simulate"]);
    assert!(!o.status.success());
    assert!(stderr(&o).starts_with("error[config]"), "{}", stderr(&o));
    let o = run(&["simulate", "--config", "/nonexistent/x.toml"]);
    assert!(!o.status.success());
    assert!(stderr(&o).starts_with("error["), "{}", stderr(&o));
}

#[test]
fn malformed_config_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    let text = std::fs::read_to_string(config(1)).unwrap().replace("rho = 0.1", "rho = 2.0");
    std::fs::write(&path, text).unwrap();
    let o = run(&["simulate", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error["), "{}", stderr(&o));
    std::fs::write(&path, "[model]\nnot = valid").unwrap();
    let o = run(&["simulate", "--config", path.to_str().unwrap()]);
    assert!(stderr(&o).starts_with("error[config]"), "{}", stderr(&o));
}

#[test]
fn bad_arguments_are_argument_errors() {
    let o = run(&["example", "7"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("error[argument]"), "{}", stderr(&o));
}

#[test]
fn oracle_requires_bernoulli_emissions() {
    let c = config(1);
    let o = run(&["oracle", "--config", &c, "--horizon", "6"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("threshold,horizon,pfa,p_censored\n"));
    let c = config(2);
    let o = run(&["oracle", "--config", &c, "--horizon", "6"]);
    assert!(!o.status.success());
    assert!(stderr(&o).starts_with("error[argument]"), "{}", stderr(&o));
}

#[test]
fn diagnose_and_asymptotics_produce_tables() {
    let c = config(2);
    let o = run(&["diagnose", "--config", &c, "--reps", "200"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("n,survival\n"));
    let c = config(1);
    let o = run(&["asymptotics", "--config", &c, "--reps", "300"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("quantity,threshold,value,std_error\n"));
}

#[test]
fn calibrate_reports_a_threshold() {
    let c = config(1);
    let o = run(&["calibrate", "--config", &c, "--alpha", "0.05", "--reps", "2000"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[1], "0.05");
    assert!(row[2].parse::<f64>().unwrap() > 1.0);
}

#[test]
fn example_one_runs_its_cross_checks() {
    let o = run(&["example", "1", "--reps", "2000"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with(HEADER));
    assert!(!stderr(&o).contains("FAILED"));
}
