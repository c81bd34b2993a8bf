//! Drives the command-line interface in-process: train both stages,
//! evaluate, predict and diagnose, all on a small synthetic graph inside a
//! temporary directory. Equivalent shell commands are printed as it goes.
//!
//!     cargo run --release --example cli_pipeline

fn main() {
    let dir = std::env::temp_dir().join(format!("duetgraph-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).expect("temp dir");
    let config = dir.join("run.json");
    let out = dir.join("out");
    let body = serde_json::json!({
        "synthetic_families": 6,
        "epochs": 1,
        "lr": 5e-3,
        "coarse_epochs": 2,
        "montecarlo_trials": 20000,
        "output_dir": out,
    });
    std::fs::write(&config, body.to_string()).expect("write config");
    let c = config.to_str().unwrap();
    let coarse = out.join("coarse.ckpt");
    let fine = out.join("fine.ckpt");
    let (coarse, fine) = (coarse.to_str().unwrap(), fine.to_str().unwrap());
    let steps: Vec<Vec<&str>> = vec![
        vec!["train-coarse", "--config", c],
        vec!["train-fine", "--config", c],
        vec!["eval", "--config", c, "--coarse", coarse, "--fine", fine],
        vec!["predict", "--config", c, "--coarse", coarse, "--fine", fine, "--limit", "3"],
        vec!["gap-hist", "--config", c, "--fine", fine],
        vec!["diagnose", "--config", c, "--fine", fine],
    ];
    for args in steps {
        println!("$ duetgraph {}", args.join(" "));
        let code = duetgraph::cli::run(std::iter::once("duetgraph").chain(args.iter().copied()));
        if code != 0 {
            eprintln!("exit code {code}");
            std::process::exit(code);
        }
    }
    println!("outputs in {}", out.display());
}
