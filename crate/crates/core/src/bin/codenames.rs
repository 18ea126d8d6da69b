use std::io::{BufRead, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use codenames_core::ann::{brute_force_search_rows, tune_probes, IvfIndex};
use codenames_core::env::{decode_action, encode_action, CodenamesEnv, Encoding, EnvConfig};
use codenames_core::eval::{evaluate, welch_t_test, EvalReport, Policy};
use codenames_core::guessers::GuesserMode;
use codenames_core::protocol::{self, ServerContext, Session};
use codenames_core::setup::{load_resources, ResourceOptions, Resources};
use codenames_core::toy::{Whack, WhackConfig};

#[derive(Parser)]
#[command(name = "codenames", version, about = "Codenames spymaster environments and tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run N episodes of one policy and write an evaluation report.
    Simulate {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value = "greedy")]
        policy: Policy,
        #[arg(long, default_value_t = 200)]
        episodes: usize,
        /// JSON report path.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-episode CSV path.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Compare the greedy and random policies.
    Eval {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = 200)]
        episodes: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Start the JSON-lines protocol server.
    Serve {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = protocol::DEFAULT_PORT)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Serve one session on stdin/stdout instead of TCP.
        #[arg(long)]
        stdio: bool,
    },
    /// Play in the terminal.
    Play {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_enum, default_value = "human-guesser")]
        role: Role,
    },
    /// Build and persist the IVF index over the clue vocabulary.
    BuildIndex {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        partitions: Option<usize>,
        /// Report recall@10 and the smallest probe count reaching 0.95 on this many queries.
        #[arg(long, default_value_t = 0)]
        tune_queries: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run quick invariant self-checks on the synthetic vocabulary.
    Check,
}

#[derive(Clone, Copy, ValueEnum)]
enum Role {
    HumanGuesser,
    HumanSpymaster,
}

#[derive(Clone, Copy, ValueEnum)]
enum EncodingArg {
    Pwcsm,
    Ohwe,
}

#[derive(Clone, Copy, ValueEnum)]
enum GuesserArg {
    Greedy,
    Stochastic,
}

#[derive(Args, Clone)]
struct DataArgs {
    /// Embedding text file (`word v1 ... vD` per line, frequency ordered).
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// Board deck, one word per line; defaults to the bundled 400-word list.
    #[arg(long)]
    wordlist: Option<PathBuf>,
    /// Use the built-in synthetic topic vocabulary instead of a file.
    #[arg(long)]
    synthetic: bool,
    /// Read at most this many embedding rows.
    #[arg(long)]
    limit: Option<usize>,
    /// Clue vocabulary size (most frequent rows).
    #[arg(long)]
    clue_limit: Option<usize>,
    /// IVF cache from `build-index`; exact search when absent.
    #[arg(long)]
    index: Option<PathBuf>,
    #[arg(long)]
    probes: Option<usize>,
    /// Environment config JSON; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    encoding: Option<EncodingArg>,
    #[arg(long, value_enum)]
    guesser: Option<GuesserArg>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
}

type Result<T> = std::result::Result<T, Box<dyn std::error::Error>>;

impl DataArgs {
    fn resources(&self) -> Result<Resources> {
        Ok(load_resources(&ResourceOptions {
            embeddings: self.embeddings.clone(),
            wordlist: self.wordlist.clone(),
            synthetic: self.synthetic,
            limit: self.limit,
            clue_limit: self.clue_limit,
            index: self.index.clone(),
            probes: self.probes,
        })?)
    }

    fn env_config(&self) -> Result<EnvConfig> {
        let mut c: EnvConfig = match &self.config {
            Some(p) => serde_json::from_str(&std::fs::read_to_string(p)?)?,
            None => EnvConfig::default(),
        };
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(e) = self.encoding {
            c.encoding = match e {
                EncodingArg::Pwcsm => Encoding::Pwcsm,
                EncodingArg::Ohwe => Encoding::Ohwe,
            };
        }
        if let Some(g) = self.guesser {
            c.guesser.mode = match g {
                GuesserArg::Greedy => GuesserMode::Greedy,
                GuesserArg::Stochastic => GuesserMode::Stochastic,
            };
        }
        if let Some(t) = self.tau {
            c.guesser.tau = t;
        }
        if let Some(l) = self.lambda {
            c.guesser.lambda = l;
        }
        c.validate()?;
        Ok(c)
    }
}

fn summary(r: &EvalReport) -> String {
    let flag = if r.std_undefined { " (std undefined for N=1)" } else { "" };
    format!("{:>7}: mean return {:.2} ± {:.2} over {} episodes{}", r.policy, r.mean, r.std, r.episodes, flag)
}

fn simulate(data: &DataArgs, policy: Policy, episodes: usize, out: Option<PathBuf>, csv: Option<PathBuf>) -> Result<()> {
    let config = data.env_config()?;
    let res = data.resources()?;
    let report = evaluate(policy, &config, &res.search, &res.deck, episodes, config.seed)?;
    println!("{}", summary(&report));
    if let Some(p) = out {
        report.write_json(p)?;
    }
    if let Some(p) = csv {
        report.write_csv(p)?;
    }
    Ok(())
}

fn eval(data: &DataArgs, episodes: usize, out: Option<PathBuf>) -> Result<()> {
    let config = data.env_config()?;
    let res = data.resources()?;
    let greedy = evaluate(Policy::Greedy, &config, &res.search, &res.deck, episodes, config.seed)?;
    let random = evaluate(Policy::Random, &config, &res.search, &res.deck, episodes, config.seed)?;
    let w = welch_t_test(&greedy.returns, &random.returns);
    println!("{}", summary(&greedy));
    println!("{}", summary(&random));
    println!(
        "difference {:.2}, Welch t = {:.2}, df = {:.1}, p = {:.3e}",
        greedy.mean - random.mean,
        w.t,
        w.df,
        w.p
    );
    if let Some(p) = out {
        let doc = json!({ "greedy": greedy, "random": random, "welch": w });
        std::fs::write(p, serde_json::to_string_pretty(&doc)? + "\n")?;
    }
    Ok(())
}

fn serve(data: &DataArgs, host: &str, port: u16, stdio: bool) -> Result<()> {
    let config = data.env_config()?;
    let res = data.resources()?;
    let ctx = Arc::new(ServerContext {
        search: res.search,
        deck: res.deck,
        config,
    });
    if stdio {
        protocol::serve_stdio(ctx)?;
    } else {
        eprintln!("serving on {host}:{port}");
        protocol::serve_tcp(ctx, (host, port))?;
    }
    Ok(())
}

fn show_board(view: &Value) {
    let cards = view["cards"].as_array().cloned().unwrap_or_default();
    for row in cards.chunks(5) {
        let line: Vec<String> = row
            .iter()
            .map(|c| {
                let word = c["word"].as_str().unwrap_or("?");
                match (c["revealed"].as_bool().unwrap_or(false), c["label"].as_str()) {
                    (true, Some(l)) => format!("[{word}:{l}]"),
                    (false, Some(l)) => format!("{word} ({l})"),
                    _ => word.to_string(),
                }
            })
            .map(|s| format!("{s:<22}"))
            .collect();
        println!("{}", line.join(""));
    }
}

fn play(data: &DataArgs, role: Role) -> Result<()> {
    let config = data.env_config()?;
    let res = data.resources()?;
    let seed = config.seed;
    let ctx = Arc::new(ServerContext {
        search: res.search,
        deck: res.deck,
        config,
    });
    let mut session = Session::new(ctx);
    let role_name = match role {
        Role::HumanGuesser => "human_guesser",
        Role::HumanSpymaster => "human_spymaster",
    };
    let mut send = |cmd: &str, payload: Value| -> Value {
        let line = json!({ "id": 0, "cmd": cmd, "payload": payload }).to_string();
        serde_json::from_str(&session.handle_line(&line)).unwrap_or(Value::Null)
    };
    let mut view = send("play_new", json!({ "role": role_name, "seed": seed }))["payload"].clone();
    let stdin = std::io::stdin();
    loop {
        show_board(&view);
        if view["game_over"].as_bool().unwrap_or(false) {
            println!("game over: {} won", view["winner"].as_str().unwrap_or("nobody"));
            return Ok(());
        }
        match role {
            Role::HumanGuesser => {
                let hint = &view["hint"];
                println!(
                    "hint: {} {} ({} guesses left). Type a word, or 'pass'.",
                    hint["clue"].as_str().unwrap_or("?"),
                    hint["count"],
                    view["guesses_left"]
                );
            }
            Role::HumanSpymaster => println!("type a hint as: clue count"),
        }
        print!("> ");
        std::io::stdout().flush()?;
        let mut line = String::new();
        if stdin.lock().read_line(&mut line)? == 0 {
            return Ok(());
        }
        let input = line.trim();
        if input == "quit" {
            return Ok(());
        }
        let resp = match role {
            Role::HumanGuesser if input == "pass" => send("play_end_turn", Value::Null),
            Role::HumanGuesser => send("play_guess", json!({ "word": input })),
            Role::HumanSpymaster => {
                let mut parts = input.split_whitespace();
                let clue = parts.next().unwrap_or_default();
                let count: u8 = parts.next().and_then(|c| c.parse().ok()).unwrap_or(1);
                send("play_hint", json!({ "clue": clue, "count": count }))
            }
        };
        if resp["ok"].as_bool() == Some(true) {
            view = resp["payload"].clone();
            for o in view["outcomes"].as_array().cloned().unwrap_or_default() {
                println!("  revealed {} -> {}", o["word"].as_str().unwrap_or("?"), o["label"].as_str().unwrap_or("?"));
            }
        } else {
            println!("error: {}", resp["error"]["message"].as_str().unwrap_or("unknown"));
        }
    }
}

fn build_index(data: &DataArgs, partitions: Option<usize>, tune_queries: usize, out: PathBuf) -> Result<()> {
    let res = data.resources()?;
    let rows = res.search.rows();
    let p = partitions.unwrap_or_else(|| IvfIndex::default_partitions(rows));
    let seed = data.seed.unwrap_or(0);
    let start = std::time::Instant::now();
    let index = IvfIndex::build_rows(res.store.clone(), rows, p, seed)?;
    println!("indexed {rows} rows into {p} partitions in {:.1?}", start.elapsed());
    index.save(&out)?;
    if tune_queries > 0 {
        let queries: Vec<Vec<f32>> = (0..tune_queries)
            .map(|i| res.store.row(codenames_core::seed::derive(seed, i as u64) as usize % rows).to_vec())
            .collect();
        let exact = queries
            .iter()
            .map(|q| brute_force_search_rows(&res.store, rows, q, 10))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let (probes, recall) = tune_probes(&index, &queries, &exact, 10, 0.95)?;
        println!("probes {probes} reach recall@10 {recall:.4}");
    }
    Ok(())
}

fn check() -> Result<bool> {
    let res = load_resources(&ResourceOptions {
        synthetic: true,
        ..Default::default()
    })?;
    let mut all = true;
    let mut report = |name: &str, ok: bool| {
        println!("{} {name}", if ok { "PASS" } else { "FAIL" });
        all &= ok;
    };
    let mut env = CodenamesEnv::new(EnvConfig::default(), res.search.clone(), res.deck.clone())?;
    let r = env.reset(Some(1))?;
    report("pwcsm observation is 31x25", r.observation.shape() == (31, 25));
    report("goal vector starts at [9, 0, ...]", r.goal[0] == 9.0 && r.goal[1..].iter().all(|&g| g == 0.0));
    let state = env.state().expect("reset").clone();
    let mine = state.unrevealed_of(codenames_core::env::AGENT_TEAM);
    let a = encode_action(&mine[..3], 1, 7, 2, 10);
    let d = decode_action(&a, &state, codenames_core::env::AGENT_TEAM, 2, 10)?;
    report("action decode inverts encode", d.targets == mine[..3] && d.strategy_index == 1 && d.rank == 7);
    let mut ok = true;
    for s in 0..20 {
        env.reset(Some(s))?;
        let (mut total, mut last) = (0.0, 0.0);
        while !env.is_done() {
            let st = env.step(&vec![0.0; 70])?;
            total += st.reward;
            last = st.reward;
        }
        let won = env.state().and_then(|s| s.winner()) == Some(codenames_core::env::AGENT_TEAM);
        if won && last == 0.0 {
            ok &= total == -((env.steps() - 1) as f64);
        }
        ok &= (-50.0..=0.0).contains(&total);
    }
    report("episode returns satisfy the reward identity", ok);
    let mut whack = Whack::new(WhackConfig::default())?;
    let mut obs = whack.reset(Some(0));
    let mut total = 0.0;
    loop {
        let s = whack.step(&obs.concat())?;
        total += s.reward;
        obs = s.observation;
        if s.terminated {
            break;
        }
    }
    report("whack oracle scores 99", total == 99.0);
    Ok(all)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Simulate {
            data,
            policy,
            episodes,
            out,
            csv,
        } => simulate(&data, policy, episodes, out, csv)?,
        Command::Eval { data, episodes, out } => eval(&data, episodes, out)?,
        Command::Serve { data, port, host, stdio } => serve(&data, &host, port, stdio)?,
        Command::Play { data, role } => play(&data, role)?,
        Command::BuildIndex {
            data,
            partitions,
            tune_queries,
            out,
        } => build_index(&data, partitions, tune_queries, out)?,
        Command::Check => return check(),
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
