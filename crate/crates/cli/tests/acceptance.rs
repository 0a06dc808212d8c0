//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any fails.

use std::io::{Read, Write};
use std::net::TcpStream;
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};
use std::time::{Duration, Instant};

use asg_core::adverbs::{oracle_label_ball, parse_grades, parse_phrase, render_phrase, AdverbEmbedding, AxisConfig};
use asg_core::asg::{backprop_gradient, AsgModel, MlpParams};
use asg_core::harness::{pipeline, ExperimentConfig, Method};
use asg_core::search::{cem_step, pi2_weights, pi2cma_step, SearchConfig, SearchDistribution};
use asg_core::{BallThrowTask, SkillTask, TaskKind, TaskParam};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

type Check = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

struct Run {
    pi2: f64,
    asg: f64,
    worth: f64,
    trials: usize,
    samples: usize,
    secs: f64,
    all_converged: bool,
}

fn comparison(task_kind: TaskKind) -> Result<Run, String> {
    let start = Instant::now();
    let mut cfg = ExperimentConfig::defaults_for(task_kind);
    cfg.threads = 1;
    let task = pipeline::build_task(&cfg).map_err(|e| e.to_string())?;
    let model = pipeline::model(&cfg, task.as_ref()).map_err(|e| e.to_string())?;
    let out = pipeline::run_comparison(&cfg, task.as_ref(), &model).map_err(|e| e.to_string())?;
    let s = &out.summary;
    let (asg, pi2) = (s.method(Method::Asg).unwrap(), s.method(Method::Pi2Cma).unwrap());
    Ok(Run {
        pi2: pi2.mean_converged,
        asg: asg.mean_converged,
        worth: s.worth(Method::Pi2Cma).unwrap_or(f64::NAN),
        trials: asg.trials,
        samples: cfg.dataset_size,
        secs: start.elapsed().as_secs_f64(),
        all_converged: asg.not_converged == 0 && pi2.not_converged == 0,
    })
}

fn ball_reproduction(ball: &Result<Run, String>) -> Check {
    let r = ball.as_ref().map_err(Clone::clone)?;
    let detail = format!(
        "PI2-CMA {:.2}, ASG {:.2}, ratio {:.3}, {} trials, all converged {}, {:.1}s on one thread",
        r.pi2,
        r.asg,
        r.asg / r.pi2,
        r.trials,
        r.all_converged,
        r.secs
    );
    ensure(
        r.trials == 100
            && (20.0..=60.0).contains(&r.pi2)
            && (1.0..=5.0).contains(&r.asg)
            && r.asg <= 0.2 * r.pi2
            && r.secs < 120.0,
        detail,
    )
}

fn adverb_worth(ball: &Result<Run, String>, puck: &Result<Run, String>) -> Check {
    let (b, p) = (ball.as_ref().map_err(Clone::clone)?, puck.as_ref().map_err(Clone::clone)?);
    ensure(b.worth >= 5.0 && p.worth >= 2.0, format!("ball {:.2} (>= 5), puck {:.2} (>= 2)", b.worth, p.worth))
}

fn puck_convergence(puck: &Result<Run, String>) -> Check {
    let r = puck.as_ref().map_err(Clone::clone)?;
    ensure(
        r.trials == 18 && r.samples == 50 && r.asg <= 8.0,
        format!("ASG {:.2} episodes over {} trials, {} samples, {:.1}s", r.asg, r.trials, r.samples, r.secs),
    )
}

fn physics_oracle() -> Check {
    let task = BallThrowTask::default();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let tau = task.space().sample(&mut rng);
        let traj = task.execute(&tau).map_err(|e| e.to_string())?;
        let Some(measured) = traj.outcome.observed() else {
            return Err(format!("no outcome for {tau:?}"));
        };
        for (m, t) in measured.0.iter().zip(&tau.0) {
            worst = worst.max((m - t).abs());
        }
    }
    ensure(worst < 1e-2, format!("max component error {worst:.2e} over 1000 throws"))
}

fn gradient_oracle() -> Check {
    const H: f64 = 1e-5;
    // Coordinates whose gradient is within rounding of zero are compared
    // against this scale instead of their own magnitude.
    const FLOOR: f64 = 1e-3;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let sizes = [4, 8, 6, 2];
    let mut worst = 0.0f64;
    let mut coords = 0usize;
    for _ in 0..20 {
        let params = MlpParams::init(&sizes, &mut rng);
        let n = rng.random_range(1..=8);
        let batch: Vec<(Vec<f64>, Vec<f64>)> = (0..n)
            .map(|_| {
                let x = (0..sizes[0]).map(|_| rng.random_range(-2.0..2.0)).collect();
                let y = (0..sizes[3]).map(|_| rng.random_range(-1.0..1.0)).collect();
                (x, y)
            })
            .collect();
        let grad: Vec<f64> = backprop_gradient(&params, &batch).values().copied().collect();
        for (i, g) in grad.iter().enumerate() {
            let at = |shift: f64| {
                let mut p = params.clone();
                *p.values_mut().nth(i).unwrap() += shift;
                p.loss(&batch)
            };
            let numeric = (at(H) - at(-H)) / (2.0 * H);
            worst = worst.max((g - numeric).abs() / g.abs().max(numeric.abs()).max(FLOOR));
            coords += 1;
        }
    }
    ensure(worst < 1e-6, format!("max relative error {worst:.2e} over {coords} coordinates"))
}

/// Updates CEM needs to bring the sphere mean within 0.1 of the origin.
fn cem_sphere(seed: u64) -> Result<Option<usize>, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // sigma_min = 0.1 keeps five elites in 2-D from collapsing the search
    // before the mean arrives.
    let cfg = SearchConfig { samples_per_update: 20, elites: 5, variance_floor: 1e-2, ..Default::default() };
    let mut dist = SearchDistribution::new(&[3.0, 3.0], DMatrix::identity(2, 2)).unwrap();
    let mut sphere = |t: &TaskParam| Ok(-t.0.iter().map(|v| v * v).sum::<f64>());
    for update in 1..=30 {
        dist = cem_step(&dist, &mut sphere, &cfg, None, &mut rng).map_err(|e| e.to_string())?.0;
        if dist.mean.norm() < 0.1 {
            return Ok(Some(update));
        }
    }
    Ok(None)
}

fn optimizer_sanity() -> Check {
    let Some(update) = cem_sphere(0)? else {
        return Err("CEM mean not within 0.1 of the optimum after 30 updates".into());
    };
    let mut reached = 0;
    for seed in 0..100 {
        reached += cem_sphere(seed)?.is_some() as usize;
    }
    if reached < 99 {
        return Err(format!("CEM reached the optimum on only {reached} of 100 seeds"));
    }

    let mut fuzz = ChaCha8Rng::seed_from_u64(1);
    let (mut worst_sum, mut min_eig) = (0.0f64, f64::INFINITY);
    let mut dist = SearchDistribution::new(&[0.0, 0.0, 0.0], DMatrix::identity(3, 3)).unwrap();
    for step in 0..10_000 {
        if step % 100 == 0 {
            let d = fuzz.random_range(1..=5);
            let a = DMatrix::from_fn(d, d, |_, _| fuzz.random_range(-1.0..1.0));
            let mean: Vec<f64> = (0..d).map(|_| fuzz.random_range(-50.0..50.0)).collect();
            dist = SearchDistribution::new(&mean, &a * a.transpose() + DMatrix::identity(d, d) * 1e-3).unwrap();
        }
        let cfg = SearchConfig {
            samples_per_update: fuzz.random_range(1..=16),
            temperature: fuzz.random_range(0.5..30.0),
            variance_floor: 1e-6,
            ..Default::default()
        };
        let scale = 10f64.powf(fuzz.random_range(-3.0..6.0));
        let mut noise = ChaCha8Rng::seed_from_u64(fuzz.random());
        let mut objective = |_: &TaskParam| Ok(noise.random_range(-scale..scale));
        let (next, recs) = pi2cma_step(&dist, &mut objective, &cfg, None, &mut fuzz).map_err(|e| e.to_string())?;
        let values: Vec<f64> = recs.iter().map(|r| r.objective).collect();
        worst_sum = worst_sum.max((pi2_weights(&values, cfg.temperature).iter().sum::<f64>() - 1.0).abs());
        let asym = (&next.cov - next.cov.transpose()).amax();
        let eig = SymmetricEigen::new(next.cov.clone()).eigenvalues.min();
        if asym > 1e-9 || eig.is_nan() || eig < cfg.variance_floor * (1.0 - 1e-6) {
            return Err(format!("step {step}: covariance asymmetry {asym:.1e}, min eigenvalue {eig:.3e}"));
        }
        min_eig = min_eig.min(eig);
        dist = next;
    }
    ensure(
        worst_sum < 1e-12,
        format!("CEM |mean| < 0.1 after {update} updates ({reached}/100 seeds); 10000 PI2-CMA steps: |sum w - 1| <= {worst_sum:.1e}, min eigenvalue {min_eig:.2e}"),
    )
}

fn embedding_ground_truth() -> Check {
    let cfg = AxisConfig::puck_slide();
    let phrase = "a little higher and much more to the left";
    let raw = parse_grades(&cfg, phrase).map_err(|e| e.to_string())?;
    let emb = parse_phrase(&cfg, phrase).map_err(|e| e.to_string())?;
    if raw != [1, -3] || emb.0 != [1.0 / 3.0, -1.0] {
        return Err(format!("{phrase:?} gave raw {raw:?}, normalized {:?}", emb.0));
    }
    let mut checked = 0;
    for cfg in [AxisConfig::ball_throw(), AxisConfig::puck_slide()] {
        for a in -3..=3 {
            for b in -3..=3 {
                let e = AdverbEmbedding::from_grades(&[a, b], cfg.max_magnitude);
                let text = render_phrase(&cfg, &e).map_err(|e| e.to_string())?;
                let back = parse_phrase(&cfg, &text).map_err(|e| e.to_string())?;
                if back != e {
                    return Err(format!("[{a}, {b}] rendered as {text:?} parsed back to {:?}", back.0));
                }
                checked += 1;
            }
        }
    }
    ensure(true, format!("raw [1, -3], normalized [1/3, -1]; {checked} on-grid embeddings round-trip"))
}

/// Labelling procedure as printed, typos included.
fn printed_label(tau: &[f64; 2], new: &[f64; 2]) -> [i32; 2] {
    let dt = new[0] - tau[0];
    let dy = new[1] - tau[1];
    let mut t_adv = 0;
    if dt.abs() > 0.05 + 0.15 * (-tau[0] + 4.0) {
        t_adv = if dt.abs() > 1.2 + 0.17 * (-tau[0] + 4.0) {
            3
        } else if dt.abs() > 0.6 + 0.15 * (-tau[0] + 4.0) {
            2
        } else {
            1
        };
    }
    let mut y_adv = 0;
    if dy.abs() > 0.5 + 0.15 * (tau[1] + 15.0) {
        y_adv = if dy.abs() > 12.0 + 0.17 * (tau[1] + 15.0) {
            3
        } else if dt.abs() > 0.6 + 0.15 * (-tau[0] + 4.0) {
            2
        } else {
            1
        };
    }
    if dt >= 0.0 {
        y_adv = -y_adv;
    }
    if dy <= 0.0 {
        y_adv = -y_adv;
    }
    [t_adv, y_adv]
}

fn oracle_fidelity() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let space = BallThrowTask::default_space();
    let (mut full, mut zeros) = (0usize, 0usize);
    for i in 0..10_000 {
        let tau = space.sample(&mut rng);
        let new = if i % 2 == 0 {
            space.sample(&mut rng)
        } else {
            // Small moves exercise the inner bands.
            TaskParam::new([tau.0[0] + rng.random_range(-1.5..1.5), tau.0[1] + rng.random_range(-8.0..8.0)])
        };
        let (a, b) = ([tau.0[0], tau.0[1]], [new.0[0], new.0[1]]);
        let printed = printed_label(&a, &b);
        let ours = oracle_label_ball(&tau, &new);
        let (dt, dy) = (b[0] - a[0], b[1] - a[1]);
        let y_middle = dy.abs() > 0.5 + 0.15 * (a[1] + 15.0) && dy.abs() <= 12.0 + 0.17 * (a[1] + 15.0);
        let flip_misplaced = dt >= 0.0 && (printed[0] != 0 || printed[1] != 0);

        if printed[0].abs() != ours[0].abs() || (dt < 0.0 && printed[0] != ours[0]) {
            return Err(format!("time grade differs at {a:?} -> {b:?}: printed {printed:?}, ours {ours:?}"));
        }
        if (printed == [0, 0]) != (ours == [0, 0]) {
            return Err(format!("zero case differs at {a:?} -> {b:?}: printed {printed:?}, ours {ours:?}"));
        }
        zeros += (ours == [0, 0]) as usize;
        if !y_middle && !flip_misplaced {
            if printed != ours {
                return Err(format!("label differs at {a:?} -> {b:?}: printed {printed:?}, ours {ours:?}"));
            }
            full += 1;
        }
    }
    ensure(
        full > 1000 && zeros > 100,
        format!("10000 pairs: time grades agree on all, {zeros} zero cases, {full} full labels outside the typos"),
    )
}

fn asg_bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_asg"));
    c.env("RUST_LOG", "warn");
    c
}

fn run_asg(args: &[&str], cwd: &Path) -> Result<String, String> {
    let out = asg_bin().args(args).current_dir(cwd).output().map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("asg {} failed: {}", args.join(" "), String::from_utf8_lossy(&out.stderr)));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

fn files_under(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).into_iter().flatten().flatten() {
            let p = entry.path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p.strip_prefix(dir).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

fn determinism() -> Check {
    let d = tempfile::tempdir().map_err(|e| e.to_string())?;
    for run in ["a", "b"] {
        run_asg(&["compare", "--task", "ball_throw", "--out", run], d.path())?;
    }
    let (a, b) = (d.path().join("a"), d.path().join("b"));
    let files = files_under(&a);
    if files != files_under(&b) {
        return Err("runs wrote different file sets".into());
    }
    let csv = files.iter().filter(|f| f.extension().is_some_and(|e| e == "csv")).count();
    for f in &files {
        if std::fs::read(a.join(f)).ok() != std::fs::read(b.join(f)).ok() {
            return Err(format!("{} differs", f.display()));
        }
    }
    ensure(csv > 0, format!("{} files ({csv} CSV) byte-identical across two runs", files.len()))
}

fn http(port: u16, method: &str, path: &str, body: Option<&Value>) -> Result<(u16, Value), String> {
    let mut s = TcpStream::connect(("127.0.0.1", port)).map_err(|e| e.to_string())?;
    s.set_read_timeout(Some(Duration::from_secs(10))).map_err(|e| e.to_string())?;
    let payload = body.map(|b| b.to_string()).unwrap_or_default();
    write!(
        s,
        "{method} {path} HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\nContent-Type: application/json\r\nContent-Length: {}\r\n\r\n{payload}",
        payload.len()
    )
    .map_err(|e| e.to_string())?;
    let mut reply = String::new();
    s.read_to_string(&mut reply).map_err(|e| e.to_string())?;
    let (head, body) = reply.split_once("\r\n\r\n").ok_or("malformed reply")?;
    let status = head.split_whitespace().nth(1).and_then(|c| c.parse().ok()).ok_or("no status")?;
    Ok((status, serde_json::from_str(body).unwrap_or(Value::Null)))
}

struct Server(Child);

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

fn taus_of(v: &Value) -> Vec<f64> {
    v.as_array().map(|a| a.iter().filter_map(Value::as_f64).collect()).unwrap_or_default()
}

fn service_replay() -> Check {
    let d = tempfile::tempdir().map_err(|e| e.to_string())?;
    run_asg(&["train", "--task", "ball_throw", "--out", "models/ball.json"], d.path())?;
    let port = std::net::TcpListener::bind("127.0.0.1:0").map_err(|e| e.to_string())?.local_addr().unwrap().port();
    let server = Server(
        asg_bin()
            .args(["serve", "--port", &port.to_string(), "--model-dir", "models", "--data-dir", "sessions"])
            .current_dir(d.path())
            .stdout(Stdio::null())
            .spawn()
            .map_err(|e| e.to_string())?,
    );
    let started = Instant::now();
    while http(port, "GET", "/healthz", None).is_err() {
        if started.elapsed() > Duration::from_secs(20) {
            return Err("service did not come up".into());
        }
        std::thread::sleep(Duration::from_millis(100));
    }

    let (code, session) = http(port, "POST", "/sessions", Some(&json!({"task": "ball_throw", "model_id": "ball", "seed": 42})))?;
    if code != 201 {
        return Err(format!("create returned {code}: {session}"));
    }
    let id = session["id"].as_str().ok_or("no session id")?.to_string();
    let mut served = vec![taus_of(&session["history"][0]["tau"])];
    let phrases = ["much higher", "a little faster", "lower", "a little slower and much higher", "perfect", "faster"];
    for p in phrases {
        let (code, reply) = http(port, "POST", &format!("/sessions/{id}/feedback"), Some(&json!({"phrase": p})))?;
        if code != 200 {
            return Err(format!("feedback {p:?} returned {code}: {reply}"));
        }
        served.push(taus_of(&reply["tau"]));
    }
    http(port, "POST", &format!("/sessions/{id}/feedback"), Some(&json!({"satisfied": true})))?;
    drop(server);

    let log = d.path().join("sessions").join(format!("{id}.jsonl"));
    let recorded = asg_service::load_session(&log).map_err(|e| e.to_string())?.ok_or("empty session log")?;
    let model = AsgModel::load(d.path().join("models/ball.json")).map_err(|e| e.to_string())?;
    let task = BallThrowTask::default();
    let tau0 = TaskParam(recorded.history[0].tau.clone());
    let replayed = asg_service::replay(&task, &model, &tau0, &recorded.phrases()).map_err(|e| e.to_string())?;
    let replayed: Vec<Vec<f64>> = replayed.into_iter().map(|t| t.0).collect();
    let logged: Vec<Vec<f64>> = recorded.history.iter().map(|e| e.tau.clone()).collect();
    if replayed != logged || replayed != served {
        return Err(format!("replayed {replayed:?}\nlogged {logged:?}\nserved {served:?}"));
    }
    ensure(
        replayed.len() == phrases.len() + 1,
        format!("{} phrases replayed to {} identical task parameters (status {:?})", phrases.len(), replayed.len(), recorded.status),
    )
}

fn main() {
    let ball = comparison(TaskKind::BallThrow);
    let puck = comparison(TaskKind::PuckSlide);
    let checks: Vec<(&str, Check)> = vec![
        ("ball_throw_reproduction", ball_reproduction(&ball)),
        ("adverb_worth_ratio", adverb_worth(&ball, &puck)),
        ("puck_slide_convergence", puck_convergence(&puck)),
        ("physics_oracle", physics_oracle()),
        ("gradient_oracle", gradient_oracle()),
        ("optimizer_sanity", optimizer_sanity()),
        ("embedding_ground_truth", embedding_ground_truth()),
        ("oracle_fidelity", oracle_fidelity()),
        ("determinism", determinism()),
        ("service_replay", service_replay()),
    ];
    let mut failed = 0;
    for (name, result) in &checks {
        match result {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    println!("{} of {} criteria pass", checks.len() - failed, checks.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
