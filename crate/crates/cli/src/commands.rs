use std::fs;
use std::path::Path;

use log::{info, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;

use cachenet::baselines::{doa, ema};
use cachenet::benders::{ucwt, BendersTrace, UcwtOptions};
use cachenet::model::{
    objective, relaxed_total_delay, Association, CachePlacement, DelayMode, DemandMatrix,
    ObjectiveBreakdown, PowerVector, Scenario,
};
use cachenet::oracle::brute_force;
use cachenet::placement::{
    gpc_placement, hit_ratio, lpf_greedy, rc_placement, DEFAULT_ZIPF_EXPONENT,
};
use cachenet::scenario::{generate as generate_instance, Config, Instance};
use cachenet::Error;

use crate::{
    Algorithm, AlgorithmArgs, CachingArgs, Failure, GenerateArgs, Policy, SolveArgs, Solver,
    Source, SweepArgs, SweepVariable, EXIT_INFEASIBLE, EXIT_NOT_CONVERGED,
};

/// Formats a float with at most 9 significant digits.
pub fn num(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    let rounded: f64 = format!("{v:.8e}").parse().expect("formatted float parses");
    let mag = rounded.abs();
    if rounded == 0.0 {
        "0".to_string()
    } else if (1e-4..1e15).contains(&mag) {
        rounded.to_string()
    } else {
        format!("{rounded:e}")
    }
}

fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn check_alpha(alpha: f64) -> Result<(), Failure> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(Failure::usage(format!("alpha = {alpha} outside [0, 1]")))
    }
}

fn check_solver(solver: &Solver) -> Result<(), Failure> {
    match solver.epsilon {
        Some(e) if !(e.is_finite() && e > 0.0) => {
            Err(Failure::usage(format!("epsilon = {e} must be positive")))
        }
        _ if solver.max_iters == 0 => Err(Failure::usage("max-iters must be positive")),
        _ => Ok(()),
    }
}

fn base_config(source: &Source) -> Result<Config, Failure> {
    if let Some(path) = &source.config {
        return Ok(Config::load(path)?);
    }
    if source.paper_scale {
        warn!("full-scale instances can take hours: the association master is exponential in the worst case");
        Ok(Config::full_scale())
    } else {
        Ok(Config::desk())
    }
}

fn load_or_generate(source: &Source, config: &Config, seed: u64) -> Result<Instance, Failure> {
    match &source.instance {
        Some(path) => Ok(Instance::load(path)?),
        None => Ok(generate_instance(config, seed)?),
    }
}

fn reject_instance(source: &Source, command: &str) -> Result<(), Failure> {
    match source.instance {
        Some(_) => Err(Failure::usage(format!(
            "{command} generates its own instance family; use --config or --seed"
        ))),
        None => Ok(()),
    }
}

fn placement_for(policy: Policy, instance: &Instance, seed: u64) -> CachePlacement {
    let s = &instance.scenario;
    match policy {
        Policy::Lpf => lpf_greedy(s, &instance.popularity()).0,
        Policy::Gpc => gpc_placement(s, DEFAULT_ZIPF_EXPONENT),
        Policy::Rc => rc_placement(s, seed),
    }
}

fn writer(dir: &Path, name: &str) -> Result<csv::Writer<fs::File>, Failure> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    info!("writing {}", path.display());
    Ok(csv::Writer::from_path(path)?)
}

/// Outcome of one algorithm on one instance.
struct Solved {
    assoc: Association,
    power: PowerVector,
    objective: ObjectiveBreakdown,
    exact_delay: f64,
    trace: Option<BendersTrace>,
}

impl Solved {
    fn converged(&self) -> bool {
        self.trace.as_ref().is_none_or(|t| t.converged)
    }
}

fn evaluate(
    s: &Scenario,
    d: &DemandMatrix,
    y: &CachePlacement,
    assoc: Association,
    power: PowerVector,
    alpha: f64,
) -> Result<Solved, Error> {
    let relaxed = objective(s, d, y, &assoc, &power, DelayMode::Relaxed, alpha)?;
    let exact = objective(s, d, y, &assoc, &power, DelayMode::Exact(&power), alpha)?;
    Ok(Solved {
        assoc,
        power,
        objective: relaxed,
        exact_delay: exact.delay,
        trace: None,
    })
}

fn run(
    algorithm: Algorithm,
    s: &Scenario,
    d: &DemandMatrix,
    y: &CachePlacement,
    alpha: f64,
    solver: &Solver,
) -> Result<Solved, Error> {
    match algorithm {
        Algorithm::Ucwt => {
            let opts = UcwtOptions {
                epsilon: solver.epsilon,
                max_iters: solver.max_iters,
                interferers: None,
            };
            let r = ucwt(s, d, y, alpha, &opts)?;
            Ok(Solved {
                assoc: r.assoc,
                power: r.power,
                objective: r.objective,
                exact_delay: r.exact_objective.delay,
                trace: Some(r.trace),
            })
        }
        Algorithm::Doa => {
            let r = doa(s, d, y)?;
            evaluate(s, d, y, r.assoc, r.power, alpha)
        }
        Algorithm::Ema => {
            let r = ema(s, d)?;
            evaluate(s, d, y, r.assoc, r.power, alpha)
        }
        Algorithm::Oracle => {
            let r = brute_force(s, d, y, alpha)?;
            evaluate(s, d, y, r.best.assoc, r.best.power, alpha)
        }
    }
}

/// Mean total delay with each SBS's backhaul drawn from an exponential law
/// around its mean, independently per draw.
fn sampled_delay(
    s: &Scenario,
    d: &DemandMatrix,
    y: &CachePlacement,
    assoc: &Association,
    draws: usize,
    seed: u64,
) -> Result<Option<f64>, Error> {
    if draws == 0 {
        return Ok(None);
    }
    let laws: Vec<Exp<f64>> = s
        .backhaul_mean()
        .iter()
        .map(|&m| {
            Exp::new(1.0 / m).map_err(|e| Error::InvalidInput(format!("backhaul mean {m}: {e}")))
        })
        .collect::<Result<_, _>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = 0.0;
    for _ in 0..draws {
        let mut parts = s.parts().clone();
        parts.backhaul_mean = laws.iter().map(|l| l.sample(&mut rng)).collect();
        total += relaxed_total_delay(&Scenario::new(parts)?, d, y, assoc);
    }
    Ok(Some(total / draws as f64))
}

/// Status label for a run that failed recoverably, or the failure to abort with.
fn classify(e: Error) -> Result<&'static str, Failure> {
    let f = Failure::from(e);
    match f.code {
        EXIT_INFEASIBLE => Ok("infeasible"),
        EXIT_NOT_CONVERGED => Ok("not_converged"),
        _ => Err(f),
    }
}

pub fn solve(args: &SolveArgs) -> Result<u8, Failure> {
    check_solver(&args.solver)?;
    let config = base_config(&args.source)?;
    let instance = load_or_generate(&args.source, &config, args.source.seed)?;
    let (s, d) = (&instance.scenario, &instance.demands);
    let alpha = args.alpha.unwrap_or(s.alpha());
    check_alpha(alpha)?;
    let y = placement_for(args.caching, &instance, args.source.seed);
    let solved = run(args.algorithm, s, d, &y, alpha, &args.solver)?;
    let sampled = sampled_delay(
        s,
        d,
        &y,
        &solved.assoc,
        args.solver.sample_backhaul,
        args.source.seed,
    )?;
    let dir = &args.output.out;

    let mut w = writer(dir, "summary.csv")?;
    w.write_record([
        "algorithm",
        "alpha",
        "energy_joules",
        "delay_seconds",
        "weighted",
        "exact_delay_seconds",
        "sampled_delay_seconds",
        "iterations",
        "final_gap",
        "epsilon",
        "converged",
    ])?;
    let trace = solved.trace.as_ref();
    w.write_record([
        format!("{:?}", args.algorithm).to_lowercase(),
        num(alpha),
        num(solved.objective.energy),
        num(solved.objective.delay),
        num(solved.objective.weighted),
        num(solved.exact_delay),
        opt_num(sampled),
        trace
            .map(|t| t.iterations().to_string())
            .unwrap_or_default(),
        opt_num(trace.map(|t| t.final_gap())),
        opt_num(trace.map(|t| t.epsilon)),
        solved.converged().to_string(),
    ])?;
    w.flush()?;

    let mut w = writer(dir, "association.csv")?;
    w.write_record(["user", "sbs"])?;
    for (i, j) in solved.assoc.as_slice().iter().enumerate() {
        w.write_record([i.to_string(), j.to_string()])?;
    }
    w.flush()?;

    let mut w = writer(dir, "power.csv")?;
    w.write_record(["sbs", "power_watts"])?;
    for (j, p) in solved.power.as_slice().iter().enumerate() {
        w.write_record([j.to_string(), num(*p)])?;
    }
    w.flush()?;

    if let Some(trace) = trace {
        let mut w = writer(dir, "trace.csv")?;
        w.write_record([
            "t",
            "psi_lower",
            "psi_upper",
            "subproblem_status",
            "M",
            "N",
            "omega",
        ])?;
        for r in &trace.records {
            w.write_record([
                r.t.to_string(),
                num(r.psi_lower),
                num(r.psi_upper),
                r.status.to_string(),
                opt_num(r.m),
                num(r.n),
                r.omega.map(|o| o.to_string()).unwrap_or_default(),
            ])?;
        }
        w.flush()?;
    }

    if solved.converged() {
        Ok(0)
    } else {
        warn!("iteration budget exhausted before the gap closed");
        Ok(EXIT_NOT_CONVERGED)
    }
}

pub fn sweep_alpha(args: &SweepArgs) -> Result<u8, Failure> {
    check_solver(&args.solver)?;
    if args.alpha.is_empty() {
        return Err(Failure::usage("empty alpha grid"));
    }
    for &a in &args.alpha {
        check_alpha(a)?;
    }
    if args.replications == 0 {
        return Err(Failure::usage("replications must be positive"));
    }
    let config = base_config(&args.source)?;
    let instances: Vec<(u64, Instance, CachePlacement)> = (0..args.replications)
        .map(|r| {
            let seed = args.source.seed + r;
            let inst = load_or_generate(&args.source, &config, seed)?;
            let y = placement_for(Policy::Lpf, &inst, seed);
            Ok((seed, inst, y))
        })
        .collect::<Result<_, Failure>>()?;
    let jobs: Vec<(f64, usize)> = args
        .alpha
        .iter()
        .flat_map(|&a| (0..instances.len()).map(move |r| (a, r)))
        .collect();
    let rows: Vec<Vec<String>> = jobs
        .par_iter()
        .map(|&(alpha, r)| {
            let (seed, inst, y) = &instances[r];
            let (s, d) = (&inst.scenario, &inst.demands);
            let mut row = vec![num(alpha), r.to_string(), seed.to_string()];
            match run(args.algorithm, s, d, y, alpha, &args.solver) {
                Ok(sol) => {
                    let sampled =
                        sampled_delay(s, d, y, &sol.assoc, args.solver.sample_backhaul, *seed)?;
                    let status = if sol.converged() {
                        "ok"
                    } else {
                        "not_converged"
                    };
                    row.extend([
                        status.to_string(),
                        num(sol.objective.energy),
                        num(sol.objective.delay),
                        num(sol.objective.weighted),
                        opt_num(sampled),
                    ]);
                }
                Err(e) => {
                    row.push(classify(e)?.to_string());
                    row.extend(std::iter::repeat_n(String::new(), 4));
                }
            }
            Ok(row)
        })
        .collect::<Result<_, Failure>>()?;

    let mut w = writer(&args.output.out, "sweep_alpha.csv")?;
    w.write_record([
        "alpha",
        "replication",
        "seed",
        "status",
        "energy_joules",
        "delay_seconds",
        "weighted",
        "sampled_delay_seconds",
    ])?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(0)
}

/// Running means over the runs that produced a solution.
#[derive(Default)]
struct Means {
    solved: usize,
    energy: f64,
    delay: f64,
    sampled: f64,
    sampled_count: usize,
}

impl Means {
    fn add(&mut self, energy: f64, delay: f64, sampled: Option<f64>) {
        self.solved += 1;
        self.energy += energy;
        self.delay += delay;
        if let Some(v) = sampled {
            self.sampled += v;
            self.sampled_count += 1;
        }
    }

    fn fields(&self) -> [String; 4] {
        let mean = |sum: f64, n: usize| {
            if n == 0 {
                String::new()
            } else {
                num(sum / n as f64)
            }
        };
        [
            self.solved.to_string(),
            mean(self.energy, self.solved),
            mean(self.delay, self.solved),
            mean(self.sampled, self.sampled_count),
        ]
    }
}

type Run = Option<(f64, f64, Option<f64>)>;

fn solve_for_row(
    algorithm: Algorithm,
    s: &Scenario,
    d: &DemandMatrix,
    y: &CachePlacement,
    alpha: f64,
    solver: &Solver,
    seed: u64,
) -> Result<Run, Failure> {
    match run(algorithm, s, d, y, alpha, solver) {
        Ok(sol) => {
            let sampled = sampled_delay(s, d, y, &sol.assoc, solver.sample_backhaul, seed)?;
            Ok(Some((sol.objective.energy, sol.objective.delay, sampled)))
        }
        Err(e) => classify(e).map(|_| None),
    }
}

fn check_fractions(grid: &[f64]) -> Result<(), Failure> {
    if grid.is_empty() {
        return Err(Failure::usage("empty capacity grid"));
    }
    match grid.iter().find(|f| !(f.is_finite() && **f >= 0.0)) {
        Some(f) => Err(Failure::usage(format!(
            "capacity fraction {f} must be nonnegative"
        ))),
        None => Ok(()),
    }
}

fn with_capacity_fraction(instance: &Instance, fraction: f64) -> Result<Instance, Failure> {
    let s = &instance.scenario;
    let scenario = s.with_cache_capacity(vec![fraction * s.total_catalog_size(); s.sbs_count()])?;
    Ok(Instance {
        scenario,
        ..instance.clone()
    })
}

pub fn compare_caching(args: &CachingArgs) -> Result<u8, Failure> {
    check_solver(&args.solver)?;
    check_alpha(args.alpha)?;
    check_fractions(&args.capacity)?;
    reject_instance(&args.source, "compare-caching")?;
    let config = base_config(&args.source)?;
    let policies = [Policy::Lpf, Policy::Gpc, Policy::Rc];
    let seeds: Vec<u64> = (0..args.instances).map(|k| args.source.seed + k).collect();
    let instances: Vec<Instance> = seeds
        .iter()
        .map(|&seed| Ok(generate_instance(&config, seed)?))
        .collect::<Result<_, Failure>>()?;
    let n = seeds.len();
    let jobs: Vec<(usize, usize, usize)> = (0..policies.len())
        .flat_map(|p| (0..args.capacity.len()).flat_map(move |c| (0..n).map(move |k| (p, c, k))))
        .collect();
    let results: Vec<(f64, Run)> = jobs
        .par_iter()
        .map(|&(p, c, k)| {
            let inst = with_capacity_fraction(&instances[k], args.capacity[c])?;
            let y = placement_for(policies[p], &inst, seeds[k]);
            let hit = hit_ratio(&y, &inst.popularity()).1;
            let (s, d) = (&inst.scenario, &inst.demands);
            let run = solve_for_row(
                Algorithm::Ucwt,
                s,
                d,
                &y,
                args.alpha,
                &args.solver,
                seeds[k],
            )?;
            Ok((hit, run))
        })
        .collect::<Result<_, Failure>>()?;

    let mut w = writer(&args.output.out, "compare_caching.csv")?;
    w.write_record([
        "policy",
        "capacity_fraction",
        "instances",
        "hit_ratio",
        "solved",
        "energy_joules",
        "delay_seconds",
        "sampled_delay_seconds",
    ])?;
    for (chunk, (p, c)) in results
        .chunks(seeds.len().max(1))
        .zip((0..policies.len()).flat_map(|p| (0..args.capacity.len()).map(move |c| (p, c))))
    {
        let mut means = Means::default();
        for (_, r) in chunk {
            if let Some((e, dl, sd)) = r {
                means.add(*e, *dl, *sd);
            }
        }
        let hit = chunk.iter().map(|(h, _)| h).sum::<f64>() / chunk.len().max(1) as f64;
        let mut row = vec![
            format!("{:?}", policies[p]).to_lowercase(),
            num(args.capacity[c]),
            chunk.len().to_string(),
            num(hit),
        ];
        row.extend(means.fields());
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(0)
}

pub fn compare_algorithms(args: &AlgorithmArgs) -> Result<u8, Failure> {
    check_solver(&args.solver)?;
    check_alpha(args.alpha)?;
    reject_instance(&args.source, "compare-algorithms")?;
    let config = base_config(&args.source)?;
    let values = match (&args.values, args.sweep) {
        (Some(v), _) => v.clone(),
        (None, SweepVariable::Users) if args.source.paper_scale => vec![50.0, 100.0, 150.0],
        (None, SweepVariable::Users) => vec![2.0, 4.0, 6.0, 8.0],
        (None, SweepVariable::Capacity) => vec![0.1, 0.25, 0.5, 1.0],
    };
    match args.sweep {
        SweepVariable::Users => {
            if let Some(v) = values.iter().find(|v| !(v.fract() == 0.0 && **v >= 1.0)) {
                return Err(Failure::usage(format!(
                    "user count {v} must be a positive integer"
                )));
            }
        }
        SweepVariable::Capacity => check_fractions(&values)?,
    }
    let algorithms = [Algorithm::Ucwt, Algorithm::Doa, Algorithm::Ema];
    let seeds: Vec<u64> = (0..args.instances).map(|k| args.source.seed + k).collect();
    let instances: Vec<Vec<Instance>> = values
        .iter()
        .map(|&v| {
            seeds
                .iter()
                .map(|&seed| match args.sweep {
                    SweepVariable::Users => {
                        let c = Config {
                            user_count: v as usize,
                            ..config.clone()
                        };
                        Ok(generate_instance(&c, seed)?)
                    }
                    SweepVariable::Capacity => {
                        with_capacity_fraction(&generate_instance(&config, seed)?, v)
                    }
                })
                .collect()
        })
        .collect::<Result<_, Failure>>()?;
    let n = seeds.len();
    let jobs: Vec<(usize, usize, usize)> = (0..values.len())
        .flat_map(|v| (0..algorithms.len()).flat_map(move |a| (0..n).map(move |k| (v, a, k))))
        .collect();
    let results: Vec<Run> = jobs
        .par_iter()
        .map(|&(v, a, k)| {
            let inst = &instances[v][k];
            let y = placement_for(Policy::Lpf, inst, seeds[k]);
            let (s, d) = (&inst.scenario, &inst.demands);
            solve_for_row(algorithms[a], s, d, &y, args.alpha, &args.solver, seeds[k])
        })
        .collect::<Result<_, Failure>>()?;

    let mut w = writer(&args.output.out, "compare_algorithms.csv")?;
    w.write_record([
        "sweep",
        "value",
        "algorithm",
        "instances",
        "solved",
        "energy_joules",
        "delay_seconds",
        "sampled_delay_seconds",
    ])?;
    let sweep = format!("{:?}", args.sweep).to_lowercase();
    for (chunk, (v, a)) in results
        .chunks(seeds.len().max(1))
        .zip((0..values.len()).flat_map(|v| (0..algorithms.len()).map(move |a| (v, a))))
    {
        let mut means = Means::default();
        for (e, dl, sd) in chunk.iter().flatten() {
            means.add(*e, *dl, *sd);
        }
        let mut row = vec![
            sweep.clone(),
            num(values[v]),
            format!("{:?}", algorithms[a]).to_lowercase(),
            chunk.len().to_string(),
        ];
        row.extend(means.fields());
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(0)
}

pub fn generate(args: &GenerateArgs) -> Result<u8, Failure> {
    reject_instance(&args.source, "generate")?;
    let config = base_config(&args.source)?;
    let instance = generate_instance(&config, args.source.seed)?;
    if let Some(dir) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    instance.save(&args.out)?;
    Ok(0)
}
