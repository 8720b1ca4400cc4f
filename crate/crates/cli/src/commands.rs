//! One function per subcommand; each returns the rendered output file.

use std::path::PathBuf;

use serde::Serialize;
use serde_json::json;

use additive_core::additive::{empirical_tail, evaluate_summary, AdditiveFunctionSpec};
use additive_core::converse::{theorem1_check, theorem3_check, ForwardOptions, TailReport};
use additive_core::levy::{mc_tail, sample};
use additive_core::prime_side::{distribution_table, moment, prime_measure, StepDistribution};
use additive_core::saddle::{eta_rho_gap, solve_eta, solve_rho, RangeGuard};
use additive_core::series::{coefficient_table, lambda_coeffs, levy_lambda_coeffs, DEFAULT_KMAX};
use additive_core::sieve::Sieve;
use additive_core::tails::{
    hwang_tail_saddle, hwang_tail_series, maciulis_tail_saddle, maciulis_tail_series, mills_value,
    poisson_value, TailValue,
};
use additive_core::tolerances::{CONVERSE_DISTANCE, CONVERSE_NEGATIVE_FLOOR};

use crate::catalog::{parse_spec, parse_target};
use crate::config::{parse_deltas, ExperimentConfig};
use crate::output::{render, Table};
use crate::CliError;

pub const CACHE_ENV: &str = "ADDITIVE_TAILS_CACHE_DIR";
pub const DEFAULT_X: u64 = 100_000;
pub const DEFAULT_MC_N: usize = 100_000;
pub const DEFAULT_CONVERSE_KMAX: usize = 12;

fn f(x: f64) -> String {
    format!("{x:.16e}")
}

fn fo(x: Option<f64>) -> String {
    x.map(f).unwrap_or_default()
}

fn missing(flag: &str, command: &str) -> CliError {
    CliError::Invalid(format!("`{command}` requires --{flag}"))
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    command: &'a str,
}

impl Ctx<'_> {
    fn spec(&self) -> Result<AdditiveFunctionSpec, CliError> {
        parse_spec(self.cfg.spec.as_deref().ok_or_else(|| missing("spec", self.command))?)
    }

    fn spec_or_omega(&self) -> Result<AdditiveFunctionSpec, CliError> {
        match &self.cfg.spec {
            Some(s) => parse_spec(s),
            None => Ok(AdditiveFunctionSpec::omega()),
        }
    }

    fn target(&self) -> Result<StepDistribution, CliError> {
        parse_target(self.cfg.target.as_deref().ok_or_else(|| missing("target", self.command))?)
    }

    fn target_or_delta_one(&self) -> Result<StepDistribution, CliError> {
        match &self.cfg.target {
            Some(t) => parse_target(t),
            None => Ok(StepDistribution::delta(1.0)?),
        }
    }

    fn deltas(&self) -> Result<Vec<f64>, CliError> {
        parse_deltas(self.cfg.deltas.as_deref().ok_or_else(|| missing("deltas", self.command))?)
    }

    fn x(&self) -> u64 {
        self.cfg.x.unwrap_or(DEFAULT_X)
    }

    fn x_grid(&self) -> Result<Vec<u64>, CliError> {
        match (&self.cfg.x_grid, self.cfg.x) {
            (Some(g), _) => Ok(g.clone()),
            (None, Some(x)) => Ok(vec![x]),
            (None, None) => Err(missing("x-grid", self.command)),
        }
    }

    fn kmax(&self, default: usize) -> usize {
        self.cfg.kmax.unwrap_or(default)
    }

    fn guard(&self) -> RangeGuard {
        self.cfg.guard.map(RangeGuard::new).unwrap_or_default()
    }

    fn seed(&self) -> u64 {
        self.cfg.seed.unwrap_or(0)
    }
}

fn sieve_for(limit: u64) -> Result<Sieve, CliError> {
    Ok(match std::env::var_os(CACHE_ENV) {
        Some(dir) => Sieve::with_cache(limit, &PathBuf::from(dir))?,
        None => Sieve::new(limit)?,
    })
}

pub fn run(cfg: &ExperimentConfig) -> Result<String, CliError> {
    let command = cfg
        .command
        .as_deref()
        .ok_or_else(|| CliError::Invalid("no command given".into()))?;
    let ctx = Ctx { cfg, command };
    match command {
        "sieve-stats" => sieve_stats(&ctx),
        "empirical" => empirical(&ctx),
        "tails" => tails(&ctx),
        "forward" => forward(&ctx),
        "coeffs" => coeffs(&ctx),
        "moments" => moments(&ctx),
        "distribution" => distribution(&ctx),
        "saddle" => saddle(&ctx),
        "sample-levy" => sample_levy(&ctx),
        "converse" => converse(&ctx),
        other => Err(CliError::Invalid(format!("unknown command '{other}'"))),
    }
}

fn sieve_stats(ctx: &Ctx) -> Result<String, CliError> {
    let spec = ctx.spec_or_omega()?;
    let grid = ctx.x_grid().unwrap_or_else(|_| vec![ctx.x()]);
    let sieve = sieve_for(*grid.iter().max().unwrap())?;
    let mut table = Table::new(&["x", "primes", "mu", "b2"]);
    let mut rows = Vec::new();
    for &x in &grid {
        sieve.check(x)?;
        let m = prime_measure(&spec, &sieve, x)?;
        let count = sieve.primes().count_upto(x);
        table.push(vec![x.to_string(), count.to_string(), f(m.mu()), f(m.total_mass())]);
        rows.push(json!({"x": x, "primes": count, "mu": m.mu(), "b2": m.total_mass()}));
    }
    table.note("spec", &spec.name);
    Ok(render(ctx.cfg, ctx.command, &table, &json!({"spec": spec.name, "rows": rows})))
}

fn empirical(ctx: &Ctx) -> Result<String, CliError> {
    let spec = ctx.spec()?;
    let x = ctx.x();
    let deltas = ctx.deltas()?;
    let sieve = sieve_for(x)?;
    let stats = evaluate_summary(&spec, &sieve, x)?;
    let rows = empirical_tail(&stats, &deltas)?;
    let mut table = Table::new(&["delta", "tail"]);
    for r in &rows {
        table.push(vec![f(r.delta), f(r.tail)]);
    }
    table.note("spec", &spec.name);
    table.note("x", x);
    table.note("mu", f(stats.mu));
    table.note("b2", f(stats.b2));
    let report = json!({"spec": spec.name, "x": x, "mu": stats.mu, "b2": stats.b2, "rows": rows});
    Ok(render(ctx.cfg, ctx.command, &table, &report))
}

fn forward_report(ctx: &Ctx, default_mc: usize) -> Result<TailReport, CliError> {
    let spec = ctx.spec()?;
    let target = ctx.target()?;
    let x = ctx.x();
    let deltas = ctx.deltas()?;
    let sieve = sieve_for(x)?;
    let options = ForwardOptions {
        kmax: ctx.kmax(DEFAULT_KMAX),
        guard: ctx.guard(),
        mc_n: ctx.cfg.mc_n.unwrap_or(default_mc),
        seed: ctx.seed(),
    };
    Ok(theorem3_check(&spec, &sieve, x, &target, &deltas, options)?)
}

fn report_notes(table: &mut Table, r: &TailReport) {
    table.note("spec", &r.spec);
    table.note("x", r.x);
    table.note("target", r.target.to_spec_string());
    table.note("mu", f(r.mu));
    table.note("B", f(r.b));
    table.note("kolmogorov", f(r.kolmogorov));
    table.note("guard", r.options.guard.max_ratio);
    table.note("kmax", r.options.kmax);
}

fn tails(ctx: &Ctx) -> Result<String, CliError> {
    let report = forward_report(ctx, 0)?;
    let mut table = Table::new(&[
        "delta",
        "empirical",
        "poisson",
        "hwang_saddle",
        "hwang_series",
        "maciulis_saddle",
        "maciulis_series",
        "mc",
        "mc_lo",
        "mc_hi",
        "ratio",
        "range_skipped",
    ]);
    for r in &report.rows {
        table.push(vec![
            f(r.delta),
            f(r.empirical),
            f(r.poisson),
            fo(r.hwang_saddle),
            fo(r.hwang_series),
            fo(r.maciulis_saddle),
            fo(r.maciulis_series),
            fo(r.mc.map(|m| m.estimate)),
            fo(r.mc.map(|m| m.ci_lo)),
            fo(r.mc.map(|m| m.ci_hi)),
            fo(r.ratio),
            r.range_skipped.to_string(),
        ]);
    }
    report_notes(&mut table, &report);
    if report.options.mc_n > 0 {
        table.note("mc_n", report.options.mc_n);
        table.note("seed", report.options.seed);
    }
    Ok(render(ctx.cfg, ctx.command, &table, &report))
}

#[derive(Serialize)]
struct FormRow {
    delta: f64,
    form: &'static str,
    #[serde(flatten)]
    value: TailValue,
}

fn forward(ctx: &Ctx) -> Result<String, CliError> {
    let report = forward_report(ctx, DEFAULT_MC_N)?;
    let spec = ctx.spec()?;
    let target = ctx.target()?;
    let sieve = sieve_for(report.x)?;
    let measure = prime_measure(&spec, &sieve, report.x)?;
    let b = measure.b();
    let kmax = report.options.kmax;
    let lambda = lambda_coeffs(&measure, kmax);
    let big = levy_lambda_coeffs(&target, kmax);
    let guard = report.options.guard;

    let mut forms = Vec::new();
    for r in &report.rows {
        let delta = r.delta;
        let mut push = |form: &'static str, v: additive_core::Result<TailValue>| -> Result<(), CliError> {
            match v {
                Ok(value) => {
                    forms.push(FormRow { delta, form, value });
                    Ok(())
                }
                Err(additive_core::Error::Range { .. }) => Ok(()),
                Err(e) => Err(e.into()),
            }
        };
        push("hwang-series", hwang_tail_series(&big, b, delta))?;
        push("maciulis-series", maciulis_tail_series(&lambda, b, delta))?;
        if !r.range_skipped {
            let rho = solve_rho(&target, b, delta, guard)?;
            let eta = solve_eta(&measure, measure.mu(), delta, guard)?;
            push("hwang-saddle", hwang_tail_saddle(&target, b, delta, &rho))?;
            push("maciulis-saddle", maciulis_tail_saddle(&measure, delta, &eta))?;
        }
        push("poisson", poisson_value(measure.total_mass(), delta))?;
        push("mills", Ok(mills_value(delta)))?;
    }
    let mut table = Table::new(&[
        "delta",
        "form",
        "log_correction",
        "gaussian_factor",
        "value",
        "remainder_bound",
        "clamped",
    ]);
    for row in &forms {
        let v = &row.value;
        table.push(vec![
            f(row.delta),
            row.form.to_string(),
            f(v.log_correction),
            f(v.gaussian_factor),
            f(v.value),
            f(v.remainder_bound),
            v.clamped.to_string(),
        ]);
    }
    report_notes(&mut table, &report);
    table.note("mc_n", report.options.mc_n);
    table.note("seed", report.options.seed);
    for r in &report.rows {
        table.note(
            "empirical",
            format!(
                "delta={} tail={} mc={} range_skipped={}",
                f(r.delta),
                f(r.empirical),
                fo(r.mc.map(|m| m.estimate)),
                r.range_skipped
            ),
        );
    }
    Ok(render(ctx.cfg, ctx.command, &table, &json!({"tail_report": report, "forms": forms})))
}

fn coeffs(ctx: &Ctx) -> Result<String, CliError> {
    let spec = ctx.spec()?;
    let target = ctx.target_or_delta_one()?;
    let x = ctx.x();
    let kmax = ctx.kmax(DEFAULT_KMAX);
    let sieve = sieve_for(x)?;
    let measure = prime_measure(&spec, &sieve, x)?;
    let rows = coefficient_table(&lambda_coeffs(&measure, kmax), &levy_lambda_coeffs(&target, kmax));
    let mut table = Table::new(&["k", "lambda", "Lambda", "diff"]);
    for r in rows.iter().skip(1) {
        table.push(vec![r.k.to_string(), f(r.lambda), f(r.big_lambda), f(r.diff)]);
    }
    table.note("spec", &spec.name);
    table.note("x", x);
    table.note("target", target.to_spec_string());
    let report = json!({"spec": spec.name, "x": x, "target": target, "rows": &rows[1..]});
    Ok(render(ctx.cfg, ctx.command, &table, &report))
}

fn moments(ctx: &Ctx) -> Result<String, CliError> {
    let spec = ctx.spec()?;
    let target = ctx.target_or_delta_one()?;
    let x = ctx.x();
    let kmax = ctx.kmax(DEFAULT_KMAX);
    let sieve = sieve_for(x)?;
    let measure = prime_measure(&spec, &sieve, x)?;
    let mut table = Table::new(&["l", "moment", "target_moment", "diff"]);
    let mut rows = Vec::new();
    for l in 0..kmax as u32 {
        let m = moment(&measure, l);
        let t = target.moment(l);
        table.push(vec![l.to_string(), f(m), f(t), f(m - t)]);
        rows.push(json!({"l": l, "moment": m, "target_moment": t, "diff": m - t}));
    }
    table.note("spec", &spec.name);
    table.note("x", x);
    table.note("target", target.to_spec_string());
    let report = json!({"spec": spec.name, "x": x, "target": target, "rows": rows});
    Ok(render(ctx.cfg, ctx.command, &table, &report))
}

fn distribution(ctx: &Ctx) -> Result<String, CliError> {
    let spec = ctx.spec()?;
    let target = ctx.target()?;
    let x = ctx.x();
    let sieve = sieve_for(x)?;
    let measure = prime_measure(&spec, &sieve, x)?;
    let rows = distribution_table(&measure, &target);
    let mut table = Table::new(&["t", "K", "Psi", "diff"]);
    for r in &rows {
        table.push(vec![f(r.t), f(r.k), f(r.psi), f(r.diff)]);
    }
    table.note("spec", &spec.name);
    table.note("x", x);
    table.note("target", target.to_spec_string());
    let report = json!({"spec": spec.name, "x": x, "target": target, "rows": rows});
    Ok(render(ctx.cfg, ctx.command, &table, &report))
}

fn saddle(ctx: &Ctx) -> Result<String, CliError> {
    let spec = ctx.spec()?;
    let target = ctx.target()?;
    let x = ctx.x();
    let deltas = ctx.deltas()?;
    let sieve = sieve_for(x)?;
    let measure = prime_measure(&spec, &sieve, x)?;
    let rows = eta_rho_gap(&measure, measure.mu(), &target, &deltas, ctx.guard())?;
    let mut table = Table::new(&["delta", "eta", "rho", "gap", "b2_gap"]);
    for r in &rows {
        table.push(vec![f(r.delta), f(r.eta), f(r.rho), f(r.gap), f(r.b2_gap)]);
    }
    table.note("spec", &spec.name);
    table.note("x", x);
    table.note("target", target.to_spec_string());
    table.note("B", f(measure.b()));
    let report = json!({"spec": spec.name, "x": x, "target": target, "b": measure.b(), "rows": rows});
    Ok(render(ctx.cfg, ctx.command, &table, &report))
}

fn sample_levy(ctx: &Ctx) -> Result<String, CliError> {
    let target = ctx.target()?;
    let u = match (ctx.cfg.u, &ctx.cfg.spec) {
        (Some(u), _) => u,
        (None, Some(_)) => {
            let x = ctx.x();
            let sieve = sieve_for(x)?;
            prime_measure(&ctx.spec()?, &sieve, x)?.total_mass()
        }
        (None, None) => return Err(missing("u (or --spec and --x)", ctx.command)),
    };
    let deltas = ctx.deltas()?;
    let n = ctx.cfg.mc_n.unwrap_or(DEFAULT_MC_N);
    let seed = ctx.seed();
    let batch = sample(&target, u, n, seed)?;
    let mut table = Table::new(&["threshold", "estimate", "ci_lo", "ci_hi", "n", "seed"]);
    let mut rows = Vec::new();
    for &d in &deltas {
        let t = mc_tail(&batch, d * u.sqrt())?;
        table.push(vec![f(t.threshold), f(t.estimate), f(t.ci_lo), f(t.ci_hi), t.n.to_string(), t.seed.to_string()]);
        rows.push(t);
    }
    table.note("target", target.to_spec_string());
    table.note("u", f(u));
    table.note("threshold", "delta * sqrt(u)");
    let report = json!({"target": target, "u": u, "n": n, "seed": seed, "rows": rows});
    Ok(render(ctx.cfg, ctx.command, &table, &report))
}

fn converse(ctx: &Ctx) -> Result<String, CliError> {
    let spec = ctx.spec()?;
    let target = ctx.target()?;
    let grid = ctx.x_grid()?;
    let kmax = ctx.kmax(DEFAULT_CONVERSE_KMAX);
    let sieve = sieve_for(*grid.iter().max().unwrap())?;
    let t_grid: Vec<f64> = (1..=64).map(|k| target.alpha() * k as f64 / 64.0).collect();
    let report = theorem1_check(&spec, &sieve, &grid, &target, kmax, &t_grid)?;
    let mut table = Table::new(&[
        "x",
        "B",
        "distance",
        "grid_distance",
        "direct_distance",
        "residual",
        "amplification",
        "reconstruction",
    ]);
    for r in &report.rows {
        let atoms: Vec<String> = r
            .reconstruction
            .atoms()
            .iter()
            .map(|(a, w)| format!("{a}@{w}"))
            .collect();
        table.push(vec![
            r.x.to_string(),
            f(r.b),
            f(r.distance),
            f(r.grid_distance),
            f(r.direct_distance),
            f(r.residual),
            f(r.amplification),
            atoms.join(" "),
        ]);
    }
    let last = report.rows.last().map(|r| r.distance).unwrap_or(f64::NAN);
    let verdicts = json!({
        "distance_decreasing": report.distance_decreasing(),
        "final_distance_below": {"threshold": CONVERSE_DISTANCE, "pass": last < CONVERSE_DISTANCE},
        "negative_control_floor": CONVERSE_NEGATIVE_FLOOR,
    });
    table.note("spec", &spec.name);
    table.note("target", target.to_spec_string());
    table.note("kmax", kmax);
    table.note("margin", report.margin);
    table.note("distance_decreasing", report.distance_decreasing());
    Ok(render(ctx.cfg, ctx.command, &table, &json!({"report": report, "verdicts": verdicts})))
}
