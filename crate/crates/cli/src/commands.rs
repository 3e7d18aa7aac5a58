use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use countsketch::concentration::{
    median_cubed_check, median_tail_probability, reference_specs, small_ball_curve,
    standard_eps_grid, vector_median_stress, Evaluation,
};
use countsketch::metrics::{
    countmin_comparison, point_error_experiment, tail_curve_experiment, topk_experiment, IndexPolicy,
    PointErrorReport, TopKReport,
};
use countsketch::signals::read_vector;
use countsketch::stats::{fit_proportional, quantile, Histogram, HISTOGRAM_BINS, HISTOGRAM_UPPER_QUANTILE};
use countsketch::{derive_seed, SignalSpec, SketchConfig};

use crate::output::{Cell, Format, Report, Table};
use crate::settings::{parse_grid, parse_list, parse_pairs, read_config_file, Resolver};
use crate::{Cli, CliError, Command, Common, SignalArg};

/// Every key a config file may carry. Keys that the running subcommand
/// does not use are ignored, so one file can serve all subcommands.
const KNOWN_KEYS: &[&str] = &[
    "n", "k", "rows", "cols", "alpha", "trials", "seed", "out", "format", "threads", "signal",
    "signal-file", "sigma-log", "per-trial", "pairs", "rows-sweep", "cols-sweep", "k-sweep",
    "variance-cols", "t-grid", "ensembles", "lists", "mc-trials",
];

struct Base {
    out: PathBuf,
    format: Format,
    seed: u64,
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.common.config {
        Some(path) => read_config_file(path)?,
        None => BTreeMap::new(),
    };
    let mut r = Resolver::new(file);
    let c = &cli.common;
    let base = Base {
        out: PathBuf::from(r.get("out", c.out.as_ref().map(|p| p.display().to_string()), ".".into())?),
        format: r.get("format", c.format, Format::Csv)?,
        seed: r.get("seed", c.seed, 1)?,
    };
    let threads = r.get_opt("threads", c.threads)?;
    let pending = match &cli.command {
        Command::PointError { pairs } => point_error(&mut r, c, &base, pairs.clone())?,
        Command::Topk {
            rows_sweep,
            cols_sweep,
            k_sweep,
            variance_cols,
        } => topk(&mut r, c, &base, [rows_sweep, cols_sweep, k_sweep], *variance_cols)?,
        Command::Tailcurve { t_grid } => tailcurve(&mut r, c, &base, t_grid.clone())?,
        Command::Concentration {
            ensembles,
            lists,
            mc_trials,
            force_fail,
        } => concentration(&mut r, &base, *ensembles, *lists, *mc_trials, *force_fail)?,
        Command::CompareCm => compare_cm(&mut r, c, &base)?,
    };
    pending.finish(r, &base, threads)
}

/// A subcommand's work, deferred until every parameter is resolved and
/// validated.
struct Pending(Box<dyn FnOnce(Vec<(String, String)>) -> Result<Report, CliError>>);

impl Pending {
    fn finish(self, mut r: Resolver, base: &Base, threads: Option<usize>) -> Result<(), CliError> {
        for key in KNOWN_KEYS {
            r.ignore(key);
        }
        let metadata = r.finish()?;
        if let Some(t) = threads {
            if t == 0 {
                return Err(CliError::Usage("threads must be at least 1".into()));
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build_global()
                .map_err(|e| CliError::Internal(e.to_string()))?;
        }
        let outcome = (self.0)(metadata);
        let report = match outcome {
            Ok(report) => report,
            Err(e) => return Err(e),
        };
        write_report(&report, &base.out, base.format)?;
        report_verdict(&report)
    }
}

/// Checks that ran but failed travel in the report so files are still
/// written; this turns them into the exit status.
fn report_verdict(report: &Report) -> Result<(), CliError> {
    let failed: Vec<&str> = report
        .tables
        .iter()
        .flat_map(|t| t.extra.iter())
        .filter(|(k, _)| k == "failed")
        .map(|(_, v)| v.as_str())
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Experiment(failed.join("; ")))
    }
}

fn write_report(report: &Report, out: &Path, format: Format) -> Result<(), CliError> {
    for path in report.write(out, format)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn positive(key: &str, v: usize) -> Result<usize, CliError> {
    if v == 0 {
        return Err(CliError::Usage(format!("{key} must be at least 1")));
    }
    Ok(v)
}

fn resolve_signal(r: &mut Resolver, c: &Common, seed: u64, default_n: usize) -> Result<SignalSpec, CliError> {
    let kind = r.get("signal", c.signal, SignalArg::Pareto)?;
    let spec = match kind {
        SignalArg::Pareto => {
            let n = r.get("n", c.n, default_n)?;
            SignalSpec::pareto(n, r.get("alpha", c.alpha, 1.25)?, derive_seed(seed, 0x5160, 0))
        }
        SignalArg::PowerLaw => {
            let n = r.get("n", c.n, default_n)?;
            SignalSpec::power_law(n, r.get("alpha", c.alpha, 1.25)?)
        }
        SignalArg::Lognormal => {
            let n = r.get("n", c.n, default_n)?;
            SignalSpec::lognormal(n, r.get("sigma-log", c.sigma_log, 1.0)?, derive_seed(seed, 0x5160, 0))
        }
        SignalArg::File => {
            let path = r
                .get_opt("signal-file", c.signal_file.as_ref().map(|p| p.display().to_string()))?
                .ok_or_else(|| CliError::Usage("--signal file needs --signal-file".into()))?;
            let f = std::fs::File::open(&path)
                .map_err(|e| CliError::Usage(format!("cannot open signal file {path}: {e}")))?;
            let values = read_vector(std::io::BufReader::new(f))?;
            if let Some(n) = r.get_opt("n", c.n)? {
                if n != values.len() {
                    return Err(CliError::Usage(format!(
                        "--n {n} disagrees with the {} values in {path}",
                        values.len()
                    )));
                }
            } else {
                r.note("n", values.len());
            }
            SignalSpec::explicit(values)
        }
    };
    spec.validate()?;
    Ok(spec)
}

fn policy(per_trial: usize) -> IndexPolicy {
    if per_trial == 0 {
        IndexPolicy::All
    } else {
        IndexPolicy::Uniform { per_trial }
    }
}

fn check_k(k: usize, n: usize) -> Result<usize, CliError> {
    if k == 0 || 2 * k > n {
        return Err(CliError::Usage(format!("need 1 <= k and 2k <= n (k = {k}, n = {n})")));
    }
    Ok(k)
}

fn histogram_rows(table: &mut Table, prefix: &[Cell], h: &Histogram) {
    for b in &h.bins {
        let mut row = vec![Cell::from("bin")];
        row.extend_from_slice(prefix);
        row.extend([b.left.into(), b.right.into(), b.density.into(), Cell::Empty]);
        table.push(row);
    }
}

fn summary_row(table: &mut Table, name: &str, prefix: &[Cell], value: f64) {
    let mut row = vec![Cell::from(name)];
    row.extend_from_slice(prefix);
    row.extend([Cell::Empty, Cell::Empty, Cell::Empty, value.into()]);
    table.push(row);
}

fn point_error(r: &mut Resolver, c: &Common, base: &Base, pairs: Option<String>) -> Result<Pending, CliError> {
    let signal = resolve_signal(r, c, base.seed, 1_000_000)?;
    let trials = positive("trials", r.get("trials", c.trials, 20)?)?;
    let per_trial = r.get("per-trial", c.per_trial, 1000)?;
    let pairs = parse_pairs("pairs", &r.get("pairs", pairs, "13x100,26x100,26x200".into())?)?;
    let configs = pairs
        .iter()
        .map(|&(rows, cols)| SketchConfig::count_sketch(rows, cols, base.seed))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Pending(Box::new(move |metadata| {
        let mut tables = Vec::new();
        for config in configs {
            let rep = point_error_experiment(&signal, &config, trials, policy(per_trial))?;
            println!(
                "R={} C={}: mean E_p/m = {:.4}, stddev = {:.4}",
                config.rows, config.columns, rep.mean, rep.stddev
            );
            tables.push(point_error_table(&rep));
        }
        Ok(Report {
            command: "point-error",
            metadata,
            tables,
        })
    })))
}

fn point_error_table(rep: &PointErrorReport) -> Table {
    let (rows, cols) = (rep.config.rows, rep.config.columns);
    let mut t = Table::new(
        format!("point_error_R{rows}_C{cols}"),
        vec!["row", "bin_left", "bin_right", "density", "value"],
    );
    t.note("sketch", format!("R={rows} C={cols}"));
    histogram_rows(&mut t, &[], &rep.histogram);
    summary_row(&mut t, "mean_Ep_over_m", &[], rep.mean);
    summary_row(&mut t, "stddev", &[], rep.stddev);
    summary_row(&mut t, "m_RC", &[], rep.normalizer);
    t
}

fn topk(
    r: &mut Resolver,
    c: &Common,
    base: &Base,
    sweeps: [&Option<String>; 3],
    variance_cols: Option<u32>,
) -> Result<Pending, CliError> {
    let signal = resolve_signal(r, c, base.seed, 10_000)?;
    let k = check_k(r.get("k", c.k, 25)?, signal.n)?;
    let rows = r.get("rows", c.rows, 26)?;
    let cols = r.get("cols", c.cols, 100)?;
    let trials = positive("trials", r.get("trials", c.trials, 200)?)?;
    let rows_sweep: Vec<u32> = parse_list("rows-sweep", &r.get("rows-sweep", sweeps[0].clone(), "10,14,18,22,26,30".into())?)?;
    let cols_sweep: Vec<u32> = parse_list("cols-sweep", &r.get("cols-sweep", sweeps[1].clone(), "50,75,100,150,200".into())?)?;
    let k_sweep: Vec<usize> = parse_list("k-sweep", &r.get("k-sweep", sweeps[2].clone(), "10,25,50,100".into())?)?;
    let variance_cols = r.get("variance-cols", variance_cols, 400)?;
    for &kk in &k_sweep {
        check_k(kk, signal.n)?;
    }
    let seed = base.seed;
    let operating = SketchConfig::count_sketch(rows, cols, seed)?;
    let by_rows = rows_sweep
        .iter()
        .map(|&rr| SketchConfig::count_sketch(rr, cols, seed))
        .collect::<Result<Vec<_>, _>>()?;
    let by_cols = cols_sweep
        .iter()
        .map(|&cc| SketchConfig::count_sketch(rows, cc, seed))
        .collect::<Result<Vec<_>, _>>()?;
    let variance_config = SketchConfig::count_sketch(rows, variance_cols, seed)?;

    Ok(Pending(Box::new(move |metadata| {
        let op = topk_experiment(&signal, &operating, k, trials)?;
        println!(
            "operating point R={rows} C={cols} k={k}: mean E_k/(m sqrt k) = {:.4}",
            op.mean_normalized
        );
        let mut dist = Table::new("topk_distribution", vec!["row", "bin_left", "bin_right", "density", "value"]);
        histogram_rows(&mut dist, &[], &op.histogram);
        summary_row(&mut dist, "mean_Ek_over_m_sqrtk", &[], op.mean_normalized);
        summary_row(&mut dist, "mean_Ek", &[], op.mean_error);
        summary_row(&mut dist, "relative_variance", &[], op.relative_variance);

        let sweep_table = |name: &str, configs: &[SketchConfig]| -> Result<Table, CliError> {
            let mut t = Table::new(name, vec!["rows", "cols", "mean_Ek_over_m_sqrtk", "mean_Ek"]);
            for cfg in configs {
                let rep: TopKReport = topk_experiment(&signal, cfg, k, trials)?;
                t.push(vec![cfg.rows.into(), cfg.columns.into(), rep.mean_normalized.into(), rep.mean_error.into()]);
            }
            Ok(t)
        };
        let vs_rows = sweep_table("topk_vs_rows", &by_rows)?;
        let vs_cols = sweep_table("topk_vs_cols", &by_cols)?;

        let mut var = Table::new(
            "topk_variance_vs_k",
            vec!["k", "rows", "cols", "relative_variance", "mean_Ek_over_m_sqrtk"],
        );
        let mut inv_k = Vec::new();
        let mut vars = Vec::new();
        for &kk in &k_sweep {
            let rep = topk_experiment(&signal, &variance_config, kk, trials)?;
            inv_k.push(1.0 / kk as f64);
            vars.push(rep.relative_variance);
            var.push(vec![
                kk.into(),
                variance_config.rows.into(),
                variance_config.columns.into(),
                rep.relative_variance.into(),
                rep.mean_normalized.into(),
            ]);
        }
        if let Some((cfit, r2)) = fit_proportional(&inv_k, &vars) {
            println!("variance of E_k/E[E_k] ~ {cfit:.4}/k (R^2 {r2:.4})");
            var.note("fit_c_over_k", format!("{cfit:.16e}"));
            var.note("fit_r_squared", format!("{r2:.16e}"));
        }
        Ok(Report {
            command: "topk",
            metadata,
            tables: vec![dist, vs_rows, vs_cols, var],
        })
    })))
}

fn tailcurve(r: &mut Resolver, c: &Common, base: &Base, t_grid: Option<String>) -> Result<Pending, CliError> {
    let signal = resolve_signal(r, c, base.seed, 10_000)?;
    let k = check_k(r.get("k", c.k, 25)?, signal.n)?;
    let config = SketchConfig::count_sketch(r.get("rows", c.rows, 31)?, r.get("cols", c.cols, 100)?, base.seed)?;
    let trials = positive("trials", r.get("trials", c.trials, 200)?)?;
    let per_trial = r.get("per-trial", c.per_trial, 0)?;
    let grid = parse_grid("t-grid", &r.get("t-grid", t_grid, "1..12".into())?)?;
    let rows = f64::from(config.rows);
    if grid.iter().any(|&t| !(t > 0.0 && t <= rows)) {
        return Err(CliError::Usage(format!("t-grid values must lie in (0, R] = (0, {rows}]")));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::Usage("t-grid must be strictly increasing".into()));
    }
    Ok(Pending(Box::new(move |metadata| {
        let curve = tail_curve_experiment(&signal, &config, k, &grid, trials, policy(per_trial))?;
        let mut t = Table::new("tailcurve", vec!["t", "prob", "ci_halfwidth"]);
        for ((&tv, &p), &h) in curve.t_grid.iter().zip(&curve.empirical_prob).zip(&curve.ci_halfwidth) {
            t.push(vec![tv.into(), p.into(), h.into()]);
        }
        let (lo, hi) = curve.usable_window();
        t.note("usable_window", format!("[{lo:.16e}, {hi:.16e}]"));
        match curve.fit {
            Some(fit) => {
                println!("slope {:.4}, R^2 {:.4} over {} points", fit.slope, fit.r_squared, fit.points);
                t.note("slope", format!("{:.16e}", fit.slope));
                t.note("intercept", format!("{:.16e}", fit.intercept));
                t.note("r_squared", format!("{:.16e}", fit.r_squared));
                t.note("fit_points", fit.points);
            }
            None => {
                t.note("slope", "degenerate");
                t.note(
                    "failed",
                    "degenerate tail curve: fewer than 3 grid points inside the usable window",
                );
            }
        }
        Ok(Report {
            command: "tailcurve",
            metadata,
            tables: vec![t],
        })
    })))
}

fn concentration(
    r: &mut Resolver,
    base: &Base,
    ensembles: Option<usize>,
    lists: Option<usize>,
    mc_trials: Option<usize>,
    force_fail: bool,
) -> Result<Pending, CliError> {
    let ensembles = positive("ensembles", r.get("ensembles", ensembles, 100_000)?)?;
    let lists = positive("lists", r.get("lists", lists, 10)?)?;
    let mc_trials = positive("mc-trials", r.get("mc-trials", mc_trials, 100_000)?)?;
    let seed = base.seed;
    Ok(Pending(Box::new(move |metadata| {
        let mut t = Table::new("concentration", vec!["check", "case", "value", "bound", "passed", "detail"]);
        let mut failed = Vec::new();
        let mut record = |t: &mut Table, check: &str, case: String, value: f64, bound: f64, ok: bool, detail: String| {
            println!(
                "{check} [{}] {case}: {value:.4e} vs {bound:.4e}{}",
                if ok { "PASS" } else { "FAIL" },
                if detail.is_empty() { String::new() } else { format!(" ({detail})") }
            );
            if !ok {
                failed.push(format!("{check} {case}"));
            }
            t.push(vec![check.into(), Cell::Text(case), value.into(), bound.into(), ok.into(), Cell::Text(detail)]);
        };

        let grid = standard_eps_grid();
        for (i, (name, spec)) in reference_specs().into_iter().enumerate() {
            let eval = Evaluation::Auto {
                trials: mc_trials,
                seed: derive_seed(seed, 0x5ba1, i as u64),
            };
            let curve = small_ball_curve(&spec, &grid, eval)?;
            let worst = curve.iter().map(|p| p.ratio()).fold(f64::INFINITY, f64::min);
            let filter_ok = curve.iter().all(|p| {
                p.small_ball.value >= p.triangle.value - 3.0 * (p.small_ball.half_width + p.triangle.half_width)
            });
            let how = if curve[0].small_ball.exact { "exact" } else { "sampled" };
            record(
                &mut t,
                "small-ball",
                name.to_string(),
                worst,
                1.0 / 7.0,
                worst >= 1.0 / 7.0 && filter_ok,
                format!("{how}; min over eps of Pr/eps; triangle filter below: {filter_ok}"),
            );
        }

        for (i, (tt, p)) in [(25usize, 0.3), (49, 0.5), (99, 0.5)].into_iter().enumerate() {
            let m = median_tail_probability(p, tt, mc_trials, derive_seed(seed, 0x3ed1, i as u64))?;
            record(
                &mut t,
                "median-tail",
                format!("t={tt} p={p}"),
                m.frequency,
                m.bound + 3.0 * m.std_error,
                m.within_bound(3.0),
                format!("{} hits in {} trials", m.hits, m.trials),
            );
        }

        let s = vector_median_stress(ensembles, derive_seed(seed, 0x7ec7, 0))?;
        record(
            &mut t,
            "vector-median",
            format!("{ensembles} ensembles"),
            s.max_ratio,
            3f64.sqrt(),
            s.violations == 0,
            format!("{} violations", s.violations),
        );

        for (k, l) in [(3usize, 3usize), (3, 5), (5, 3)] {
            let mut equal = 0;
            let mut partitions = 0;
            for list in 0..lists as u64 {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0x3ed3, list));
                let mut values: Vec<f64> = Vec::with_capacity(k * l);
                while values.len() < k * l {
                    let v: f64 = rng.random_range(-1000.0..1000.0);
                    if !values.contains(&v) {
                        values.push(v);
                    }
                }
                let out = median_cubed_check(&values, k, l)?;
                partitions = out.partitions;
                equal += usize::from(out.equal);
            }
            record(
                &mut t,
                "median-cubed",
                format!("k={k} l={l}"),
                equal as f64 / lists as f64,
                1.0,
                equal == lists,
                format!("{partitions} partitions, {equal}/{lists} lists equal"),
            );
        }

        if force_fail {
            record(&mut t, "forced-failure", "test hook".into(), 1.0, 0.0, false, String::new());
        }
        if !failed.is_empty() {
            t.note("failed", failed.join(", "));
        }
        Ok(Report {
            command: "concentration",
            metadata,
            tables: vec![t],
        })
    })))
}

fn compare_cm(r: &mut Resolver, c: &Common, base: &Base) -> Result<Pending, CliError> {
    let signal = resolve_signal(r, c, base.seed, 100_000)?;
    if let countsketch::SignalKind::Explicit(values) = &signal.kind {
        if let Some(i) = values.iter().position(|&v| v < 0.0) {
            return Err(CliError::Usage(format!(
                "Count-Min needs a nonnegative signal; entry {i} is negative"
            )));
        }
    }
    let config = SketchConfig::count_sketch(r.get("rows", c.rows, 26)?, r.get("cols", c.cols, 100)?, base.seed)?;
    let trials = positive("trials", r.get("trials", c.trials, 100)?)?;
    let per_trial = r.get("per-trial", c.per_trial, 500)?;
    Ok(Pending(Box::new(move |metadata| {
        let cmp = countmin_comparison(&signal, &config, trials, policy(per_trial))?;
        let upper = quantile(&cmp.count_sketch.normalized, HISTOGRAM_UPPER_QUANTILE)
            .max(quantile(&cmp.count_min.normalized, HISTOGRAM_UPPER_QUANTILE));
        let mut t = Table::new(
            "compare_cm",
            vec!["row", "sketch_kind", "bin_left", "bin_right", "density", "value"],
        );
        for (kind, rep) in [("count_sketch", &cmp.count_sketch), ("count_min", &cmp.count_min)] {
            let h = Histogram::with_range(&rep.normalized, HISTOGRAM_BINS, upper);
            histogram_rows(&mut t, &[kind.into()], &h);
        }
        for (kind, rep) in [("count_sketch", &cmp.count_sketch), ("count_min", &cmp.count_min)] {
            summary_row(&mut t, "mean_Ep_over_m", &[kind.into()], rep.mean);
        }
        summary_row(&mut t, "ratio", &[Cell::Empty], cmp.mean_ratio);
        summary_row(&mut t, "ratio_ci_lower", &[Cell::Empty], cmp.ratio_ci.lower);
        summary_row(&mut t, "ratio_ci_upper", &[Cell::Empty], cmp.ratio_ci.upper);
        println!(
            "Count-Min / Count-Sketch mean point error: {:.4} (95% CI {:.4} to {:.4})",
            cmp.mean_ratio, cmp.ratio_ci.lower, cmp.ratio_ci.upper
        );
        Ok(Report {
            command: "compare-cm",
            metadata,
            tables: vec![t],
        })
    })))
}
