//! Implementations behind the `tcsl` subcommands. Each command returns the
//! text it wants on stdout; file artifacts are written as side effects.
//! Warnings (ingest issues) go to stderr so machine-readable stdout stays
//! clean.

use crate::bundle::{build_bundle, compute_fits, report_csv, regime_str, BundleInputs};
use crate::svg;
use crate::{fmt_budget, parse_budget, CliError};
use std::fs;
use std::path::{Path, PathBuf};
use tcsl_core::{
    calibrate, fit_throughput, load_reference_dataset, parse_hardware_profile, parse_runs,
    recommend, rtx4090, serialize_runs, sweep, HardwareProfile, ModelConfig, PowerLawFit,
    RunFormat, RunGrid, SimParams, TiePolicy, REFERENCE_BUDGETS,
};

/// Options shared by every subcommand.
#[derive(Debug, Clone)]
pub struct GlobalOpts {
    /// "embedded" or a path to a runs file (.csv / .json).
    pub input: String,
    pub output_dir: PathBuf,
    pub format: RunFormat,
    pub tie: TiePolicy,
    pub seed: u64,
    /// "rtx4090" or a path to a hardware-profile JSON file.
    pub hardware: String,
    pub json: bool,
}

impl Default for GlobalOpts {
    fn default() -> Self {
        GlobalOpts {
            input: "embedded".to_owned(),
            output_dir: PathBuf::from("."),
            format: RunFormat::Json,
            tie: TiePolicy::default(),
            seed: 7,
            hardware: "rtx4090".to_owned(),
            json: false,
        }
    }
}

/// A loaded observation set: the grid, the seed-replicate view of it, and
/// the config table derived from its distinct models.
pub struct LoadedInput {
    pub grid: RunGrid,
    pub multiseed: RunGrid,
    pub configs: Vec<ModelConfig>,
    pub dataset_tokens: Option<u64>,
    pub embedded: bool,
}

fn format_of(path: &Path) -> Result<RunFormat, CliError> {
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase) {
        Some(ext) if ext == "csv" => Ok(RunFormat::Csv),
        Some(ext) if ext == "json" => Ok(RunFormat::Json),
        _ => Err(CliError::Input(format!(
            "cannot infer run format from '{}': expected a .csv or .json file",
            path.display()
        ))),
    }
}

/// Resolve `--input`: the embedded reference dataset or a runs file.
/// Ingest warnings are printed to stderr.
pub fn load_input(opts: &GlobalOpts) -> Result<LoadedInput, CliError> {
    if opts.input == "embedded" {
        let ds = load_reference_dataset();
        return Ok(LoadedInput {
            grid: ds.grid,
            multiseed: ds.multiseed,
            configs: ds.configs,
            dataset_tokens: Some(ds.dataset_tokens),
            embedded: true,
        });
    }
    let path = Path::new(&opts.input);
    let format = format_of(path)?;
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read '{}': {e}", path.display())))?;
    let (grid, issues) = parse_runs(&text, format)?;
    for issue in &issues {
        eprintln!("warning: {issue}");
    }
    let mut configs: Vec<ModelConfig> = Vec::new();
    for depth in grid.depths() {
        let params = grid.params_of(depth).expect("depth comes from the grid");
        configs.push(ModelConfig::from_depth(depth, params, true, None, None)?);
    }
    Ok(LoadedInput {
        dataset_tokens: grid.dataset_tokens,
        multiseed: grid.clone(),
        grid,
        configs,
        embedded: false,
    })
}

/// Resolve `--hardware` and fit its throughput law.
pub fn load_profile(opts: &GlobalOpts) -> Result<HardwareProfile, CliError> {
    let profile = if opts.hardware == "rtx4090" {
        rtx4090()
    } else {
        let text = fs::read_to_string(&opts.hardware)
            .map_err(|e| CliError::Input(format!("cannot read '{}': {e}", opts.hardware)))?;
        parse_hardware_profile(&text)?
    };
    Ok(fit_throughput(&profile)?)
}

fn write_artifact(dir: &Path, name: &str, content: &str) -> Result<(), CliError> {
    fs::write(dir.join(name), content)
        .map_err(|e| CliError::Input(format!("cannot write '{name}' in '{}': {e}", dir.display())))
}

/// `analyze`: full report to the output directory (report.json, report.csv,
/// four SVG charts), with a short stdout summary.
pub fn cmd_analyze(opts: &GlobalOpts) -> Result<String, CliError> {
    let input = load_input(opts)?;
    let profile = load_profile(opts)?;
    let bundle = build_bundle(&BundleInputs {
        grid: &input.grid,
        multiseed: &input.multiseed,
        profile: &profile,
        tie: opts.tie,
        seed: opts.seed,
    })?;
    fs::create_dir_all(&opts.output_dir).map_err(|e| {
        CliError::Input(format!(
            "cannot create output dir '{}': {e}",
            opts.output_dir.display()
        ))
    })?;
    let mut json = serde_json::to_string_pretty(&bundle)?;
    json.push('\n');
    write_artifact(&opts.output_dir, "report.json", &json)?;
    write_artifact(&opts.output_dir, "report.csv", &report_csv(&bundle))?;
    write_artifact(
        &opts.output_dir,
        "size_law.svg",
        &svg::size_law_svg(&bundle.size_anchors, &bundle.fits.size_law),
    )?;
    write_artifact(
        &opts.output_dir,
        "loss_law.svg",
        &svg::loss_law_svg(&bundle.loss_anchors, &bundle.fits.loss_law),
    )?;
    write_artifact(&opts.output_dir, "u_curves.svg", &svg::u_curves_svg(&input.grid))?;
    write_artifact(
        &opts.output_dir,
        "heatmap.svg",
        &svg::heatmap_svg(&input.grid, &bundle.budget_reports),
    )?;
    let mut out = String::new();
    out.push_str(&format!(
        "analyzed {} budgets x {} models ({} observations)\n",
        input.grid.budgets().len(),
        input.grid.depths().len(),
        input.grid.records().len()
    ));
    out.push_str(&format!(
        "size-law exponent {:.6} (R2 {:.6}); best-loss exponent {:.6}\n",
        bundle.fits.size_law.exponent_alpha,
        bundle.fits.size_law.r2,
        bundle.fits.loss_law.exponent_alpha
    ));
    out.push_str(&format!(
        "discrepancy notes: {}\n",
        bundle.discrepancy_notes.len()
    ));
    out.push_str(&format!(
        "wrote report.json, report.csv, size_law.svg, loss_law.svg, u_curves.svg, heatmap.svg to {}\n",
        opts.output_dir.display()
    ));
    Ok(out)
}

fn law_csv_row(name: &str, fit: &PowerLawFit) -> String {
    format!(
        "{name},{},{},{},{},{},{},{}\n",
        fit.coeff_a,
        fit.exponent_alpha,
        fit.r2,
        fit.stderr_alpha,
        fit.ci95_low,
        fit.ci95_high,
        fit.n_points
    )
}

/// `fit`: just the fitted laws, as JSON (default) or CSV per `--format`.
pub fn cmd_fit(opts: &GlobalOpts) -> Result<String, CliError> {
    let input = load_input(opts)?;
    let profile = load_profile(opts)?;
    let (fits, ..) = compute_fits(&input.grid, &profile, opts.tie)?;
    match opts.format {
        RunFormat::Json => {
            let mut out = serde_json::to_string_pretty(&fits)?;
            out.push('\n');
            Ok(out)
        }
        RunFormat::Csv => {
            let mut out = String::from(
                "law,coeff_a,exponent_alpha,r2,stderr_alpha,ci95_low,ci95_high,n_points\n",
            );
            out.push_str(&law_csv_row("size_law", &fits.size_law));
            out.push_str(&law_csv_row("loss_law", &fits.loss_law));
            out.push_str(&law_csv_row("depth_law", &fits.depth_law));
            out.push_str(&law_csv_row("throughput", &fits.throughput));
            Ok(out)
        }
    }
}

/// `plan`: recommend a model size for a wall-clock budget on the selected
/// hardware, from laws fitted to the selected input.
pub fn cmd_plan(opts: &GlobalOpts, budget: &str) -> Result<String, CliError> {
    let budget_min = parse_budget(budget)?;
    let input = load_input(opts)?;
    let profile = load_profile(opts)?;
    let (fits, ..) = compute_fits(&input.grid, &profile, opts.tie)?;
    let budgets = input.grid.budgets();
    let fitted_range = (budgets[0], budgets[budgets.len() - 1]);
    let rec = recommend(
        budget_min,
        &fits.size_law,
        &fits.loss_law,
        &input.configs,
        &profile,
        input.dataset_tokens,
        fitted_range,
    )?;
    if opts.json {
        let mut out = serde_json::to_string_pretty(&rec)?;
        out.push('\n');
        return Ok(out);
    }
    let mut out = String::new();
    out.push_str(&format!(
        "budget: {} ({} minutes)\n",
        fmt_budget(rec.budget_min),
        rec.budget_min
    ));
    out.push_str(&format!(
        "continuous optimum: {:.1}M params\n",
        rec.n_star_continuous_m
    ));
    out.push_str(&format!(
        "recommended config: D{} ({}M params)\n",
        rec.snapped_depth, rec.snapped_params_m
    ));
    out.push_str(&format!("expected best val BPB: {:.4}\n", rec.expected_bpb));
    out.push_str(&format!("tokens in budget: {:.4e}\n", rec.tokens));
    match rec.epochs {
        Some(e) => out.push_str(&format!("epochs over dataset: {e:.2}\n")),
        None => out.push_str("epochs over dataset: unknown (no dataset size)\n"),
    }
    out.push_str(&format!("training FLOPs: {:.4e}\n", rec.flops));
    out.push_str(&format!(
        "square-root scaling reference: {:.1}M params\n",
        rec.chinchilla_n_m
    ));
    if rec.notes.is_empty() {
        out.push_str("notes: none\n");
    } else {
        out.push_str("notes:\n");
        for note in &rec.notes {
            out.push_str(&format!("  - {note}\n"));
        }
    }
    Ok(out)
}

/// Arguments specific to `simulate`.
#[derive(Debug, Clone, Default)]
pub struct SimulateArgs {
    /// Path to a SimParams JSON file; shipped defaults when absent.
    pub params: Option<String>,
    /// Comma-separated budget list ("5m,2h,1440"); reference budgets when
    /// absent.
    pub budgets: Option<String>,
    /// Output file for the simulated grid; `<output-dir>/simulated.<ext>`
    /// when absent.
    pub out: Option<PathBuf>,
    /// When set, calibrate against "embedded" or a runs file instead of
    /// sweeping.
    pub calibrate: Option<String>,
    pub max_iters: usize,
}

fn parse_budget_list(text: &str) -> Result<Vec<f64>, CliError> {
    let mut budgets = Vec::new();
    for part in text.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        budgets.push(parse_budget(part)?);
    }
    if budgets.is_empty() {
        return Err(CliError::Input(
            "budget list is empty; give budgets like '5m,2h,1440'".to_owned(),
        ));
    }
    budgets.sort_by(f64::total_cmp);
    budgets.dedup();
    Ok(budgets)
}

fn load_sim_params(path: &str) -> Result<SimParams, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read '{path}': {e}")))?;
    let params: SimParams = serde_json::from_str(&text)?;
    params
        .validate()
        .map_err(|e| CliError::Input(format!("invalid simulator params in '{path}': {e}")))?;
    Ok(params)
}

/// `simulate`: sweep the mechanistic model over budgets × configs and write
/// an ingest-schema grid file, or (with `--calibrate`) fit the mechanism to
/// a reference grid and write the calibrated parameters.
pub fn cmd_simulate(opts: &GlobalOpts, args: &SimulateArgs) -> Result<String, CliError> {
    let input = load_input(opts)?;
    let profile = load_profile(opts)?;
    fs::create_dir_all(&opts.output_dir).map_err(|e| {
        CliError::Input(format!(
            "cannot create output dir '{}': {e}",
            opts.output_dir.display()
        ))
    })?;

    if let Some(target) = &args.calibrate {
        let reference = if target == "embedded" {
            load_reference_dataset().grid
        } else {
            let text = fs::read_to_string(target)
                .map_err(|e| CliError::Input(format!("cannot read '{target}': {e}")))?;
            parse_runs(&text, format_of(Path::new(target))?)?.0
        };
        let initial = match &args.params {
            Some(path) => load_sim_params(path)?,
            None => SimParams::initial_guess(),
        };
        let cal = calibrate(&initial, &reference, &profile, args.max_iters, opts.seed)?;
        let mut json = serde_json::to_string_pretty(&cal)?;
        json.push('\n');
        write_artifact(&opts.output_dir, "calibrated_params.json", &json)?;
        let mut out = String::new();
        out.push_str(&format!(
            "calibrated 8 coordinates over {} reference cells\n",
            reference.records().len()
        ));
        out.push_str(&format!(
            "rmse: {:.6} -> {:.6} in {} sweeps (converged: {})\n",
            cal.initial_rmse, cal.rmse, cal.sweeps, cal.converged
        ));
        out.push_str(&format!(
            "wrote calibrated_params.json to {}\n",
            opts.output_dir.display()
        ));
        return Ok(out);
    }

    let sim = match &args.params {
        Some(path) => load_sim_params(path)?,
        None => SimParams::shipped_defaults(),
    };
    let budgets = match &args.budgets {
        Some(text) => parse_budget_list(text)?,
        None => REFERENCE_BUDGETS.to_vec(),
    };
    let result = sweep(&sim, &profile, &budgets, &input.configs)?;
    let (out_path, format) = match &args.out {
        Some(path) => (path.clone(), format_of(path)?),
        None => {
            let name = match opts.format {
                RunFormat::Csv => "simulated.csv",
                RunFormat::Json => "simulated.json",
            };
            (opts.output_dir.join(name), opts.format)
        }
    };
    let text = serialize_runs(&result.grid, format);
    fs::write(&out_path, &text)
        .map_err(|e| CliError::Input(format!("cannot write '{}': {e}", out_path.display())))?;
    let mut out = String::new();
    out.push_str(&format!(
        "simulated {} cells ({} configs x {} budgets)\n",
        result.grid.records().len(),
        input.configs.len(),
        budgets.len()
    ));
    for &budget in &budgets {
        let best = result
            .grid
            .at_budget(budget)
            .into_iter()
            .min_by(|a, b| a.val_bpb.total_cmp(&b.val_bpb))
            .expect("sweep fills every budget");
        out.push_str(&format!(
            "  {}: best {} at {:.4} bpb\n",
            fmt_budget(budget),
            best.model_id,
            best.val_bpb
        ));
    }
    out.push_str(&format!("wrote {}\n", out_path.display()));
    Ok(out)
}

/// `report`: the analyze bundle rendered as sectioned text on stdout, no
/// files written.
pub fn cmd_report(opts: &GlobalOpts) -> Result<String, CliError> {
    let input = load_input(opts)?;
    let profile = load_profile(opts)?;
    let bundle = build_bundle(&BundleInputs {
        grid: &input.grid,
        multiseed: &input.multiseed,
        profile: &profile,
        tie: opts.tie,
        seed: opts.seed,
    })?;
    let mut out = String::new();
    out.push_str("time-constrained scaling report (schema 1)\n\n");

    out.push_str("fitted laws\n");
    let f = &bundle.fits;
    out.push_str(&format!(
        "  optimal size:  N*(t) = {:.4} * t^{:.4}   R2 {:.4}   95% CI [{:.4}, {:.4}]   n={}\n",
        f.size_law.coeff_a,
        f.size_law.exponent_alpha,
        f.size_law.r2,
        f.size_law.ci95_low,
        f.size_law.ci95_high,
        f.size_law.n_points
    ));
    out.push_str(&format!(
        "  best loss:     L*(t) = {:.4} * t^{:.4}   R2 {:.4}   n={}\n",
        f.loss_law.coeff_a, f.loss_law.exponent_alpha, f.loss_law.r2, f.loss_law.n_points
    ));
    out.push_str(&format!(
        "  optimal depth: d*(t) = {:.4} * t^{:.4}   R2 {:.4}   n={}\n",
        f.depth_law.coeff_a, f.depth_law.exponent_alpha, f.depth_law.r2, f.depth_law.n_points
    ));
    out.push_str(&format!(
        "  throughput:    tau(N) = {:.4e} * N^-{:.4}   R2 {:.4}   compute exponent (1-beta) {:.4}\n",
        f.throughput.coeff_a, f.throughput_beta, f.throughput.r2, f.compute_scaling_exponent
    ));
    if let Some([lo, hi]) = bundle.bootstrap_alpha_ci95 {
        out.push_str(&format!(
            "  bootstrap 95% CI on size exponent: [{lo:.4}, {hi:.4}]\n"
        ));
    }

    out.push_str("\nper-budget optima\n");
    for report in &bundle.budget_reports {
        let opt = &report.optimum;
        let flags = if report.overfit.is_empty() {
            "-".to_owned()
        } else {
            report
                .overfit
                .iter()
                .map(|fl| format!("{}{:+.3}", fl.model_id, fl.delta_bpb))
                .collect::<Vec<_>>()
                .join(" ")
        };
        out.push_str(&format!(
            "  {:>4}  {:<8} {:>8}M  {:.4} bpb  {:<15}  overfit: {flags}\n",
            fmt_budget(report.budget_min),
            opt.models.join("+"),
            opt.params_m.map(|p| format!("{p:.1}")).unwrap_or_else(|| "-".to_owned()),
            opt.bpb,
            regime_str(report.regime),
        ));
    }

    if !bundle.marginal.is_empty() {
        out.push_str("\nmarginal returns\n");
        for step in &bundle.marginal {
            out.push_str(&format!(
                "  {:>4} -> {:<4}  delta {:+.4}  rate {:+.4}/h\n",
                fmt_budget(step.from_min),
                fmt_budget(step.to_min),
                step.delta_bpb,
                step.rate_per_hour
            ));
        }
    }

    if !bundle.alpha_evolution.is_empty() {
        out.push_str("\nsize-exponent evolution (first k budgets)\n");
        for point in &bundle.alpha_evolution {
            out.push_str(&format!(
                "  k={}  alpha {:.4}  R2 {:.4}\n",
                point.n_budgets, point.exponent_alpha, point.r2
            ));
        }
    }

    out.push_str("\nsensitivity variants\n");
    for variant in &bundle.sensitivity.variants {
        out.push_str(&format!(
            "  {:<36} alpha {:.4}  (n={})\n",
            variant.variant, variant.fit.exponent_alpha, variant.fit.n_points
        ));
    }
    for notice in &bundle.sensitivity.notices {
        out.push_str(&format!("  note: {notice}\n"));
    }

    out.push_str("\nbudget-multiple comparison (time exponent 0.60 vs square-root)\n");
    for row in &bundle.comparison {
        out.push_str(&format!(
            "  {:>3}x time: {:.3}x vs {:.3}x larger model\n",
            row.multiplier, row.time_optimal_ratio, row.chinchilla_ratio
        ));
    }

    if !bundle.multiseed.stats.is_empty() {
        out.push_str("\nmulti-seed stability\n");
        for stats in &bundle.multiseed.stats {
            out.push_str(&format!(
                "  {:>4} {:<5} mean {:.4}  sd {:.4}  cv {:.2}%  n={}\n",
                fmt_budget(stats.budget_min),
                stats.model_id,
                stats.mean_bpb,
                stats.std_bpb,
                stats.cv_pct,
                stats.n_seeds
            ));
        }
        for pair in &bundle.multiseed.dominance {
            out.push_str(&format!(
                "  {} vs {}: {}-{} of {} cross-seed pairings\n",
                pair.model_a, pair.model_b, pair.a_wins, pair.b_wins, pair.total
            ));
        }
        for notice in &bundle.multiseed.notices {
            out.push_str(&format!("  note: {notice}\n"));
        }
    }

    out.push_str(&format!(
        "\ndiscrepancy notes ({})\n",
        bundle.discrepancy_notes.len()
    ));
    for note in &bundle.discrepancy_notes {
        out.push_str(&format!("  - {note}\n"));
    }
    Ok(out)
}
