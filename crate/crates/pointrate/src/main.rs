//! Batch front-end: simulate -> screen -> aggregate -> fit -> predict ->
//! crossval -> report, file-in/file-out.

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use pointrate::{
    aggregate_conditions, error_rate_2d, error_rate_bivariate, exp1_design, exp2_design,
    fit_sigma_model, generate_experiment, io, predict_er_table, prediction_metrics, screen_trials,
    shuffle_split_cv, Axis, EndpointDistribution, Error, GroundTruth, ModelForm, Result,
    SigmaModel, TargetGeometry,
};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "pointrate", version, about = "Pointing error-rate modeling pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic trial log from a ground-truth sigma model
    Simulate(SimulateArgs),
    /// Remove spatial accidents and movement-time outliers
    Screen(ScreenArgs),
    /// Pool trials into per-(W, H) condition statistics
    Aggregate(AggregateArgs),
    /// Fit a sigma model to condition statistics
    Fit(FitArgs),
    /// Predict the error rate (percent) for one target geometry
    Predict(PredictArgs),
    /// Shuffle-split cross-validation over conditions
    Crossval(CrossvalArgs),
    /// Observed vs predicted error rates per condition, with summary metrics
    Report(ReportArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Experiment design: exp1 (cyclic, 4 angles) or exp2 (ring)
    #[arg(long)]
    design: String,
    #[arg(long)]
    workers: usize,
    #[arg(long)]
    seed: u64,
    /// Ground-truth JSON; defaults to the built-in 3-variable ring-task model
    #[arg(long = "ground-truth")]
    ground_truth: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ScreenArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct AggregateArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// 1var or 3var
    #[arg(long)]
    form: String,
    /// x or y
    #[arg(long)]
    axis: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long = "model-x")]
    model_x: PathBuf,
    #[arg(long = "model-y")]
    model_y: PathBuf,
    #[arg(long)]
    width: f64,
    #[arg(long)]
    height: f64,
    /// Endpoint correlation; uses the bivariate integral when given
    #[arg(long)]
    rho: Option<f64>,
}

#[derive(Args)]
struct CrossvalArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    form: String,
    /// Comma-separated train ratios, e.g. 0.8,0.7,0.6
    #[arg(long, default_value = "0.8,0.7,0.6")]
    ratios: String,
    #[arg(long, default_value_t = 100)]
    iterations: u32,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long = "model-x")]
    model_x: PathBuf,
    #[arg(long = "model-y")]
    model_y: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    svg: Option<PathBuf>,
}

fn parse_form(s: &str) -> Result<ModelForm> {
    match s {
        "1var" => Ok(ModelForm::OneVar),
        "3var" => Ok(ModelForm::ThreeVar),
        other => Err(Error::Config(format!("form must be 1var or 3var, got {other}"))),
    }
}

fn parse_axis(s: &str) -> Result<Axis> {
    match s {
        "x" => Ok(Axis::X),
        "y" => Ok(Axis::Y),
        other => Err(Error::Config(format!("axis must be x or y, got {other}"))),
    }
}

fn default_ground_truth() -> GroundTruth {
    GroundTruth::new(
        SigmaModel::three_var(Axis::X, 0.8713, 0.1614, 0.01273, 0.3162),
        SigmaModel::three_var(Axis::Y, 0.7221, 0.1309, 0.02284, 0.4282),
    )
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Simulate(args) => {
            let design = match args.design.as_str() {
                "exp1" => exp1_design(),
                "exp2" => exp2_design(),
                other => {
                    return Err(Error::Config(format!(
                        "design must be exp1 or exp2, got {other}"
                    )))
                }
            };
            let truth: GroundTruth = match &args.ground_truth {
                Some(path) => io::read_json(path)?,
                None => default_ground_truth(),
            };
            let trials = generate_experiment(&design, &truth, args.workers, args.seed)?;
            io::write_trials(&args.out, &trials)?;
            eprintln!("wrote {} trials to {}", trials.len(), args.out.display());
        }
        Command::Screen(args) => {
            let trials = io::read_trials(&args.input)?;
            let (clean, report) = screen_trials(&trials)?;
            io::write_trials(&args.out, &clean)?;
            if let Some(path) = &args.report {
                io::write_json(path, &report)?;
            }
            eprintln!(
                "screened {} -> {} trials ({:.2}% removed)",
                report.n_input, report.n_output, report.removal_pct
            );
        }
        Command::Aggregate(args) => {
            let trials = io::read_trials(&args.input)?;
            let conditions = aggregate_conditions(&trials)?;
            io::write_conditions(&args.out, &conditions)?;
            eprintln!("aggregated {} conditions", conditions.len());
        }
        Command::Fit(args) => {
            let conditions = io::read_conditions(&args.input)?;
            let report = fit_sigma_model(&conditions, parse_form(&args.form)?, parse_axis(&args.axis)?)?;
            io::write_json(&args.out, &report)?;
            eprintln!(
                "fit sigma_{} ({}): r2 = {:.4}, adj r2 = {:.4}, aic = {:.2}",
                report.model.axis, report.model.form, report.r2, report.adj_r2, report.aic
            );
        }
        Command::Predict(args) => {
            let model_x: SigmaModel = io::read_json(&args.model_x)?;
            let model_y: SigmaModel = io::read_json(&args.model_y)?;
            let geom = TargetGeometry::new(args.width, args.height)?;
            let sx = model_x.predict(&geom)?;
            let sy = model_y.predict(&geom)?;
            let er = match args.rho {
                Some(rho) => {
                    let dist = EndpointDistribution::new(sx, sy, rho)?;
                    error_rate_bivariate(&geom, &dist)?
                }
                None => error_rate_2d(&geom, sx, sy)?,
            };
            println!("{:.4}", 100.0 * er);
        }
        Command::Crossval(args) => {
            let conditions = io::read_conditions(&args.input)?;
            let form = parse_form(&args.form)?;
            let mut reports = Vec::new();
            for token in args.ratios.split(',') {
                let ratio: f64 = token
                    .trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("bad ratio: {token}")))?;
                reports.push(shuffle_split_cv(
                    &conditions,
                    form,
                    ratio,
                    args.iterations,
                    args.seed,
                )?);
            }
            io::write_json(&args.out, &reports)?;
            for r in &reports {
                eprintln!(
                    "ratio {:.2}: mean r2 = {:.4}, MAE = {:.4}%, RMSE = {:.4}%",
                    r.train_ratio, r.mean_r2, r.mean_mae_pct, r.mean_rmse_pct
                );
            }
        }
        Command::Report(args) => {
            let conditions = io::read_conditions(&args.input)?;
            let model_x: SigmaModel = io::read_json(&args.model_x)?;
            let model_y: SigmaModel = io::read_json(&args.model_y)?;
            let predicted = predict_er_table(&model_x, &model_y, &conditions)?;
            let observed: Vec<f64> = conditions.iter().map(|c| c.error_rate_pct).collect();
            let metrics = prediction_metrics(&observed, &predicted)?;

            let mut text = String::from("# format_version=1\n");
            text.push_str("width_px,height_px,n,observed_er_pct,predicted_er_pct\n");
            for (c, p) in conditions.iter().zip(&predicted) {
                text.push_str(&format!(
                    "{},{},{},{},{}\n",
                    c.width, c.height, c.n, c.error_rate_pct, p
                ));
            }
            text.push_str(&format!(
                "# r2={} mae_pct={} rmse_pct={}\n",
                metrics.r2, metrics.mae_pct, metrics.rmse_pct
            ));
            std::fs::write(&args.out, text)?;
            if let Some(path) = &args.svg {
                std::fs::write(path, scatter_svg(&observed, &predicted))?;
            }
            println!(
                "r2={:.4} mae_pct={:.4} rmse_pct={:.4}",
                metrics.r2, metrics.mae_pct, metrics.rmse_pct
            );
        }
    }
    Ok(())
}

/// Observed vs predicted scatter with the identity line, as a static SVG.
fn scatter_svg(observed: &[f64], predicted: &[f64]) -> String {
    let size = 480.0;
    let margin = 50.0;
    let max = observed
        .iter()
        .chain(predicted)
        .fold(1e-9f64, |m, &v| m.max(v))
        * 1.05;
    let scale = (size - 2.0 * margin) / max;
    let to_x = |v: f64| margin + v * scale;
    let to_y = |v: f64| size - margin - v * scale;
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{size}\" height=\"{size}\" viewBox=\"0 0 {size} {size}\">\n\
         <rect width=\"{size}\" height=\"{size}\" fill=\"white\"/>\n\
         <line x1=\"{m}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n\
         <line x1=\"{m}\" y1=\"{b}\" x2=\"{m}\" y2=\"{m}\" stroke=\"black\"/>\n\
         <line x1=\"{m}\" y1=\"{b}\" x2=\"{r}\" y2=\"{m}\" stroke=\"gray\" stroke-dasharray=\"4\"/>\n\
         <text x=\"{cx}\" y=\"{ty}\" text-anchor=\"middle\" font-size=\"13\">observed error rate [%]</text>\n\
         <text x=\"14\" y=\"{cy}\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 14 {cy})\">predicted error rate [%]</text>\n",
        m = margin,
        b = size - margin,
        r = size - margin,
        cx = size / 2.0,
        ty = size - 12.0,
        cy = size / 2.0,
    );
    for (o, p) in observed.iter().zip(predicted) {
        svg.push_str(&format!(
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"4\" fill=\"steelblue\" fill-opacity=\"0.7\"/>\n",
            to_x(*o),
            to_y(*p)
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                ExitCode::from(3)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
