use std::fs::{self, File};
use std::io::BufWriter;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use softhaptic_core::actuator::{fit_pressure_length, read_calibration_csv};
use softhaptic_core::config::ActuatorSection;
use softhaptic_core::experiments::{
    run_bandwidth_experiment, run_full_campaign, run_path_experiment, write_bandwidth_csv, Axis,
    ExperimentReport, Level,
};
use softhaptic_core::plant::{write_plant_trace_csv, PlantMode};
use softhaptic_core::teleop::{read_cursor_file, replay, write_frames, Session};
use softhaptic_core::workspace::workspace_sweep;
use softhaptic_core::Config;
use softhaptic_service::{serve, Listeners, ServiceConfig};

#[derive(Parser)]
#[command(name = "softhaptic", version, about = "Soft pneumatic haptic device simulator")]
struct Cli {
    /// TOML configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for measurement noise and plant degradation.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Directory for CSV traces and reports.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the pressure-length map to a `pressure_kpa,length_mm` CSV.
    Calibrate { csv: PathBuf },
    /// Sweep all chamber pressures and report the reachable extent.
    Workspace,
    /// Follow every path of one level.
    PathFollow {
        #[arg(long)]
        level: Level,
        #[arg(long, default_value = "free")]
        mode: PlantMode,
    },
    /// Frequency sweep along one axis.
    Bandwidth {
        #[arg(long)]
        axis: Axis,
        #[arg(long, default_value = "free")]
        mode: PlantMode,
    },
    /// Full campaign with the comparison against the hardware dataset.
    Report,
    /// Interactive sessions over TCP and WebSocket, plus static assets.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        http: SocketAddr,
        #[arg(long, default_value = "127.0.0.1:9000")]
        tcp: SocketAddr,
        /// Directory served at `/` (for example a built browser client).
        #[arg(long)]
        assets: Option<PathBuf>,
    },
    /// Drive a headless session from a `t_s,x,y,z` cursor script.
    Replay { trace: PathBuf },
    /// Print the effective configuration as TOML.
    Config,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn file_label(label: &str) -> String {
    label.replace('+', "plus").replace('-', "minus").replace('.', "_")
}

fn path_follow(config: &Config, seed: u64, out: &Path, level: Level, mode: PlantMode) -> Result<()> {
    let (report, runs) = run_path_experiment(level, mode, config, seed)?;
    for (summary, reps) in report.paths.iter().zip(&runs) {
        for (k, run) in reps.iter().enumerate() {
            let name = format!("path_{level}_{mode:?}_{}_rep{k}.csv", file_label(&summary.label)).to_lowercase();
            write_plant_trace_csv(create(&out.join(name))?, &run.trace)?;
        }
    }
    let mut full = ExperimentReport::new(config, seed);
    full.levels.push(report);
    let text = full.render_text();
    fs::write(out.join(format!("path_{level}_{mode:?}.txt").to_lowercase()), &text)?;
    print!("{text}");
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let mut config = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    let out = cli.out.as_path();
    let needs_out = !matches!(cli.command, Command::Serve { .. } | Command::Config);
    if needs_out {
        fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    }
    match cli.command {
        Command::Calibrate { csv } => {
            let samples = read_calibration_csv(&csv)?;
            let fit = fit_pressure_length(&samples)?;
            println!(
                "l = {:.4} p + {:.4} (rms {:.4} mm, {} samples)",
                fit.map.slope,
                fit.map.intercept,
                fit.residual_rms,
                samples.len()
            );
            config.actuator = ActuatorSection::shared(fit.map);
            match config.validate() {
                Ok(()) => {
                    let path = out.join("calibrated.toml");
                    config.save(&path)?;
                    println!("wrote {}", path.display());
                }
                Err(e) => println!("fitted map is not usable with this geometry: {e}"),
            }
        }
        Command::Workspace => {
            let cloud = workspace_sweep(&config.device_model()?, config.experiment.workspace_grid_steps)?;
            cloud.write_csv(create(&out.join("workspace.csv"))?)?;
            println!(
                "{} grid points, max radial extent {:.3} mm from the preload tip",
                cloud.points.len(),
                cloud.max_radius
            );
        }
        Command::PathFollow { level, mode } => path_follow(&config, cli.seed, out, level, mode)?,
        Command::Bandwidth { axis, mode } => {
            let result = run_bandwidth_experiment(axis, mode, &config, cli.seed)?;
            let name = format!("bandwidth_{axis}_{mode:?}.csv").to_lowercase();
            write_bandwidth_csv(create(&out.join(name))?, &result)?;
            for row in &result.rows {
                match (row.magnitude_ratio, &row.error) {
                    (Some(m), _) => println!("{:>5.1} Hz  MR {m:.4}", row.frequency_hz),
                    (None, e) => println!("{:>5.1} Hz  invalid: {}", row.frequency_hz, e.as_deref().unwrap_or("")),
                }
            }
            match result.crossing_hz {
                Some(f) => println!("-3 dB crossing: {f:.3} Hz"),
                None => println!("-3 dB crossing: not within the grid"),
            }
        }
        Command::Report => {
            let report = run_full_campaign(&config, cli.seed)?;
            let text = report.render_text();
            fs::write(out.join("report.txt"), &text)?;
            serde_json::to_writer_pretty(create(&out.join("report.json"))?, &report)?;
            config.save(&out.join("config.toml"))?;
            print!("{text}");
        }
        Command::Serve { http, tcp, assets } => {
            tracing_subscriber::fmt::init();
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(async {
                let listeners = Listeners::bind(http, tcp).await?;
                let (h, t) = listeners.local_addrs()?;
                println!("http + websocket on http://{h} (/ws), line-delimited JSON on tcp://{t}");
                serve(listeners, ServiceConfig::new(config, cli.seed), assets).await?;
                anyhow::Ok(())
            })?;
        }
        Command::Replay { trace } => {
            let samples = read_cursor_file(&trace)?;
            let mut session = Session::from_config(&config, cli.seed)?;
            let frames = replay(&mut session, &samples)?;
            let path = out.join("replay.jsonl");
            write_frames(create(&path)?, &frames)?;
            println!("{} frames written to {}", frames.len(), path.display());
        }
        Command::Config => print!("{}", config.to_toml_string()?),
    }
    Ok(())
}
