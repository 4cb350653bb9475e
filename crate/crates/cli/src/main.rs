use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use beamradio_core::gateway::{Gateway, GatewayConfig};
use beamradio_core::preset::parse_command;
use beamradio_core::selector::{run_selection_with_log, SelectorError};
use beamradio_core::stream::{serve_mock_on, MockStreamConfig, ScheduledTitle, StatusStyle};
use beamradio_core::sweep::{headings, orientation_sweep};

#[derive(Parser)]
#[command(name = "beamradio", version, about = "Switched-antenna web radio gateway")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Boot the gateway and serve the control plane until killed.
    Serve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run antenna selection once and print the RSSI table.
    Select {
        #[arg(long)]
        config: PathBuf,
    },
    /// Parse a preset command path such as `/1+http://host/stream.mp3`.
    ParseCmd { path: String },
    /// Take one scan through an antenna (0-based index).
    Scan {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        antenna: usize,
    },
    /// Best antenna for every device heading, one scan per antenna.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Heading step in degrees.
        #[arg(long, default_value_t = 10.0)]
        step: f64,
    },
    /// Serve an audio file as an ICY stream for testing.
    MockStream {
        #[arg(long)]
        file: PathBuf,
        #[arg(long, default_value_t = 16000)]
        metaint: usize,
        #[arg(long, default_value = "127.0.0.1:8000")]
        bind: String,
        /// `offset:title`, may be repeated.
        #[arg(long = "title")]
        titles: Vec<String>,
        /// Answer with `HTTP/1.0 200 OK` instead of `ICY 200 OK`.
        #[arg(long)]
        http_status: bool,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Serve { config } => {
            let cfg = GatewayConfig::load(&config)?;
            let gateway = Gateway::boot(cfg)?;
            println!("listening on {}", gateway.base_url());
            gateway.wait();
            Ok(ExitCode::SUCCESS)
        }
        Command::Select { config } => {
            let cfg = GatewayConfig::load(&config)?;
            let mut front_end = cfg.front_end()?;
            match run_selection_with_log(&mut front_end, &cfg.selector_config(), |line| println!("{line}")) {
                Ok(res) => {
                    print_table(&res.ant_rssi);
                    println!("best antenna index: {}", res.best_antenna);
                    Ok(ExitCode::SUCCESS)
                }
                Err(SelectorError::SelectionFailed { ant_rssi, attempts }) => {
                    print_table(&ant_rssi);
                    println!("selection failed: {:?} not seen after {attempts} scans", cfg.target_ssid);
                    Ok(ExitCode::FAILURE)
                }
                Err(e) => Err(e.into()),
            }
        }
        Command::ParseCmd { path } => match parse_command(&path) {
            Ok(cmd) => {
                println!("{cmd:?}");
                Ok(ExitCode::SUCCESS)
            }
            Err(e) => {
                println!("error: {e}");
                Ok(ExitCode::FAILURE)
            }
        },
        Command::Scan { config, antenna } => {
            let cfg = GatewayConfig::load(&config)?;
            let mut front_end = cfg.front_end()?;
            let Some(entries) = front_end.scan_antenna(antenna) else {
                bail!("antenna {antenna} out of range (have {})", front_end.num_antennas());
            };
            for e in entries {
                println!("{}\t{}\t{}", e.ssid, e.bssid, e.rssi);
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep { config, step } => {
            if step.is_nan() || step <= 0.0 {
                bail!("step must be positive");
            }
            let cfg = GatewayConfig::load(&config)?;
            let patterns = cfg.patterns()?;
            let points = orientation_sweep(&cfg.environment.rf, &patterns, &cfg.target_ssid, &headings(step));
            for p in points {
                let table: Vec<String> = p.ant_rssi.iter().map(|r| r.map_or("-".into(), |v| v.to_string())).collect();
                let best = p.best_antenna.map_or("-".into(), |b| (b + 1).to_string());
                println!("{:>6.1}\t{}\t{best}", p.orientation_deg, table.join("\t"));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::MockStream { file, metaint, bind, titles, http_status } => {
            let titles = titles
                .iter()
                .map(|t| {
                    let (offset, title) = t.split_once(':').context("title must be offset:text")?;
                    Ok(ScheduledTitle::new(offset.parse().context("bad title offset")?, title))
                })
                .collect::<Result<Vec<_>>>()?;
            let audio = std::fs::read(&file).with_context(|| format!("reading {}", file.display()))?;
            let mut mock = MockStreamConfig::new(metaint).with_titles(titles);
            if http_status {
                mock.status_style = StatusStyle::Http;
            }
            let server = serve_mock_on(&bind, audio, mock)?;
            println!("streaming {} at {}", file.display(), server.url());
            loop {
                std::thread::park();
            }
        }
    }
}

fn print_table(ant_rssi: &[Option<i32>]) {
    for (i, r) in ant_rssi.iter().enumerate() {
        match r {
            Some(v) => println!("antenna {}: {v} dBm", i + 1),
            None => println!("antenna {}: not seen", i + 1),
        }
    }
}
