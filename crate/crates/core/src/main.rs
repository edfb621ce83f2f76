use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use hetnet::device::{calibrate, default_constraints, CalibrationInputs};
use hetnet::harness::{
    self, check_findings, codec_decode, codec_encode, export_plotdata, findings_report,
    read_records, write_plotdata, CodecFields, HarnessError, PlotAxis, ReportFormat, RunConfig,
};
use hetnet::platform::{InteropConfig, PlatformId};

#[derive(Parser)]
#[command(
    name = "hetnet",
    version,
    about = "Heterogeneous 802.15.4 testbed simulator and frame tool"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Jsonl,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Text => ReportFormat::Text,
            Format::Jsonl => ReportFormat::JsonLines,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Direction {
    Encode,
    Decode,
}

#[derive(Clone, Copy, ValueEnum)]
enum Axis {
    Pps,
    Loss,
    Rssi,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario matrix, write CSVs and the findings report.
    Run {
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long)]
        profiles: Option<PathBuf>,
        #[arg(long, env = "HETNET_SEED")]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Re-evaluate the findings over CSVs from an earlier run.
    Check {
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Encode a field list to host-side hex, or decode hex to fields.
    Codec {
        #[arg(value_enum)]
        direction: Direction,
        #[arg(long)]
        platform: PlatformId,
        /// `key=value` fields for encode, hex for decode.
        input: Vec<String>,
    },
    /// Write per-distance plot tables for one metric.
    Export {
        #[arg(long, value_enum)]
        axis: Axis,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Only these receivers (comma separated).
        #[arg(long, value_delimiter = ',')]
        rx: Vec<PlatformId>,
    },
    /// Re-derive the default profiles and write them with a report.
    Calibrate {
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn exit_for(passed: bool) -> ExitCode {
    if passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn main_inner(cli: Cli) -> Result<ExitCode, HarnessError> {
    match cli.command {
        Command::Run {
            scenario,
            profiles,
            seed,
            out,
            format,
        } => {
            let config = RunConfig {
                scenario,
                out,
                seed,
                profiles,
                format: format.into(),
            };
            let summary = harness::run(&config)?;
            eprintln!(
                "wrote {} rows to {}",
                summary.records.len(),
                config.out.join(harness::METRICS_FILE).display()
            );
            print!("{}", summary.report);
            Ok(exit_for(summary.all_passed()))
        }
        Command::Check { out, format } => {
            let records = read_records(&out)?;
            let checks = check_findings(&records)?;
            print!("{}", findings_report(&checks, format.into()));
            Ok(exit_for(checks.iter().all(|c| c.passed())))
        }
        Command::Codec {
            direction,
            platform,
            input,
        } => {
            let cfg = InteropConfig::default();
            let input = input.join(" ");
            match direction {
                Direction::Encode => {
                    let fields: CodecFields = input.parse()?;
                    println!("{}", codec_encode(platform, &fields, &cfg)?);
                }
                Direction::Decode => print!("{}", codec_decode(platform, &input, &cfg)?),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Export { axis, out, rx } => {
            let records = read_records(&out)?;
            let axis = match axis {
                Axis::Pps => PlotAxis::Pps,
                Axis::Loss => PlotAxis::Loss,
                Axis::Rssi => PlotAxis::Rssi,
            };
            let filter = (!rx.is_empty()).then_some(rx.as_slice());
            let tables = export_plotdata(&records, axis, filter)?;
            for path in write_plotdata(&out.join("plots"), &tables)? {
                println!("{}", path.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Calibrate { out } => {
            let cal = calibrate(&default_constraints(), &CalibrationInputs::default())
                .map_err(HarnessError::Calibration)?;
            std::fs::create_dir_all(&out).map_err(|source| HarnessError::Io {
                path: out.clone(),
                source,
            })?;
            for (name, body) in [
                ("profiles.toml", cal.profiles.to_toml()),
                ("calibration_report.txt", cal.report.clone()),
            ] {
                let path = out.join(name);
                std::fs::write(&path, body).map_err(|source| HarnessError::Io { path, source })?;
            }
            print!("{}", cal.report);
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("hetnet: {e}");
            ExitCode::from(2)
        }
    }
}
