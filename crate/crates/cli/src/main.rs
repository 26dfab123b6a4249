use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use qpower_twin::analog::{apply_compensation, tune_compensation, PoleZeroGain};
use qpower_twin::bench::{self, BenchKind, BenchSettings};
use qpower_twin::qubit::{run_monitor, MonitorConfig, QubitModel};
use qpower_twin::twin::{
    Clock, Instrument, InstrumentState, LocalTwin, TwinClient, TwinConfig, TwinServer, DEFAULT_PORT,
};

#[derive(Parser)]
#[command(
    name = "qpower",
    version,
    about = "Dual-channel precision DC source twin"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum BenchName {
    Ripple,
    Rms,
    Lfnoise,
    Hfnoise,
    Drift,
    Crosstalk,
}

impl From<BenchName> for BenchKind {
    fn from(b: BenchName) -> Self {
        match b {
            BenchName::Ripple => BenchKind::Ripple,
            BenchName::Rms => BenchKind::Rms,
            BenchName::Lfnoise => BenchKind::LfNoise,
            BenchName::Hfnoise => BenchKind::HfNoise,
            BenchName::Drift => BenchKind::Drift,
            BenchName::Crosstalk => BenchKind::Crosstalk,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Serve the line protocol over TCP.
    Serve {
        /// Twin configuration (JSON); defaults apply to missing fields.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_PORT)]
        port: u16,
        /// Overrides the seed in the configuration.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "127.0.0.1")]
        bind: String,
        /// Simulated clock: uptime advances only with measurements and ramps.
        #[arg(long)]
        accelerate: bool,
    },
    /// Run one electronics benchmark and write its records and data.
    Bench {
        #[arg(value_enum)]
        which: BenchName,
        #[arg(long)]
        out: PathBuf,
        /// Run slow benches on the simulated clock.
        #[arg(long)]
        accelerate: bool,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Leave out the instruments' noise floors.
        #[arg(long)]
        device_only: bool,
    },
    /// Tabulate the Bode response of a pole/zero/gain model.
    Bode {
        /// JSON with `dc_gain`, `poles` and `zeros` (Hz).
        #[arg(long)]
        tf: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        f_min: f64,
        #[arg(long, default_value_t = 1e9)]
        f_max: f64,
        #[arg(long, default_value_t = 50)]
        per_decade: usize,
        /// Tune a lead network to this phase margin (deg) first.
        #[arg(long, requires = "tune_ugbw")]
        tune_pm: Option<f64>,
        /// Target unity-gain bandwidth (Hz) for the tuner.
        #[arg(long, requires = "tune_pm")]
        tune_ugbw: Option<f64>,
    },
    /// Long-term Ramsey monitoring driven by the twin's bias drift.
    Monitor {
        #[arg(long, default_value_t = 43_200.0)]
        duration: f64,
        #[arg(long, default_value_t = 1000)]
        repetitions: usize,
        #[arg(long, default_value_t = 1000)]
        shots: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Run on the simulated clock instead of waiting out the duration.
        #[arg(long)]
        accelerate: bool,
        /// Use a running twin at host:port instead of an in-process one.
        #[arg(long)]
        connect: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_config(path: &Option<PathBuf>) -> Result<TwinConfig> {
    Ok(match path {
        Some(p) => TwinConfig::from_file(p).with_context(|| format!("reading {}", p.display()))?,
        None => TwinConfig::default(),
    })
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Cmd::Serve {
            config,
            port,
            seed,
            bind,
            accelerate,
        } => {
            let mut cfg = load_config(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let clock = if accelerate {
                Clock::Simulated
            } else {
                Clock::real_time()
            };
            let state = InstrumentState::new(cfg)?.with_clock(clock);
            let server = TwinServer::spawn(state, (bind.as_str(), port), false)?;
            println!("listening on {}", server.local_addr());
            server.wait();
        }
        Cmd::Bench {
            which,
            out,
            accelerate,
            config,
            seed,
            device_only,
        } => {
            let kind = BenchKind::from(which);
            let mut settings = BenchSettings::new(seed);
            settings.config = load_config(&config)?;
            settings.accelerate = accelerate;
            if device_only {
                settings.floors = None;
            }
            let result = bench::run(kind, &settings)?;
            for r in &result.records {
                println!("{}", serde_json::to_string(r)?);
            }
            for p in result.write(&out, kind.name())? {
                log::info!("wrote {}", p.display());
            }
        }
        Cmd::Bode {
            tf,
            out,
            f_min,
            f_max,
            per_decade,
            tune_pm,
            tune_ugbw,
        } => {
            let text = std::fs::read_to_string(&tf)
                .with_context(|| format!("reading {}", tf.display()))?;
            let mut model: PoleZeroGain =
                serde_json::from_str(&text).context("parsing transfer function")?;
            model.validate()?;
            if let (Some(pm), Some(ugbw)) = (tune_pm, tune_ugbw) {
                let comp = tune_compensation(&model, pm, ugbw)?;
                println!("compensation {}", serde_json::to_string(&comp)?);
                model = apply_compensation(&model, &comp);
            }
            match model.stability_report() {
                Ok(rep) => println!("{}", serde_json::to_string(&rep)?),
                Err(e) => println!("no stability report: {e}"),
            }
            let mut w = BufWriter::new(File::create(&out)?);
            writeln!(w, "freq_hz,magnitude_db,phase_deg")?;
            for (f, r) in model.bode(f_min, f_max, per_decade)? {
                writeln!(w, "{f:.6e},{:.6},{:.6}", r.magnitude_db, r.phase_deg)?;
            }
            w.flush()?;
        }
        Cmd::Monitor {
            duration,
            repetitions,
            shots,
            seed,
            accelerate,
            connect,
            config,
            out,
        } => {
            let cfg = MonitorConfig {
                duration_s: duration,
                repetitions,
                shots,
                seed,
                real_time: !accelerate,
                ..MonitorConfig::default()
            };
            let model = QubitModel::default();
            let mut inst: Box<dyn Instrument> = match connect {
                Some(addr) => {
                    if config.is_some() {
                        bail!("--config applies to the in-process twin only");
                    }
                    Box::new(TwinClient::connect(addr.as_str())?)
                }
                None => {
                    let clock = if accelerate {
                        Clock::Simulated
                    } else {
                        Clock::real_time()
                    };
                    let twin_cfg = load_config(&config)?.with_seed(seed);
                    Box::new(LocalTwin::new(
                        InstrumentState::new(twin_cfg)?.with_clock(clock),
                    ))
                }
            };
            let result = run_monitor(inst.as_mut(), &model, &cfg)?;
            std::fs::create_dir_all(&out)?;
            result.write_csv(BufWriter::new(File::create(out.join("monitor.csv"))?))?;
            let summary = result.summary(20);
            std::fs::write(
                out.join("monitor_summary.json"),
                serde_json::to_string_pretty(&summary)?,
            )?;
            println!(
                "fits {}/{}  fringe pk-pk {:.1} Hz  T2 within 3.5-5.5 us: {:.1}%",
                summary.fits_ok,
                summary.records,
                summary.fringe_pkpk_hz.unwrap_or(f64::NAN),
                100.0 * summary.t2r_within_3p5_5p5_us
            );
        }
    }
    Ok(())
}
