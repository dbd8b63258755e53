use std::fs;
use std::io::{self, BufReader};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::mpsc;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use polldesk_core::codec::{Codec, FrameDecoder};
use polldesk_core::dispatch::ReceiptLog;
use polldesk_demo::client_ui::{ClientUi, Mode};
use polldesk_demo::config::DemoConfig;
use polldesk_demo::{client, message_type, server};
use polldesk_scaffold::MessageSpec;
use tracing::error;
use tracing_subscriber::EnvFilter;

const EXIT_RUNTIME: u8 = 1;
const EXIT_CONFIG: u8 = 2;

#[derive(Parser)]
#[command(name = "polldesk", version, about = "Request/response polling over TCP")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the weather/test demo server until interrupted.
    Server {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        port: Option<u16>,
    },
    /// Run the demo menu client.
    Client {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        port: Option<u16>,
        /// Read menu options from this file instead of the terminal.
        #[arg(long)]
        script: Option<PathBuf>,
    },
    /// Add a request/response pair to a polldesk application.
    Scaffold {
        /// Base name, e.g. Echo.
        #[arg(long)]
        name: String,
        /// Request fields as name:kind,...
        #[arg(long)]
        req: String,
        /// Response fields as name:kind,...
        #[arg(long)]
        resp: String,
        /// Write the changes; without it this is a dry run.
        #[arg(long)]
        apply: bool,
        #[arg(long, default_value = ".")]
        root: PathBuf,
    },
    /// Wire-format utilities.
    Codec {
        #[command(subcommand)]
        command: CodecCommand,
    },
}

#[derive(Subcommand)]
enum CodecCommand {
    /// Print every frame in a captured byte stream.
    Dump { file: PathBuf },
}

fn load_config(path: Option<&PathBuf>, port: Option<u16>) -> Result<DemoConfig, ExitCode> {
    let mut config = match path {
        Some(path) => DemoConfig::load(path),
        None => Ok(DemoConfig::default()),
    }
    .map_err(|e| {
        eprintln!("polldesk: {e}");
        ExitCode::from(EXIT_CONFIG)
    })?;
    if let Some(port) = port {
        config.server_port = port;
    }
    config.validate().map_err(|e| {
        eprintln!("polldesk: {e}");
        ExitCode::from(EXIT_CONFIG)
    })?;
    Ok(config)
}

fn run_server(config: DemoConfig) -> ExitCode {
    let running = match server::start(&config, ReceiptLog::stdout(), &ReceiptLog::stdout()) {
        Ok(running) => running,
        Err(e) => {
            eprintln!("polldesk: {e}");
            return ExitCode::from(EXIT_RUNTIME);
        }
    };
    eprintln!("polldesk: listening on {}", running.local_addr());
    let (tx, rx) = mpsc::channel();
    if let Err(e) = ctrlc::set_handler(move || {
        let _ = tx.send(());
    }) {
        error!(error = %e, "cannot install interrupt handler");
    }
    let _ = rx.recv();
    running.stop();
    ExitCode::SUCCESS
}

fn run_client(config: DemoConfig, script: Option<PathBuf>) -> ExitCode {
    let input: Box<dyn io::BufRead> = match &script {
        Some(path) => match fs::File::open(path) {
            Ok(f) => Box::new(BufReader::new(f)),
            Err(e) => {
                eprintln!("polldesk: cannot read {}: {e}", path.display());
                return ExitCode::from(EXIT_CONFIG);
            }
        },
        None => Box::new(io::stdin().lock()),
    };
    let reader = match client::connect(&config, ReceiptLog::stdout()) {
        Ok(reader) => reader,
        Err(e) => {
            eprintln!("polldesk: {e}");
            return ExitCode::from(EXIT_RUNTIME);
        }
    };
    let mode = if script.is_some() { Mode::Scripted } else { Mode::Interactive };
    match ClientUi::new(&reader, input, io::stdout().lock(), mode).run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("polldesk: {e}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}

fn run_scaffold(name: &str, req: &str, resp: &str, apply: bool, root: &Path) -> ExitCode {
    let outcome = MessageSpec::parse(name, req, resp)
        .and_then(|spec| polldesk_scaffold::plan(&spec, root))
        .and_then(|plan| polldesk_scaffold::generate(&plan, apply));
    match outcome {
        Ok(report) => {
            print!("{report}");
            if report.anchors_missing() > 0 {
                ExitCode::from(EXIT_RUNTIME)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("polldesk: {e}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}

fn run_dump(file: &PathBuf) -> ExitCode {
    let bytes = match fs::read(file) {
        Ok(bytes) => bytes,
        Err(e) => {
            eprintln!("polldesk: cannot read {}: {e}", file.display());
            return ExitCode::from(EXIT_RUNTIME);
        }
    };
    let codec = Codec::new(Arc::new(message_type::registry()));
    let mut decoder = FrameDecoder::new(codec.max_payload());
    decoder.extend(&bytes);
    loop {
        match decoder.next_frame() {
            Ok(Some(frame)) => println!(
                "{} ({}) key={} payload={:?}",
                codec.type_name(frame.type_code),
                frame.type_code,
                frame.message_key,
                frame.payload
            ),
            Ok(None) => break,
            Err(e) => {
                eprintln!("polldesk: {e}");
                return ExitCode::from(EXIT_RUNTIME);
            }
        }
    }
    if decoder.buffered() > 0 {
        eprintln!("polldesk: {} trailing bytes do not form a frame", decoder.buffered());
        return ExitCode::from(EXIT_RUNTIME);
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("warn")))
        .with_writer(io::stderr)
        .init();
    match Cli::parse().command {
        Command::Server { config, port } => match load_config(config.as_ref(), port) {
            Ok(config) => run_server(config),
            Err(code) => code,
        },
        Command::Client { config, port, script } => match load_config(config.as_ref(), port) {
            Ok(config) => run_client(config, script),
            Err(code) => code,
        },
        Command::Scaffold {
            name,
            req,
            resp,
            apply,
            root,
        } => run_scaffold(&name, &req, &resp, apply, &root),
        Command::Codec {
            command: CodecCommand::Dump { file },
        } => run_dump(&file),
    }
}
