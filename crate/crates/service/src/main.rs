use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use flux_backend::{build_backend, BackendConfig, BackendKind};
use flux_service::script::{self, RunPaths, Script};
use flux_service::{api, Assets, Engine};

/// Co-creative comic sessions whose genre drifts with the story's affect.
#[derive(Parser)]
#[command(name = "flux", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Serve the HTTP API.
    Serve {
        #[arg(long, env = "FLUX_PORT", default_value_t = 8000)]
        port: u16,
        #[arg(long, env = "FLUX_HOST", default_value = "127.0.0.1")]
        host: String,
        #[arg(long, env = "FLUX_DATA_DIR", default_value = "flux-data")]
        data_dir: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Play a scripted session headlessly and export the comic.
    Run {
        #[arg(long)]
        script: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Session store root (default: {out}/sessions).
        #[arg(long, env = "FLUX_DATA_DIR")]
        data_dir: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Backend {
    Mock,
    Http,
}

#[derive(Args)]
struct Common {
    #[arg(long, value_enum, env = "FLUX_BACKEND", default_value = "mock")]
    backend: Backend,
    #[arg(long, env = "FLUX_BACKEND_URL")]
    backend_url: Option<String>,
    /// Backend request timeout in seconds.
    #[arg(long, env = "FLUX_BACKEND_TIMEOUT", default_value_t = 120.0)]
    backend_timeout: f64,
    #[arg(long, env = "FLUX_VOCAB")]
    vocab: Option<PathBuf>,
    #[arg(long, env = "FLUX_LEXICON")]
    lexicon: Option<PathBuf>,
    #[arg(long, env = "FLUX_STYLES")]
    styles: Option<PathBuf>,
    /// JSON file with `decay` / `flux_threshold` overrides.
    #[arg(long, env = "FLUX_CONFIG")]
    config: Option<PathBuf>,
    /// Longest side of generated images, in pixels.
    #[arg(long, env = "FLUX_MAX_SIDE", default_value_t = flux_service::DEFAULT_MAX_SIDE)]
    max_side: u32,
}

impl Common {
    fn assets(&self) -> Result<Assets, String> {
        let mut assets = Assets::load(
            self.vocab.as_deref(),
            self.lexicon.as_deref(),
            self.styles.as_deref(),
            self.config.as_deref(),
        )
        .map_err(|e| e.to_string())?;
        if self.max_side < 64 {
            return Err("--max-side must be at least 64".into());
        }
        assets.max_side = self.max_side;
        Ok(assets)
    }

    fn backend_config(&self) -> BackendConfig {
        BackendConfig {
            kind: match self.backend {
                Backend::Mock => BackendKind::Mock,
                Backend::Http => BackendKind::Http,
            },
            base_url: self.backend_url.clone(),
            timeout_secs: self.backend_timeout,
            ..BackendConfig::default()
        }
    }
}

async fn serve(port: u16, host: String, data_dir: PathBuf, common: Common) -> Result<(), String> {
    let assets = common.assets()?;
    let backend = build_backend(&common.backend_config(), &assets.styles).map_err(|e| e.to_string())?;
    let engine = Engine::new(assets, &data_dir, backend).map_err(|e| e.to_string())?;
    let addr: SocketAddr = format!("{host}:{port}")
        .parse()
        .map_err(|e| format!("bad address {host}:{port}: {e}"))?;
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| format!("bind {addr}: {e}"))?;
    log::info!("listening on http://{addr} (data in {})", data_dir.display());
    axum::serve(listener, api::router(Arc::new(engine)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| e.to_string())
}

async fn run(script_path: PathBuf, out: PathBuf, data_dir: Option<PathBuf>, common: Common) -> Result<(), String> {
    let text = std::fs::read_to_string(&script_path)
        .map_err(|e| format!("{}: {e}", script_path.display()))?;
    let script = Script::from_json(&text).map_err(|e| format!("{}: {e}", script_path.display()))?;
    let assets = common.assets()?;
    let backend = build_backend(&common.backend_config(), &assets.styles).map_err(|e| e.to_string())?;
    let paths = RunPaths { out_dir: out, data_dir };
    let report = script::run(&script, assets, backend, &paths)
        .await
        .map_err(|e| e.to_string())?;
    for r in &report.responses {
        println!("{}", serde_json::to_string(r).expect("response serializes"));
    }
    log::info!(
        "session {} exported {} panel(s) to {}",
        report.session_id,
        report.export.panels.len(),
        paths.comic_dir().display()
    );
    Ok(())
}

#[tokio::main]
async fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("FLUX_LOG", "info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Serve { port, host, data_dir, common } => serve(port, host, data_dir, common).await,
        Command::Run { script, out, data_dir, common } => run(script, out, data_dir, common).await,
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("flux: {e}");
            ExitCode::FAILURE
        }
    }
}
