use std::path::PathBuf;

use chair_gateway::GatewayConfig;
use clap::Parser;
use tracing_subscriber::EnvFilter;

#[derive(Parser)]
#[command(version, about = "HTTP and WebSocket gateway for a simulated BCI wheelchair")]
struct Args {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .init();
    let args = Args::parse();
    let mut config = match &args.config {
        Some(p) => GatewayConfig::load(p)?,
        None => GatewayConfig::default(),
    };
    config.apply_env(|k| std::env::var(k).ok())?;
    let (addr, _state, serve) = chair_gateway::bind(config).await?;
    tracing::info!(%addr, "listening");
    serve.await?;
    Ok(())
}
