//! Network front end for a simulated wheelchair session.
//!
//! One session at a time runs on a dedicated owner thread that advances the
//! EEG synthesizer, the decoder and the world on one logical clock. HTTP
//! handlers send it commands and intents; GET /state reads its latest
//! snapshot; WS /telemetry streams what it publishes.

pub mod catalog;
pub mod config;
pub mod decimate;
pub mod error;
pub mod owner;
pub mod server;
pub mod session;
pub mod telemetry;

pub use catalog::Catalog;
pub use config::GatewayConfig;
pub use error::{GatewayError, Result};
pub use server::{router, AppState, SessionRequest};
pub use session::{IntentTarget, Mode, Recording, Session, SessionConfig, Snapshot};
pub use telemetry::{Hub, Telemetry};

use std::net::SocketAddr;
use std::sync::Arc;

/// Bind `config.listen`, start the boot session if configured, and return
/// the bound address with the server future.
pub async fn bind(
    config: GatewayConfig,
) -> anyhow::Result<(SocketAddr, Arc<AppState>, impl std::future::Future<Output = std::io::Result<()>>)> {
    let catalog = Catalog::from_config(&config)?;
    let listen = config.listen;
    let boot = config.session.clone();
    let state = AppState::new(config, catalog);
    if let Some(s) = boot {
        state
            .start_session(SessionRequest {
                profile: Some(s.profile),
                map: Some(s.map),
                seed: s.seed,
                mode: s.mode,
                noise_free_sensors: s.noise_free_sensors,
                ..Default::default()
            })
            .await?;
    }
    let listener = tokio::net::TcpListener::bind(listen).await?;
    let addr = listener.local_addr()?;
    let app = router(state.clone());
    Ok((addr, state, async move { axum::serve(listener, app).await }))
}
