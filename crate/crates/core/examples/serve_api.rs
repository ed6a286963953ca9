//! Runs the HTTP API configured from `REVERIE_*` environment variables.
//!
//!     REVERIE_STORE_PASSPHRASE=dev REVERIE_ADMIN_USER=admin REVERIE_ADMIN_PASSWORD=admin \
//!         cargo run --example serve_api
//!
//! Without REVERIE_LLM_BASE_URL the deterministic mock provider is used.

use reverie::api::{serve, ServerConfig};

#[tokio::main]
async fn main() -> Result<(), String> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let config = ServerConfig::from_env()?;
    log::info!("data in {}, study zone {}", config.data_dir.display(), config.timezone);
    serve(config).await
}
