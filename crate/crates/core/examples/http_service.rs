//! Starts the HTTP API on a small untrained model and calls a few endpoints
//! in-process. Pass a port to keep serving instead.
//!
//! `cargo run --example http_service -- [<port>]`

use axum::body::Body;
use axum::http::Request;
use http_body_util::BodyExt;
use tower::ServiceExt;

use embogen::anim::JointTable;
use embogen::cvae::{CvaeConfig, CvaeModel};
use embogen::preprocess::NormalizationTable;
use embogen::service::{bind, router, serve, AppState};

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    let config = CvaeConfig {
        encoder_hidden: vec![32],
        decoder_hidden: vec![32],
        ..Default::default()
    };
    let model = CvaeModel::from_seed(config, NormalizationTable::from_limits(&JointTable::pepper()))?;
    let app = router(AppState::from_model(&model, JointTable::pepper())?, None)?;

    if let Some(port) = std::env::args().nth(1) {
        let listener = bind(([127, 0, 0, 1], port.parse()?).into()).await?;
        println!("listening on http://{}", listener.local_addr()?);
        serve(listener, app).await?;
        return Ok(());
    }

    let calls = [
        ("GET", "/health", ""),
        ("POST", "/decode", r#"{"z": [0, 0, 0], "c": 0.5}"#),
        ("POST", "/generate", r#"{"valence": 0.5, "radius": 3, "axis": 3, "longitude": 0}"#),
        ("POST", "/generate", r#"{"valence": 0.5, "radius": 0, "axis": 3, "longitude": 0}"#),
    ];
    for (method, uri, body) in calls {
        let req = Request::builder()
            .method(method)
            .uri(uri)
            .header("content-type", "application/json")
            .body(Body::from(body))?;
        let resp = app.clone().oneshot(req).await?;
        let status = resp.status();
        let bytes = resp.into_body().collect().await?.to_bytes();
        let text = String::from_utf8_lossy(&bytes);
        let shown: String = text.chars().take(160).collect();
        println!("{method} {uri} -> {status} ({} bytes): {shown}", bytes.len());
    }
    Ok(())
}
