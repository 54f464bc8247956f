//! HTTP embedding provider.
//!
//! Sends `{"texts": [...]}` as JSON and expects `{"embeddings": [[...], ...]}`
//! back, one vector per text in request order.

use std::time::Duration;

use claimgraph::embedding::EmbeddingProvider;
use claimgraph::{Error, Result};
use serde::{Deserialize, Serialize};

pub const URL_VAR: &str = "CLAIMGRAPH_EMBED_URL";
pub const TOKEN_VAR: &str = "CLAIMGRAPH_EMBED_TOKEN";

pub struct RemoteProvider {
    url: String,
    token: Option<String>,
    agent: ureq::Agent,
}

#[derive(Serialize)]
struct Request<'a> {
    texts: &'a [String],
}

#[derive(Deserialize)]
struct Response {
    embeddings: Vec<Vec<f64>>,
}

impl RemoteProvider {
    pub fn new(url: impl Into<String>, token: Option<String>) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(60)))
            .build()
            .into();
        RemoteProvider {
            url: url.into(),
            token,
            agent,
        }
    }

    /// Reads the endpoint and optional bearer token from the environment.
    pub fn from_env() -> Option<Self> {
        let url = std::env::var(URL_VAR).ok().filter(|u| !u.is_empty())?;
        Some(RemoteProvider::new(url, std::env::var(TOKEN_VAR).ok()))
    }
}

impl EmbeddingProvider for RemoteProvider {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>> {
        let mut req = self.agent.post(&self.url);
        if let Some(t) = &self.token {
            req = req.header("Authorization", &format!("Bearer {t}"));
        }
        let provider_err = |e: ureq::Error| Error::Config(format!("embedding provider {}: {e}", self.url));
        let mut resp = req.send_json(Request { texts }).map_err(provider_err)?;
        let body: Response = resp.body_mut().read_json().map_err(provider_err)?;
        if body.embeddings.len() != texts.len() {
            return Err(Error::LengthMismatch(format!(
                "sent {} texts, received {} embeddings",
                texts.len(),
                body.embeddings.len()
            )));
        }
        Ok(body.embeddings)
    }
}
