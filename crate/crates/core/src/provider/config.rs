//! Provider configuration files (TOML or JSON).

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{CaptionError, CaptionProvider, FixtureProvider, Fixtures, HttpProvider};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    #[default]
    Http,
    Fixture,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RequestFormat {
    #[default]
    Multipart,
    #[serde(alias = "base64_json")]
    Base64Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderConfig {
    pub id: String,
    #[serde(default)]
    pub kind: ProviderKind,
    #[serde(default)]
    pub endpoint: Option<String>,
    #[serde(default)]
    pub auth_header: Option<String>,
    /// Name of the environment variable holding the credential.
    #[serde(default)]
    pub credential_env: Option<String>,
    #[serde(default)]
    pub request_format: RequestFormat,
    /// JSON pointer to the caption string in the response body.
    #[serde(default = "default_pointer")]
    pub response_pointer: String,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    /// Fixture file for `kind = "fixture"`, relative to the config file.
    #[serde(default)]
    pub fixtures: Option<PathBuf>,
}

fn default_pointer() -> String {
    "/caption".into()
}

fn default_timeout() -> u64 {
    30
}

pub fn load_provider_config(path: &Path) -> Result<ProviderConfig, CaptionError> {
    let text = std::fs::read_to_string(path).map_err(|e| CaptionError::Config(format!("{}: {e}", path.display())))?;
    let mut cfg: ProviderConfig = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(|e| CaptionError::Config(format!("{}: {e}", path.display())))?
    } else {
        toml::from_str(&text).map_err(|e| CaptionError::Config(format!("{}: {e}", path.display())))?
    };
    if let (Some(f), Some(dir)) = (&cfg.fixtures, path.parent()) {
        if f.is_relative() {
            cfg.fixtures = Some(dir.join(f));
        }
    }
    Ok(cfg)
}

impl ProviderConfig {
    /// Instantiates the provider. The credential is read from the environment
    /// at this point; a missing variable is an [`CaptionError::AuthError`].
    pub fn build(&self) -> Result<Arc<dyn CaptionProvider>, CaptionError> {
        match self.kind {
            ProviderKind::Fixture => {
                let path = self
                    .fixtures
                    .as_ref()
                    .ok_or_else(|| CaptionError::Config(format!("provider {}: fixture kind needs `fixtures`", self.id)))?;
                Ok(Arc::new(FixtureProvider::new(self.id.clone(), Fixtures::load(path)?)))
            }
            ProviderKind::Http => {
                let endpoint = self
                    .endpoint
                    .clone()
                    .ok_or_else(|| CaptionError::Config(format!("provider {}: missing endpoint", self.id)))?;
                let auth = match &self.credential_env {
                    Some(var) => {
                        let value = std::env::var(var).map_err(|_| {
                            CaptionError::AuthError(format!("credential variable {var} is not set"))
                        })?;
                        let header = self.auth_header.clone().unwrap_or_else(|| "Authorization".into());
                        Some((header, value))
                    }
                    None => None,
                };
                Ok(Arc::new(HttpProvider::new(
                    self.id.clone(),
                    endpoint,
                    auth,
                    self.request_format,
                    self.response_pointer.clone(),
                    Duration::from_secs(self.timeout_secs),
                )?))
            }
        }
    }
}
