//! Remote captioning service over HTTP.

use std::time::Duration;

use base64::Engine;
use reqwest::blocking::{multipart, Client};

use super::config::RequestFormat;
use super::{CaptionError, CaptionProvider, CaptionRequest};

pub(crate) fn error_for_status(status: u16, body: String) -> CaptionError {
    match status {
        401 | 403 => CaptionError::AuthError(format!("status {status}: {body}")),
        429 => CaptionError::RateLimited { attempts: 1 },
        _ => CaptionError::ProviderError { status, body },
    }
}

#[derive(Debug)]
pub struct HttpProvider {
    id: String,
    endpoint: String,
    auth: Option<(String, String)>,
    format: RequestFormat,
    response_pointer: String,
    client: Client,
}

impl HttpProvider {
    /// `auth` is `(header name, credential)`; the credential is held in memory only.
    pub fn new(
        id: impl Into<String>,
        endpoint: impl Into<String>,
        auth: Option<(String, String)>,
        format: RequestFormat,
        response_pointer: impl Into<String>,
        timeout: Duration,
    ) -> Result<Self, CaptionError> {
        let client = Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| CaptionError::Config(e.to_string()))?;
        Ok(Self {
            id: id.into(),
            endpoint: endpoint.into(),
            auth,
            format,
            response_pointer: response_pointer.into(),
            client,
        })
    }
}

impl CaptionProvider for HttpProvider {
    fn id(&self) -> &str {
        &self.id
    }

    fn fetch(&self, req: &CaptionRequest) -> Result<String, CaptionError> {
        let mut builder = self.client.post(&self.endpoint);
        if let Some((header, value)) = &self.auth {
            builder = builder.header(header.as_str(), value.as_str());
        }
        builder = match self.format {
            RequestFormat::Multipart => {
                let part = multipart::Part::bytes(req.bytes.as_ref().clone())
                    .file_name(format!("{}.png", req.image_id))
                    .mime_str("image/png")
                    .map_err(|e| CaptionError::InvalidRequest(e.to_string()))?;
                builder.multipart(multipart::Form::new().part("image", part))
            }
            RequestFormat::Base64Json => {
                let body = serde_json::json!({
                    "image_id": req.image_id,
                    "image": base64::engine::general_purpose::STANDARD.encode(req.bytes.as_slice()),
                });
                builder
                    .header("content-type", "application/json")
                    .body(body.to_string())
            }
        };
        let resp = builder.send().map_err(|e| CaptionError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp.text().map_err(|e| CaptionError::Transport(e.to_string()))?;
        if !(200..300).contains(&status) {
            return Err(error_for_status(status, text));
        }
        let json: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| CaptionError::BadResponse(format!("not JSON: {e}")))?;
        json.pointer(&self.response_pointer)
            .and_then(|v| v.as_str())
            .map(str::to_string)
            .ok_or_else(|| CaptionError::BadResponse(format!("no string at {}", self.response_pointer)))
    }
}
