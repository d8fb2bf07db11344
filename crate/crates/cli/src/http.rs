//! HTTP POST transport for external model adapters.

use std::time::Duration;

use genderalt::pipeline::{Transport, TransportError};
use serde_json::Value;

/// POSTs each request as JSON to a fixed URL and parses the JSON reply.
pub struct HttpTransport {
    client: reqwest::blocking::Client,
    url: String,
}

impl HttpTransport {
    pub fn new(url: impl Into<String>, timeout: Duration) -> Result<Self, TransportError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| TransportError::Remote(e.to_string()))?;
        Ok(Self { client, url: url.into() })
    }
}

impl Transport for HttpTransport {
    fn call(&self, request: &Value) -> Result<Value, TransportError> {
        let response = self
            .client
            .post(&self.url)
            .json(request)
            .send()
            .and_then(|r| r.error_for_status())
            .map_err(|e| TransportError::Remote(format!("{}: {e}", self.url)))?;
        response.json().map_err(|e| TransportError::Remote(format!("{}: {e}", self.url)))
    }
}

/// A URL gives an HTTP transport; anything else is run as a command line.
pub fn transport_for(endpoint: &str, timeout: Duration) -> Result<Box<dyn Transport>, TransportError> {
    if endpoint.starts_with("http://") || endpoint.starts_with("https://") {
        Ok(Box::new(HttpTransport::new(endpoint, timeout)?))
    } else {
        Ok(Box::new(genderalt::pipeline::SubprocessTransport::spawn_command_line(endpoint)?))
    }
}
