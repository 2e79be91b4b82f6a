use std::collections::BTreeSet;
use std::time::Duration;

use serde::Deserialize;

use super::payload::{extract_raid_key, IssuePayload};

const PAGE_SIZE: usize = 100;

#[derive(Debug, thiserror::Error)]
pub enum TrackerError {
    #[error("request to {url} failed: {message}")]
    Transport { url: String, message: String },
    #[error("{url} answered {status}")]
    Status { url: String, status: u16 },
    #[error("unexpected response from {url}: {message}")]
    Response { url: String, message: String },
}

/// An issue tracker that can list filed issue keys and file new issues.
pub trait IssueTracker {
    fn existing_keys(&mut self) -> Result<BTreeSet<String>, TrackerError>;
    fn submit(&mut self, payload: &IssuePayload) -> Result<(), TrackerError>;
}

/// Submit planned payloads one at a time, stopping at the first failure.
/// Returns the keys that were filed.
pub fn submit_all(
    tracker: &mut dyn IssueTracker,
    planned: &[IssuePayload],
) -> Result<Vec<String>, (Vec<String>, TrackerError)> {
    let mut submitted = Vec::new();
    for payload in planned {
        if let Err(e) = tracker.submit(payload) {
            return Err((submitted, e));
        }
        submitted.push(payload.idempotency_key.clone());
    }
    Ok(submitted)
}

/// A GitHub-REST-compatible tracker: `GET {endpoint}/issues` and
/// `POST {endpoint}/issues`.
pub struct HttpTracker {
    client: reqwest::blocking::Client,
    endpoint: String,
    token: Option<String>,
}

impl std::fmt::Debug for HttpTracker {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HttpTracker")
            .field("endpoint", &self.endpoint)
            .field("token", &self.token.as_ref().map(|_| "<redacted>"))
            .finish()
    }
}

#[derive(Deserialize)]
struct FiledIssue {
    #[serde(default)]
    body: Option<String>,
}

impl HttpTracker {
    pub fn new(endpoint: &str, token: Option<String>) -> Result<Self, TrackerError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(30))
            .user_agent(concat!("fairassure/", env!("CARGO_PKG_VERSION")))
            .build()
            .map_err(|e| TrackerError::Transport {
                url: endpoint.to_string(),
                message: e.to_string(),
            })?;
        Ok(HttpTracker {
            client,
            endpoint: endpoint.trim_end_matches('/').to_string(),
            token,
        })
    }

    fn authorize(&self, request: reqwest::blocking::RequestBuilder) -> reqwest::blocking::RequestBuilder {
        match &self.token {
            Some(token) => request.bearer_auth(token),
            None => request,
        }
    }

    fn send(&self, url: &str, request: reqwest::blocking::RequestBuilder) -> Result<reqwest::blocking::Response, TrackerError> {
        let response = self
            .authorize(request)
            .header("Accept", "application/json")
            .send()
            .map_err(|e| TrackerError::Transport {
                url: url.to_string(),
                message: e.without_url().to_string(),
            })?;
        if !response.status().is_success() {
            return Err(TrackerError::Status {
                url: url.to_string(),
                status: response.status().as_u16(),
            });
        }
        Ok(response)
    }
}

impl IssueTracker for HttpTracker {
    fn existing_keys(&mut self) -> Result<BTreeSet<String>, TrackerError> {
        let mut keys = BTreeSet::new();
        for page in 1.. {
            let url = format!("{}/issues?state=all&per_page={PAGE_SIZE}&page={page}", self.endpoint);
            let response = self.send(&url, self.client.get(&url))?;
            let issues: Vec<FiledIssue> = response.json().map_err(|e| TrackerError::Response {
                url: url.clone(),
                message: e.without_url().to_string(),
            })?;
            keys.extend(issues.iter().filter_map(|i| i.body.as_deref().and_then(extract_raid_key)));
            if issues.len() < PAGE_SIZE {
                break;
            }
        }
        Ok(keys)
    }

    fn submit(&mut self, payload: &IssuePayload) -> Result<(), TrackerError> {
        let url = format!("{}/issues", self.endpoint);
        self.send(&url, self.client.post(&url).json(payload))?;
        Ok(())
    }
}
