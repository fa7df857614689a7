//! HTTP backend serving next-token log-probabilities.
//!
//! Protocol: `POST <endpoint>/logits` with body `{"context": [int, ...]}`,
//! response `{"log_probs": [float, ...]}` with one entry per vocabulary
//! token. Non-200 responses and transport failures are retried with
//! exponential backoff.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lm::logits::LogitVector;
use crate::lm::model::{Context, LogitSource};

#[derive(Debug, Clone)]
pub struct RetryPolicy {
    pub max_retries: u32,
    /// First backoff sleep in milliseconds; doubles on each retry.
    pub backoff_base_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> RetryPolicy {
        RetryPolicy {
            max_retries: 3,
            backoff_base_ms: 100,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RemoteBackend {
    pub endpoint: String,
    pub timeout_ms: u64,
    pub retry: RetryPolicy,
    /// Expected logit vector length; anything else is a shape error.
    pub vocab_size: usize,
}

#[derive(Serialize)]
struct LogitsRequest<'a> {
    context: &'a [u32],
}

#[derive(Deserialize)]
struct LogitsResponse {
    log_probs: Vec<f64>,
}

impl RemoteBackend {
    pub fn new(endpoint: impl Into<String>, timeout_ms: u64, vocab_size: usize) -> RemoteBackend {
        RemoteBackend {
            endpoint: endpoint.into(),
            timeout_ms,
            retry: RetryPolicy::default(),
            vocab_size,
        }
    }

    fn agent(&self) -> ureq::Agent {
        ureq::AgentBuilder::new()
            .timeout(Duration::from_millis(self.timeout_ms))
            .build()
    }

    /// POST with retries. `parse` turns the response body into the final
    /// value; its errors (e.g. shape mismatches) are not retried.
    pub(crate) fn post_json<T>(
        &self,
        path: &str,
        body: &impl Serialize,
        parse: impl Fn(String) -> Result<T>,
    ) -> Result<T> {
        let url = format!("{}{}", self.endpoint.trim_end_matches('/'), path);
        let agent = self.agent();
        let mut timed_out = false;
        for attempt in 0..=self.retry.max_retries {
            if attempt > 0 {
                let sleep = self.retry.backoff_base_ms << (attempt - 1);
                std::thread::sleep(Duration::from_millis(sleep));
            }
            match agent.post(&url).send_json(serde_json::to_value(body).unwrap()) {
                Ok(resp) => {
                    let text = resp
                        .into_string()
                        .map_err(|e| Error::Format(e.to_string()))?;
                    return parse(text);
                }
                Err(ureq::Error::Status(_, _)) => {}
                Err(ureq::Error::Transport(t)) => {
                    if t.kind() == ureq::ErrorKind::Io {
                        // Covers both refused connections and timeouts; a
                        // timeout message is surfaced specially below.
                        timed_out = t.to_string().to_lowercase().contains("timed out");
                    }
                }
            }
        }
        if timed_out {
            Err(Error::NetworkTimeout(url))
        } else {
            Err(Error::RetryExhausted {
                endpoint: url,
                attempts: self.retry.max_retries + 1,
            })
        }
    }

    pub fn remote_log_probs(&self, context: &Context) -> Result<LogitVector> {
        let ids: Vec<u32> = context.tokens().iter().map(|t| t.0).collect();
        let expected = self.vocab_size;
        self.post_json("/logits", &LogitsRequest { context: &ids }, move |text| {
            let resp: LogitsResponse =
                serde_json::from_str(&text).map_err(|e| Error::Format(e.to_string()))?;
            if resp.log_probs.len() != expected {
                return Err(Error::ShapeMismatch {
                    got: resp.log_probs.len(),
                    expected,
                });
            }
            let lv = LogitVector::new(resp.log_probs);
            lv.validate()?;
            Ok(lv)
        })
    }
}

impl LogitSource for RemoteBackend {
    fn log_probs(&self, context: &Context) -> Result<LogitVector> {
        self.remote_log_probs(context)
    }

    fn vocab_size(&self) -> usize {
        self.vocab_size
    }
}
