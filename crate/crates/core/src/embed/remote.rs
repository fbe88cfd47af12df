//! HTTP clients for OpenAI-compatible embedding and chat-completion services.
//!
//! The wire formats are the de-facto standard shapes:
//! `POST {"model", "input": [..]} -> {"data": [{"index", "embedding"}]}` for
//! embeddings and the `messages`/`choices` shape for chat completions. The
//! endpoint and the key-bearing header name are configurable.

use serde::Deserialize;
use serde_json::json;

use super::EmbedError;

#[derive(Debug, Clone)]
pub struct RemoteEndpoint {
    pub url: String,
    pub model: String,
    pub api_key: Option<String>,
    /// Header carrying the key. `Authorization` gets a `Bearer ` prefix, any
    /// other name receives the raw key.
    pub auth_header: String,
    pub timeout_secs: u64,
}

impl RemoteEndpoint {
    fn client(&self) -> Result<reqwest::blocking::Client, EmbedError> {
        reqwest::blocking::Client::builder()
            .timeout(std::time::Duration::from_secs(self.timeout_secs))
            .build()
            .map_err(|e| EmbedError::RemoteUnavailable {
                attempts: 0,
                message: format!("failed to build HTTP client: {e}"),
            })
    }

    fn apply_auth(
        &self,
        req: reqwest::blocking::RequestBuilder,
    ) -> reqwest::blocking::RequestBuilder {
        match &self.api_key {
            Some(key) if self.auth_header.eq_ignore_ascii_case("authorization") => {
                req.header("Authorization", format!("Bearer {key}"))
            }
            Some(key) => req.header(self.auth_header.as_str(), key.clone()),
            None => req,
        }
    }

    fn post_json(&self, body: serde_json::Value) -> Result<String, RemoteFailure> {
        let client = self.client().map_err(RemoteFailure::Fatal)?;
        let response = self
            .apply_auth(client.post(&self.url).json(&body))
            .send()
            .map_err(|e| RemoteFailure::Transient(format!("transport error: {e}")))?;

        let status = response.status();
        let text = response
            .text()
            .map_err(|e| RemoteFailure::Transient(format!("failed to read body: {e}")))?;
        if status.is_success() {
            Ok(text)
        } else if status.is_server_error() || status.as_u16() == 429 {
            Err(RemoteFailure::Transient(format!(
                "status {status}: {}",
                truncate(&text)
            )))
        } else {
            Err(RemoteFailure::Fatal(EmbedError::RemoteRejected {
                status: status.as_u16(),
                message: truncate(&text),
            }))
        }
    }
}

/// Distinguishes failures worth retrying from definitive rejections.
pub enum RemoteFailure {
    Transient(String),
    Fatal(EmbedError),
}

fn truncate(s: &str) -> String {
    const LIMIT: usize = 300;
    if s.len() <= LIMIT {
        s.to_string()
    } else {
        let cut = s
            .char_indices()
            .take_while(|(i, _)| *i < LIMIT)
            .last()
            .map(|(i, c)| i + c.len_utf8())
            .unwrap_or(0);
        format!("{}...", &s[..cut])
    }
}

#[derive(Deserialize)]
struct EmbeddingResponse {
    data: Vec<EmbeddingDatum>,
}

#[derive(Deserialize)]
struct EmbeddingDatum {
    index: usize,
    embedding: Vec<f64>,
}

/// One embeddings request for a batch of texts, results in input order.
pub fn embed_once(
    endpoint: &RemoteEndpoint,
    texts: &[String],
) -> Result<Vec<Vec<f64>>, RemoteFailure> {
    let body = json!({ "model": endpoint.model, "input": texts });
    let raw = endpoint.post_json(body)?;
    parse_embedding_response(&raw, texts.len()).map_err(RemoteFailure::Fatal)
}

pub(super) fn parse_embedding_response(
    raw: &str,
    expected: usize,
) -> Result<Vec<Vec<f64>>, EmbedError> {
    let parsed: EmbeddingResponse = serde_json::from_str(raw)
        .map_err(|e| EmbedError::MalformedResponse(format!("invalid JSON: {e}")))?;
    if parsed.data.len() != expected {
        return Err(EmbedError::MalformedResponse(format!(
            "expected {expected} embeddings, got {}",
            parsed.data.len()
        )));
    }
    let mut out: Vec<Option<Vec<f64>>> = vec![None; expected];
    for datum in parsed.data {
        let slot = out.get_mut(datum.index).ok_or_else(|| {
            EmbedError::MalformedResponse(format!("embedding index {} out of range", datum.index))
        })?;
        if slot.is_some() {
            return Err(EmbedError::MalformedResponse(format!(
                "duplicate embedding index {}",
                datum.index
            )));
        }
        *slot = Some(datum.embedding);
    }
    Ok(out.into_iter().map(|v| v.unwrap()).collect())
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatMessage,
}

#[derive(Deserialize)]
struct ChatMessage {
    content: String,
}

/// One chat-completion request; returns the first choice's content.
pub fn chat_once(endpoint: &RemoteEndpoint, prompt: &str) -> Result<String, RemoteFailure> {
    let body = json!({
        "model": endpoint.model,
        "messages": [{ "role": "user", "content": prompt }],
    });
    let raw = endpoint.post_json(body)?;
    parse_chat_response(&raw).map_err(RemoteFailure::Fatal)
}

pub(super) fn parse_chat_response(raw: &str) -> Result<String, EmbedError> {
    let parsed: ChatResponse = serde_json::from_str(raw)
        .map_err(|e| EmbedError::MalformedResponse(format!("invalid JSON: {e}")))?;
    parsed
        .choices
        .into_iter()
        .next()
        .map(|c| c.message.content)
        .ok_or_else(|| EmbedError::MalformedResponse("no choices in response".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_embedding_response_in_index_order() {
        let raw =
            r#"{"data":[{"index":1,"embedding":[0.5,0.5]},{"index":0,"embedding":[1.0,0.0]}]}"#;
        let vecs = parse_embedding_response(raw, 2).unwrap();
        assert_eq!(vecs[0], vec![1.0, 0.0]);
        assert_eq!(vecs[1], vec![0.5, 0.5]);
    }

    #[test]
    fn rejects_wrong_count_and_bad_indices() {
        let raw = r#"{"data":[{"index":0,"embedding":[1.0]}]}"#;
        assert!(matches!(
            parse_embedding_response(raw, 2),
            Err(EmbedError::MalformedResponse(_))
        ));
        let raw = r#"{"data":[{"index":5,"embedding":[1.0]}]}"#;
        assert!(matches!(
            parse_embedding_response(raw, 1),
            Err(EmbedError::MalformedResponse(_))
        ));
        let raw = r#"{"data":[{"index":0,"embedding":[1.0]},{"index":0,"embedding":[2.0]}]}"#;
        assert!(matches!(
            parse_embedding_response(raw, 2),
            Err(EmbedError::MalformedResponse(_))
        ));
    }

    #[test]
    fn parses_chat_content() {
        let raw = r#"{"choices":[{"message":{"content":"1. a\n2. b"}}]}"#;
        assert_eq!(parse_chat_response(raw).unwrap(), "1. a\n2. b");
    }

    #[test]
    fn chat_without_choices_is_malformed() {
        assert!(matches!(
            parse_chat_response(r#"{"choices":[]}"#),
            Err(EmbedError::MalformedResponse(_))
        ));
    }
}
