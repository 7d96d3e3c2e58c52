use std::io::SeekFrom;
use std::path::Path;

use axum::body::Body;
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use tokio::io::{AsyncReadExt, AsyncSeekExt};
use tokio_util::io::ReaderStream;

use crate::ApiError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum RangeRequest {
    /// No usable Range header: serve the whole file.
    Full,
    /// Inclusive byte range.
    Partial(u64, u64),
    Unsatisfiable,
}

/// Interprets a `Range` header against a file of `size` bytes. Headers in
/// other units or that fail to parse are ignored; multiple ranges are
/// rejected.
pub(crate) fn parse_range(value: Option<&str>, size: u64) -> RangeRequest {
    let Some(spec) = value.and_then(|v| v.trim().strip_prefix("bytes=")) else {
        return RangeRequest::Full;
    };
    if spec.contains(',') {
        return RangeRequest::Unsatisfiable;
    }
    let Some((a, b)) = spec.trim().split_once('-') else {
        return RangeRequest::Full;
    };
    let (a, b) = (a.trim(), b.trim());
    let parse = |s: &str| s.parse::<u64>().ok();
    match (a.is_empty(), b.is_empty()) {
        (true, true) => RangeRequest::Full,
        (true, false) => match parse(b) {
            None => RangeRequest::Full,
            Some(0) => RangeRequest::Unsatisfiable,
            Some(_) if size == 0 => RangeRequest::Unsatisfiable,
            Some(n) => RangeRequest::Partial(size.saturating_sub(n), size - 1),
        },
        (false, _) => {
            let Some(start) = parse(a) else { return RangeRequest::Full };
            let end = if b.is_empty() {
                Some(u64::MAX)
            } else {
                match parse(b) {
                    Some(e) if e >= start => Some(e),
                    Some(_) => return RangeRequest::Full,
                    None => return RangeRequest::Full,
                }
            };
            if start >= size {
                return RangeRequest::Unsatisfiable;
            }
            RangeRequest::Partial(start, end.unwrap_or(u64::MAX).min(size - 1))
        }
    }
}

fn content_type(path: &Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()).as_deref() {
        Some("wav") => "audio/wav",
        Some("mp3") => "audio/mpeg",
        Some("mp4") | Some("m4v") => "video/mp4",
        Some("webm") => "video/webm",
        Some("ogg") | Some("ogv") => "video/ogg",
        _ => "application/octet-stream",
    }
}

fn io_error(e: std::io::Error) -> ApiError {
    ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, format!("media read failed: {e}"))
}

pub(crate) async fn serve_file(path: &Path, range: Option<&HeaderValue>) -> Result<Response, ApiError> {
    let mut file = match tokio::fs::File::open(path).await {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Err(ApiError::new(StatusCode::NOT_FOUND, "media file is missing")),
        Err(e) => return Err(io_error(e)),
    };
    let size = file.metadata().await.map_err(io_error)?.len();
    let ctype = content_type(path);
    let request = parse_range(range.and_then(|v| v.to_str().ok()), size);
    let response = match request {
        RangeRequest::Full => (
            StatusCode::OK,
            [
                (header::CONTENT_TYPE, ctype.to_string()),
                (header::ACCEPT_RANGES, "bytes".to_string()),
                (header::CONTENT_LENGTH, size.to_string()),
            ],
            Body::from_stream(ReaderStream::new(file)),
        )
            .into_response(),
        RangeRequest::Partial(start, end) => {
            file.seek(SeekFrom::Start(start)).await.map_err(io_error)?;
            let len = end - start + 1;
            (
                StatusCode::PARTIAL_CONTENT,
                [
                    (header::CONTENT_TYPE, ctype.to_string()),
                    (header::ACCEPT_RANGES, "bytes".to_string()),
                    (header::CONTENT_LENGTH, len.to_string()),
                    (header::CONTENT_RANGE, format!("bytes {start}-{end}/{size}")),
                ],
                Body::from_stream(ReaderStream::new(file.take(len))),
            )
                .into_response()
        }
        RangeRequest::Unsatisfiable => {
            let mut resp = ApiError::new(StatusCode::RANGE_NOT_SATISFIABLE, "requested range not satisfiable").into_response();
            let headers = resp.headers_mut();
            headers.insert(header::CONTENT_RANGE, HeaderValue::from_str(&format!("bytes */{size}")).expect("ascii header"));
            headers.insert(header::ACCEPT_RANGES, HeaderValue::from_static("bytes"));
            resp
        }
    };
    Ok(response)
}
