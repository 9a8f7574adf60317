//! Client for the out-of-process renderer speaking line-delimited JSON over
//! stdio.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::PathBuf;
use std::process::{Child, Command, Stdio};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use base64::Engine as _;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value as Json};
use thiserror::Error;

use crate::harness::PixelRenderer;
use crate::spec::{serialize_spec, ChartSpec};
use crate::table::DataTable;

pub const PROTOCOL_VERSION: u64 = 1;
/// Overrides the renderer executable; otherwise `vl-render` is looked up on PATH.
pub const ENV_RENDERER: &str = "VLBENCH_RENDERER";
pub const DEFAULT_RENDERER: &str = "vl-render";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RenderOutput {
    Svg,
    Png,
}

/// The renderer substitutes `data_rows` for the spec's data reference, so it
/// never touches the filesystem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderRequest {
    pub id: String,
    pub spec: String,
    pub data_rows: Vec<Map<String, Json>>,
    pub outputs: Vec<RenderOutput>,
}

impl RenderRequest {
    pub fn new(
        id: impl Into<String>,
        spec: &ChartSpec,
        table: &DataTable,
        outputs: &[RenderOutput],
    ) -> Self {
        Self {
            id: id.into(),
            spec: serialize_spec(spec),
            data_rows: table.to_json_rows(),
            outputs: outputs.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RenderStage {
    Compile,
    Render,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderFailure {
    pub stage: RenderStage,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderResponse {
    pub id: String,
    #[serde(default)]
    pub svg: Option<String>,
    /// Base64-encoded PNG bytes.
    #[serde(default)]
    pub png: Option<String>,
    #[serde(default)]
    pub error: Option<RenderFailure>,
}

impl RenderResponse {
    pub fn png_bytes(&self) -> Option<Result<Vec<u8>, RenderError>> {
        self.png.as_ref().map(|b| {
            base64::engine::general_purpose::STANDARD
                .decode(b)
                .map_err(|e| RenderError::Protocol(format!("png is not base64: {e}")))
        })
    }
}

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("cannot start renderer {program}: {message}")]
    Spawn { program: String, message: String },
    #[error("renderer handshake failed: {0}")]
    Handshake(String),
    #[error("renderer i/o: {0}")]
    Io(String),
    #[error("renderer protocol: {0}")]
    Protocol(String),
    #[error("renderer closed its output with {0} responses outstanding")]
    Closed(usize),
    #[error("{stage:?} failed: {message}")]
    Failed { stage: RenderStage, message: String },
}

#[derive(Deserialize)]
struct Handshake {
    ready: bool,
    protocol: u64,
}

pub struct RendererClient {
    child: Option<Child>,
    input: Option<Box<dyn Write + Send>>,
    output: BufReader<Box<dyn Read + Send>>,
    /// Responses read while waiting for a different id.
    early: HashMap<String, RenderResponse>,
}

impl RendererClient {
    /// Starts the renderer and waits for its handshake line.
    pub fn spawn(program: impl Into<PathBuf>, args: &[String]) -> Result<Self, RenderError> {
        let program = program.into();
        let mut child = Command::new(&program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| RenderError::Spawn {
                program: program.display().to_string(),
                message: e.to_string(),
            })?;
        let input = child.stdin.take().expect("piped stdin");
        let output = child.stdout.take().expect("piped stdout");
        let mut client = Self::from_streams(Box::new(output), Box::new(input));
        client.child = Some(child);
        client.handshake()?;
        Ok(client)
    }

    /// The configured renderer, if one can be started.
    pub fn from_env() -> Result<Self, RenderError> {
        let program = std::env::var(ENV_RENDERER).unwrap_or_else(|_| DEFAULT_RENDERER.to_string());
        Self::spawn(program, &[])
    }

    /// Wraps existing streams; the caller is responsible for the handshake
    /// via [`RendererClient::handshake`].
    pub fn from_streams(output: Box<dyn Read + Send>, input: Box<dyn Write + Send>) -> Self {
        Self {
            child: None,
            input: Some(input),
            output: BufReader::new(output),
            early: HashMap::new(),
        }
    }

    pub fn handshake(&mut self) -> Result<(), RenderError> {
        let line = self
            .read_line()?
            .ok_or_else(|| RenderError::Handshake("no handshake line".into()))?;
        let h: Handshake = serde_json::from_str(&line)
            .map_err(|e| RenderError::Handshake(format!("{e}: {}", line.trim())))?;
        if !h.ready || h.protocol != PROTOCOL_VERSION {
            return Err(RenderError::Handshake(format!(
                "ready={} protocol={} (want {PROTOCOL_VERSION})",
                h.ready, h.protocol
            )));
        }
        Ok(())
    }

    fn read_line(&mut self) -> Result<Option<String>, RenderError> {
        let mut line = String::new();
        loop {
            line.clear();
            let n = self
                .output
                .read_line(&mut line)
                .map_err(|e| RenderError::Io(e.to_string()))?;
            if n == 0 {
                return Ok(None);
            }
            if !line.trim().is_empty() {
                return Ok(Some(line));
            }
        }
    }

    fn send(&mut self, request: &RenderRequest) -> Result<(), RenderError> {
        let input = self
            .input
            .as_mut()
            .ok_or_else(|| RenderError::Io("input closed".into()))?;
        let line =
            serde_json::to_string(request).map_err(|e| RenderError::Protocol(e.to_string()))?;
        writeln!(input, "{line}").map_err(|e| RenderError::Io(e.to_string()))?;
        input.flush().map_err(|e| RenderError::Io(e.to_string()))
    }

    fn receive(&mut self, id: &str, outstanding: usize) -> Result<RenderResponse, RenderError> {
        if let Some(r) = self.early.remove(id) {
            return Ok(r);
        }
        loop {
            let line = self.read_line()?.ok_or(RenderError::Closed(outstanding))?;
            let r: RenderResponse = serde_json::from_str(&line)
                .map_err(|e| RenderError::Protocol(format!("{e}: {}", line.trim())))?;
            if r.id == id {
                return Ok(r);
            }
            self.early.insert(r.id.clone(), r);
        }
    }

    pub fn render(&mut self, request: &RenderRequest) -> Result<RenderResponse, RenderError> {
        self.send(request)?;
        self.receive(&request.id, 1)
    }

    /// Writes every request before reading; responses come back in request
    /// order whatever order the renderer answered in.
    pub fn render_batch(
        &mut self,
        requests: &[RenderRequest],
    ) -> Result<Vec<RenderResponse>, RenderError> {
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = requests.iter().find(|r| !seen.insert(r.id.as_str())) {
            return Err(RenderError::Protocol(format!(
                "duplicate request id {}",
                dup.id
            )));
        }
        for r in requests {
            self.send(r)?;
        }
        let mut out = Vec::with_capacity(requests.len());
        for (i, r) in requests.iter().enumerate() {
            out.push(self.receive(&r.id, requests.len() - i)?);
        }
        Ok(out)
    }
}

impl Drop for RendererClient {
    fn drop(&mut self) {
        // Closing input asks the renderer to exit.
        self.input = None;
        if let Some(mut child) = self.child.take() {
            if !matches!(child.try_wait(), Ok(Some(_))) {
                let _ = child.kill();
            }
            let _ = child.wait();
        }
    }
}

/// Shares one renderer process as a [`PixelRenderer`].
pub struct SidecarRenderer {
    client: Mutex<RendererClient>,
    next_id: AtomicU64,
}

impl SidecarRenderer {
    pub fn new(client: RendererClient) -> Self {
        Self {
            client: Mutex::new(client),
            next_id: AtomicU64::new(0),
        }
    }

    fn request(
        &self,
        spec: &ChartSpec,
        table: &DataTable,
        outputs: &[RenderOutput],
    ) -> Result<RenderResponse, RenderError> {
        let id = format!("r{}", self.next_id.fetch_add(1, Ordering::SeqCst));
        let req = RenderRequest::new(id, spec, table, outputs);
        let resp = self
            .client
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .render(&req)?;
        match resp.error {
            Some(f) => Err(RenderError::Failed {
                stage: f.stage,
                message: f.message,
            }),
            None => Ok(resp),
        }
    }

    pub fn render_svg(&self, spec: &ChartSpec, table: &DataTable) -> Result<String, RenderError> {
        self.request(spec, table, &[RenderOutput::Svg])?
            .svg
            .ok_or_else(|| RenderError::Protocol("response has no svg".into()))
    }
}

impl PixelRenderer for SidecarRenderer {
    fn render_png(&self, spec: &ChartSpec, table: &DataTable) -> Result<Vec<u8>, String> {
        let resp = self
            .request(spec, table, &[RenderOutput::Png])
            .map_err(|e| e.to_string())?;
        resp.png_bytes()
            .ok_or_else(|| "response has no png".to_string())?
            .map_err(|e| e.to_string())
    }
}

#[cfg(all(test, unix))]
mod tests {
    use super::*;
    use crate::spec::parse_spec;

    /// A stand-in renderer: answers in batches of `batch` lines, reversed, and
    /// fails compilation for `"mark": "bogus"`.
    fn fake(dir: &std::path::Path, handshake: &str, batch: usize) -> PathBuf {
        let script = format!(
            r#"#!/usr/bin/env python3
import sys, json, base64
print({handshake:?}, flush=True)
held = []
def answer(req):
    spec = json.loads(req["spec"])
    if spec.get("mark") == "bogus":
        return {{"id": req["id"], "error": {{"stage": "compile", "message": "unknown mark"}}}}
    out = {{"id": req["id"]}}
    if "svg" in req["outputs"]:
        out["svg"] = "<svg rows='%d'/>" % len(req["data_rows"])
    if "png" in req["outputs"]:
        out["png"] = base64.b64encode(b"png-bytes").decode()
    return out
for line in sys.stdin:
    held.append(json.loads(line))
    if len(held) == {batch}:
        for req in reversed(held):
            print(json.dumps(answer(req)), flush=True)
        held = []
for req in reversed(held):
    print(json.dumps(answer(req)), flush=True)
"#
        );
        let p = dir.join("fake-render");
        std::fs::write(&p, script).unwrap();
        use std::os::unix::fs::PermissionsExt;
        std::fs::set_permissions(&p, std::fs::Permissions::from_mode(0o755)).unwrap();
        p
    }

    fn case() -> (ChartSpec, DataTable) {
        let spec = parse_spec(include_str!("../exemplars/scatter.spec.json"))
            .spec
            .unwrap();
        let table = DataTable::from_csv_reader("t", "Major\nCS\nCS\nMath\n".as_bytes()).unwrap();
        (spec, table)
    }

    #[test]
    fn pipelined_requests_match_by_id() {
        let dir = tempfile::tempdir().unwrap();
        let mut c =
            RendererClient::spawn(fake(dir.path(), r#"{"ready":true,"protocol":1}"#, 4), &[])
                .unwrap();
        let (spec, table) = case();
        let reqs: Vec<RenderRequest> = (0..20)
            .map(|i| {
                RenderRequest::new(
                    format!("q{i}"),
                    &spec,
                    &table,
                    &[RenderOutput::Svg, RenderOutput::Png],
                )
            })
            .collect();
        let resps = c.render_batch(&reqs).unwrap();
        assert_eq!(resps.len(), 20);
        for (req, resp) in reqs.iter().zip(&resps) {
            assert_eq!(req.id, resp.id);
            assert_eq!(resp.svg.as_deref(), Some("<svg rows='3'/>"));
            assert_eq!(resp.png_bytes().unwrap().unwrap(), b"png-bytes");
        }
    }

    #[test]
    fn compile_errors_are_in_band() {
        let dir = tempfile::tempdir().unwrap();
        let mut c =
            RendererClient::spawn(fake(dir.path(), r#"{"ready":true,"protocol":1}"#, 1), &[])
                .unwrap();
        let mut req = RenderRequest::new("bad", &case().0, &case().1, &[RenderOutput::Svg]);
        req.spec = r#"{"mark": "bogus"}"#.into();
        let resp = c.render(&req).unwrap();
        assert_eq!(resp.error.unwrap().stage, RenderStage::Compile);
        let ok = c
            .render(&RenderRequest::new(
                "good",
                &case().0,
                &case().1,
                &[RenderOutput::Svg],
            ))
            .unwrap();
        assert!(ok.svg.is_some());
    }

    #[test]
    fn wrong_protocol_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let err = RendererClient::spawn(fake(dir.path(), r#"{"ready":true,"protocol":2}"#, 1), &[])
            .err()
            .unwrap();
        assert!(matches!(err, RenderError::Handshake(_)), "{err}");
    }

    #[test]
    fn missing_executable() {
        let err = RendererClient::spawn("/nonexistent/vl-render", &[])
            .err()
            .unwrap();
        assert!(matches!(err, RenderError::Spawn { .. }));
    }

    #[test]
    fn pixel_renderer_adapter() {
        let dir = tempfile::tempdir().unwrap();
        let c = RendererClient::spawn(fake(dir.path(), r#"{"ready":true,"protocol":1}"#, 1), &[])
            .unwrap();
        let r = SidecarRenderer::new(c);
        let (spec, table) = case();
        assert_eq!(r.render_png(&spec, &table).unwrap(), b"png-bytes");
        assert_eq!(r.render_svg(&spec, &table).unwrap(), "<svg rows='3'/>");
    }
}
