//! Resolved run settings: flags, then environment, then config file.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use rec_core::gateway::{Gateway, HttpConfig, HttpGateway, MockGateway, API_KEY_ENV};
use rec_core::prompt::{PromptBuilder, TemplateSet};
use rec_core::render::OutputFormat;
use rec_core::verify::MatchPolicy;

use crate::args::GlobalArgs;
use crate::error::{CliError, CliResult};

/// Keys accepted in the `--config` file. The credential is never read from
/// it; it only comes from the environment.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    backend: Option<String>,
    seed: Option<u64>,
    policy: Option<String>,
    format: Option<String>,
    template_dir: Option<PathBuf>,
    base_url: Option<String>,
    model_name: Option<String>,
    timeout_ms: Option<u64>,
    max_retries: Option<u32>,
    parallelism: Option<usize>,
    audit_log: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Backend {
    Http,
    Mock(String),
}

#[derive(Debug, Clone)]
pub struct Settings {
    pub backend: Backend,
    pub seed: Option<u64>,
    pub policy: MatchPolicy,
    pub format: OutputFormat,
    pub template_dir: Option<PathBuf>,
    pub parallelism: usize,
    pub http: HttpConfig,
    base_url_set: bool,
}

fn read_config(path: &Path) -> CliResult<FileConfig> {
    let raw = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))?;
    serde_json::from_str(&raw).map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))
}

impl Settings {
    pub fn resolve(flags: &GlobalArgs) -> CliResult<Settings> {
        let file = match &flags.config {
            Some(p) => read_config(p)?,
            None => FileConfig::default(),
        };
        let backend = match flags.backend.clone().or(file.backend).as_deref() {
            None | Some("http") => Backend::Http,
            Some(s) => match s.strip_prefix("mock:") {
                Some(spec) if !spec.is_empty() => Backend::Mock(spec.to_string()),
                _ => return Err(CliError::usage(format!("unknown backend `{s}` (expected http or mock:SCRIPT)"))),
            },
        };
        let policy = match flags.policy.clone().or(file.policy) {
            Some(p) => p.parse().map_err(CliError::usage)?,
            None => MatchPolicy::default(),
        };
        let format = match flags.format.clone().or(file.format) {
            Some(f) => f.parse().map_err(CliError::usage)?,
            None => OutputFormat::default(),
        };
        let parallelism = flags.parallelism.or(file.parallelism).unwrap_or(4);
        if parallelism == 0 {
            return Err(CliError::usage("parallelism must be at least 1"));
        }
        let defaults = HttpConfig::default();
        let base_url = flags.base_url.clone().or(file.base_url);
        let http = HttpConfig {
            base_url: base_url.clone().unwrap_or(defaults.base_url),
            model_name: flags.model_name.clone().or(file.model_name).unwrap_or(defaults.model_name),
            api_key: std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty()),
            timeout_ms: flags.timeout_ms.or(file.timeout_ms).unwrap_or(defaults.timeout_ms),
            max_retries: flags.max_retries.or(file.max_retries).unwrap_or(defaults.max_retries),
            backoff_ms: defaults.backoff_ms,
            audit_log: flags.audit_log.clone().or(file.audit_log),
        };
        Ok(Settings {
            backend,
            seed: flags.seed.or(file.seed),
            policy,
            format,
            template_dir: flags.template_dir.clone().or(file.template_dir),
            parallelism,
            http,
            base_url_set: base_url.is_some(),
        })
    }

    pub fn gateway(&self) -> CliResult<Box<dyn Gateway>> {
        match &self.backend {
            Backend::Mock(spec) => Ok(Box::new(
                MockGateway::from_spec(spec, self.seed.unwrap_or(0)).map_err(CliError::usage)?,
            )),
            Backend::Http => {
                if !self.base_url_set {
                    return Err(CliError::usage(
                        "the http backend needs --base-url (or REC_BASE_URL / base_url in the config file)",
                    ));
                }
                let g = HttpGateway::new(self.http.clone())
                    .map_err(|e| CliError::usage(format!("audit log: {e}")))?;
                Ok(Box::new(g))
            }
        }
    }

    pub fn prompt_builder(&self) -> CliResult<PromptBuilder> {
        let templates = match &self.template_dir {
            Some(dir) => TemplateSet::with_overrides(dir).map_err(CliError::usage)?,
            None => TemplateSet::default(),
        };
        Ok(PromptBuilder::new(templates))
    }
}
