use std::net::SocketAddr;
use std::path::PathBuf;
use std::time::Duration;

use anyhow::{bail, Context};
use woz_core::{ErrorWeights, SessionMode};

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub http_bind: SocketAddr,
    pub prototype_bind: SocketAddr,
    pub data_dir: PathBuf,
    pub default_mode: SessionMode,
    pub default_weights: ErrorWeights,
    /// Upper bound on a single frame write to a prototype client.
    pub write_timeout: Duration,
}

impl ServiceConfig {
    pub fn new(http_bind: SocketAddr, prototype_bind: SocketAddr, data_dir: impl Into<PathBuf>) -> Self {
        Self {
            http_bind,
            prototype_bind,
            data_dir: data_dir.into(),
            default_mode: SessionMode::Manual,
            default_weights: ErrorWeights::uniform(),
            write_timeout: Duration::from_millis(500),
        }
    }

    /// Checks the bind addresses differ and that the data directory can be
    /// created and written.
    pub fn validate(&self) -> anyhow::Result<()> {
        if self.http_bind == self.prototype_bind && self.http_bind.port() != 0 {
            bail!("HTTP and prototype bind addresses must differ ({})", self.http_bind);
        }
        for dir in [self.repository_dir(), self.log_dir()] {
            std::fs::create_dir_all(&dir).with_context(|| format!("creating data directory {}", dir.display()))?;
        }
        let probe = self.data_dir.join(".write-probe");
        std::fs::write(&probe, b"ok")
            .with_context(|| format!("data directory {} is not writable", self.data_dir.display()))?;
        std::fs::remove_file(&probe).ok();
        Ok(())
    }

    pub fn repository_dir(&self) -> PathBuf {
        self.data_dir.join("repositories")
    }

    pub fn log_dir(&self) -> PathBuf {
        self.data_dir.join("logs")
    }
}

/// Parses `seg,sim,wild,norec` weights, e.g. `1,1,1,1`.
pub fn parse_weights(s: &str) -> Result<ErrorWeights, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| format!("invalid weight `{p}`")))
        .collect::<Result<_, _>>()?;
    let [segmentation, similarity, wild, no_recognition] = parts[..] else {
        return Err(format!("expected four comma-separated weights, got `{s}`"));
    };
    if parts.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err("weights must be finite and non-negative".into());
    }
    Ok(ErrorWeights {
        segmentation,
        similarity,
        wild,
        no_recognition,
    })
}
