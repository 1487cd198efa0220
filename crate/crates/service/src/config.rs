use std::net::SocketAddr;
use std::path::PathBuf;

use glyphplan_core::planner::BackendConfig;
use glyphplan_core::Canvas;
use thiserror::Error;

pub const DEFAULT_CAPACITY: usize = 1024;
pub const DEFAULT_BODY_LIMIT: usize = 2 * 1024 * 1024;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServiceConfig {
    pub bind: SocketAddr,
    pub backend: Option<BackendConfig>,
    pub capacity: usize,
    pub body_limit: usize,
    pub snapshot: Option<PathBuf>,
    pub ui_dir: Option<PathBuf>,
    pub canvas: Canvas,
    pub angle_tokens: bool,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            bind: SocketAddr::from(([127, 0, 0, 1], 8080)),
            backend: None,
            capacity: DEFAULT_CAPACITY,
            body_limit: DEFAULT_BODY_LIMIT,
            snapshot: None,
            ui_dir: None,
            canvas: Canvas::default(),
            angle_tokens: true,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("session capacity must be positive")]
    ZeroCapacity,
    #[error("request body limit must be positive")]
    ZeroBodyLimit,
    #[error("backend: {0}")]
    Backend(String),
}

impl ServiceConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.capacity == 0 {
            return Err(ConfigError::ZeroCapacity);
        }
        if self.body_limit == 0 {
            return Err(ConfigError::ZeroBodyLimit);
        }
        if let Some(b) = &self.backend {
            b.validate().map_err(|e| ConfigError::Backend(e.to_string()))?;
        }
        Ok(())
    }
}
