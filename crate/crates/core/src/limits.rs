use std::time::{Duration, Instant};

use crate::error::{Error, Result};

/// Cooperative wall-clock limit checked between units of work.
#[derive(Clone, Copy, Debug, Default)]
pub struct Deadline(Option<Instant>);

impl Deadline {
    pub fn none() -> Self {
        Deadline(None)
    }

    pub fn after(d: Duration) -> Self {
        Deadline(Instant::now().checked_add(d))
    }

    pub fn check(&self) -> Result<()> {
        match self.0 {
            Some(t) if Instant::now() >= t => Err(Error::Timeout),
            _ => Ok(()),
        }
    }
}
