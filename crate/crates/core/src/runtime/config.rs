use std::path::Path;
use std::time::Duration;

use super::{PartyId, DEFAULT_TIMEOUT};
use crate::error::{Error, Result};

/// Network configuration in `key = value` form:
///
/// ```text
/// # three parties on one host
/// party0 = 127.0.0.1:7000
/// party1 = 127.0.0.1:7001
/// party2 = 127.0.0.1:7002
/// seed = 42
/// timeout_ms = 30000
/// ```
///
/// `id` is optional and names the local party.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NetConfig {
    pub parties: [String; 3],
    pub id: Option<PartyId>,
    pub seed: u64,
    pub timeout: Duration,
}

impl NetConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut parties: [Option<String>; 3] = Default::default();
        let mut id = None;
        let mut seed = 0u64;
        let mut timeout = DEFAULT_TIMEOUT;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |what: &str| Error::Config(format!("line {}: invalid {what} {value:?}", lineno + 1));
            match key {
                "party0" | "party1" | "party2" => {
                    let i = (key.as_bytes()[5] - b'0') as usize;
                    parties[i] = Some(value.to_string());
                }
                "id" => id = Some(PartyId::new(value.parse().map_err(|_| bad("id"))?).map_err(|_| bad("id"))?),
                "seed" => seed = value.parse().map_err(|_| bad("seed"))?,
                "timeout_ms" => timeout = Duration::from_millis(value.parse().map_err(|_| bad("timeout_ms"))?),
                other => return Err(Error::Config(format!("line {}: unknown key {other:?}", lineno + 1))),
            }
        }
        let mut addrs: [String; 3] = Default::default();
        for (i, p) in parties.into_iter().enumerate() {
            addrs[i] = p.ok_or_else(|| Error::Config(format!("missing party{i}")))?;
        }
        Ok(NetConfig {
            parties: addrs,
            id,
            seed,
            timeout,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }
}
