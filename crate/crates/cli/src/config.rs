//! TOML configuration file and argument parsing helpers.

use std::path::Path;

use serde::Deserialize;

use screenmark::channel::ChannelConfig;
use screenmark::codec::EmbedConfig;
use screenmark::locate::LocateParams;
use screenmark::BitString;

use crate::CliError;

/// Contents of `--config`. Each section mirrors the library type's field
/// names; missing fields keep their defaults.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub channel: ChannelConfig,
    pub embed: EmbedConfig,
    pub locate: LocateParams,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }
}

/// 64-bit key as 1 to 16 hex digits, with an optional `0x` prefix.
pub fn parse_key(s: &str) -> Result<u64, String> {
    let t = s.trim();
    let t = t.strip_prefix("0x").unwrap_or(t);
    if t.is_empty() || t.len() > 16 {
        return Err(format!("key must be 1 to 16 hex digits, got {s:?}"));
    }
    u64::from_str_radix(t, 16).map_err(|e| format!("bad key {s:?}: {e}"))
}

/// Payload from a 32-hex-digit string or a file of `0`/`1` characters.
pub fn load_payload(hex: Option<&str>, file: Option<&Path>) -> Result<BitString, CliError> {
    match (hex, file) {
        (Some(h), None) => Ok(BitString::from_hex(h)?),
        (None, Some(f)) => {
            let text = std::fs::read_to_string(f).map_err(|e| CliError::Input(format!("{}: {e}", f.display())))?;
            Ok(BitString::parse_bits(&text)?)
        }
        _ => Err(CliError::Usage("give exactly one of --payload or --payload-file".into())),
    }
}
