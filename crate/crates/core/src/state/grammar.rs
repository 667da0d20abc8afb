//! Text form of input states used on the command line and in configs:
//!
//! ```text
//! fock:1,1,1                  product of Fock states
//! sp:3x3                      3 photons in one of 3 modes, equal amplitudes
//! coh:1.0+0.5i,-0.2           product of coherent states
//! thermal:2,2                 product of thermal states (mean photon numbers)
//! sqvac:r=1.1462@theta=0,...  product of squeezed vacua (theta optional)
//! ```

use std::str::FromStr;

use thiserror::Error;

use super::{InputState, Squeezing, StateError};
use crate::C64;

/// Parse failure pointing at the offending token (byte offset into the input).
#[derive(Debug, Error, Clone, PartialEq)]
#[error("invalid state spec at position {position}: `{token}`: {reason}")]
pub struct StateParseError {
    pub position: usize,
    pub token: String,
    pub reason: String,
}

impl StateParseError {
    fn new(position: usize, token: &str, reason: impl Into<String>) -> Self {
        Self { position, token: token.to_string(), reason: reason.into() }
    }
}

impl FromStr for InputState {
    type Err = StateParseError;

    fn from_str(spec: &str) -> Result<Self, Self::Err> {
        let Some((family, body)) = spec.split_once(':') else {
            return Err(StateParseError::new(0, spec, "expected `<family>:<parameters>`"));
        };
        let offset = family.len() + 1;
        let items = tokens(body, offset);
        if items.iter().any(|(_, t)| t.is_empty()) || items.is_empty() {
            let pos = items.iter().find(|(_, t)| t.is_empty()).map_or(offset, |(p, _)| *p);
            return Err(StateParseError::new(pos, body, "empty parameter"));
        }
        let state = match family.trim() {
            "fock" => InputState::FockProduct(parse_each(&items, |t| {
                t.parse::<u32>().map_err(|_| "expected a non-negative integer photon number".into())
            })?),
            "sp" => {
                let [(pos, token)] = items.as_slice() else {
                    return Err(StateParseError::new(offset, body, "expected a single `<modes>x<photons>`"));
                };
                let err = || StateParseError::new(*pos, token, "expected `<modes>x<photons>` with positive integers");
                let (k, n) = token.split_once('x').ok_or_else(err)?;
                let k: usize = k.trim().parse().map_err(|_| err())?;
                let n: u32 = n.trim().parse().map_err(|_| err())?;
                if k == 0 || n == 0 {
                    return Err(err());
                }
                InputState::sp(k, n)
            }
            "coh" => InputState::CoherentProduct(parse_each(&items, parse_complex)?),
            "thermal" => InputState::ThermalProduct(parse_each(&items, |t| {
                t.parse::<f64>().map_err(|_| "expected a real mean photon number".into())
            })?),
            "sqvac" => InputState::SqueezedVacuumProduct(parse_each(&items, parse_squeezing)?),
            other => {
                return Err(StateParseError::new(
                    0,
                    other,
                    "unknown state family (expected fock, sp, coh, thermal or sqvac)",
                ))
            }
        };
        state.validate().map_err(|e| match e {
            StateError::InvalidParameter { mode, reason } => {
                let (pos, token) = &items[mode.min(items.len() - 1)];
                StateParseError::new(*pos, token, reason)
            }
            other => StateParseError::new(offset, body, other.to_string()),
        })?;
        Ok(state)
    }
}

/// Comma-separated tokens with their byte offsets.
fn tokens(body: &str, offset: usize) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = 0;
    for piece in body.split(',') {
        let lead = piece.len() - piece.trim_start().len();
        out.push((offset + start + lead, piece.trim()));
        start += piece.len() + 1;
    }
    out
}

fn parse_each<T>(
    items: &[(usize, &str)],
    parse: impl Fn(&str) -> Result<T, String>,
) -> Result<Vec<T>, StateParseError> {
    items.iter().map(|&(pos, token)| parse(token).map_err(|reason| StateParseError::new(pos, token, reason))).collect()
}

/// `a`, `bi`, `a+bi`, `a-bi`, `i`, `-i`.
fn parse_complex(token: &str) -> Result<C64, String> {
    let bad = || "expected a complex number like `1.0+0.5i`".to_string();
    let Some(body) = token.strip_suffix('i') else {
        return token.parse::<f64>().map(|re| C64::new(re, 0.0)).map_err(|_| bad());
    };
    let bytes = body.as_bytes();
    let split =
        (1..bytes.len()).rev().find(|&i| matches!(bytes[i], b'+' | b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    let imag = |s: &str| -> Result<f64, String> {
        match s {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => s.parse::<f64>().map_err(|_| bad()),
        }
    };
    match split {
        Some(i) => {
            let re = body[..i].parse::<f64>().map_err(|_| bad())?;
            Ok(C64::new(re, imag(&body[i..])?))
        }
        None => Ok(C64::new(0.0, imag(body)?)),
    }
}

/// `r=<r>[@theta=<θ>]` or `nbar=<n̄>[@theta=<θ>]`.
fn parse_squeezing(token: &str) -> Result<Squeezing, String> {
    let mut r = None;
    let mut theta = 0.0;
    for part in token.split('@') {
        let (key, value) = part.split_once('=').ok_or_else(|| format!("expected `key=value`, got `{part}`"))?;
        let value: f64 = value.trim().parse().map_err(|_| format!("`{key}` needs a real value"))?;
        match key.trim() {
            "r" => r = Some(value),
            "nbar" => {
                if !(value >= 0.0) {
                    return Err("nbar must be non-negative".into());
                }
                r = Some(value.sqrt().asinh());
            }
            "theta" => theta = value,
            other => return Err(format!("unknown squeezing key `{other}`")),
        }
    }
    let r = r.ok_or("missing `r=` (or `nbar=`)")?;
    Ok(Squeezing::new(r, theta))
}

pub(super) fn format_complex(z: C64) -> String {
    if z.im == 0.0 {
        z.re.to_string()
    } else if z.im < 0.0 {
        format!("{}{}i", z.re, z.im)
    } else {
        format!("{}+{}i", z.re, z.im)
    }
}
