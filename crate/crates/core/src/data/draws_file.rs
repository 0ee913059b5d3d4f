//! Draws persistence.
//!
//! The text form is long-format CSV with a commented preamble and footer:
//!
//! ```text
//! # ordbridge-draws 1
//! # attr seed=7
//! # names alpha_m[1],alpha_m[2],beta_m[1]
//! # chains=4 retained=1000
//! chain,iter,name,value
//! 1,1,alpha_m[1],-0.2875
//! ...
//! 1,1,__divergent,0
//! ...
//! # end rows=40000
//! ```
//!
//! Chains and iterations are 1-based. Sampler statistics use the reserved
//! `__` names. Values are written in shortest round-trip form, so a reload
//! is bit-exact. The footer guards against truncation.
//!
//! The binary form is `OBDRAWS\x01`, a little-endian `u64` header length, a
//! JSON header, the values and statistics as little-endian `f64` (chain-major)
//! and the trailer `OBEND`.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::write_atomic;
use crate::error::{Error, Result};
use crate::hmc::{DrawsStore, IterStats, STAT_NAMES};

const TEXT_MAGIC: &str = "# ordbridge-draws 1";
const BINARY_MAGIC: &[u8; 8] = b"OBDRAWS\x01";
const BINARY_TRAILER: &[u8; 5] = b"OBEND";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DrawsFormat {
    Text,
    Binary,
}

impl DrawsFormat {
    /// `.bin` selects the binary form, anything else the text form.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("bin") => DrawsFormat::Binary,
            _ => DrawsFormat::Text,
        }
    }
}

fn bad(msg: impl Into<String>) -> Error {
    Error::DrawsFormat(msg.into())
}

fn check_savable(store: &DrawsStore) -> Result<()> {
    for n in store.names() {
        if n.starts_with("__") || n.is_empty() || n.contains([',', '\n', '\r', '"']) {
            return Err(bad(format!("parameter name `{n}` cannot be stored")));
        }
    }
    for (k, v) in &store.attrs {
        if k.is_empty() || k.contains(['=', '\n', '\r']) || v.contains(['\n', '\r']) {
            return Err(bad(format!("attribute `{k}` cannot be stored")));
        }
    }
    Ok(())
}

pub fn to_text(store: &DrawsStore) -> Result<String> {
    check_savable(store)?;
    let mut s = String::new();
    s.push_str(TEXT_MAGIC);
    s.push('\n');
    for (k, v) in &store.attrs {
        let _ = writeln!(s, "# attr {k}={v}");
    }
    let _ = writeln!(s, "# names {}", store.names().join(","));
    let _ = writeln!(s, "# chains={} retained={}", store.n_chains(), store.n_retained());
    s.push_str("chain,iter,name,value\n");
    let mut rows = 0usize;
    for c in 0..store.n_chains() {
        for i in 0..store.n_retained() {
            for (name, v) in store.names().iter().zip(store.draw(c, i)) {
                let _ = writeln!(s, "{},{},{name},{v:?}", c + 1, i + 1);
            }
            for (name, v) in STAT_NAMES.iter().zip(store.stats(c, i).values()) {
                let _ = writeln!(s, "{},{},{name},{v:?}", c + 1, i + 1);
            }
            rows += store.names().len() + STAT_NAMES.len();
        }
    }
    let _ = writeln!(s, "# end rows={rows}");
    Ok(s)
}

pub fn from_text(text: &str) -> Result<DrawsStore> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r')));
    match lines.next() {
        Some((_, l)) if l == TEXT_MAGIC => {}
        Some((_, l)) if l.starts_with("# ordbridge-draws ") => {
            return Err(bad(format!("unsupported draws file version `{}`", &l[18..])));
        }
        _ => return Err(bad("missing `# ordbridge-draws` header")),
    }
    let mut attrs = BTreeMap::new();
    let mut names: Option<Vec<String>> = None;
    let mut shape: Option<(usize, usize)> = None;
    for (ln, line) in lines.by_ref() {
        if let Some(kv) = line.strip_prefix("# attr ") {
            let (k, v) = kv.split_once('=').ok_or_else(|| bad(format!("line {ln}: malformed attribute")))?;
            attrs.insert(k.to_owned(), v.to_owned());
        } else if let Some(ns) = line.strip_prefix("# names") {
            let ns = ns.trim();
            names = Some(if ns.is_empty() { Vec::new() } else { ns.split(',').map(str::to_owned).collect() });
        } else if let Some(sh) = line.strip_prefix("# chains=") {
            let (c, r) = sh
                .split_once(" retained=")
                .and_then(|(c, r)| Some((c.parse().ok()?, r.parse().ok()?)))
                .ok_or_else(|| bad(format!("line {ln}: malformed shape line")))?;
            shape = Some((c, r));
        } else if line == "chain,iter,name,value" {
            break;
        } else {
            return Err(bad(format!("line {ln}: unexpected preamble line `{line}`")));
        }
    }
    let names = names.ok_or_else(|| bad("missing `# names` line"))?;
    let (n_chains, n_retained) = shape.ok_or_else(|| bad("missing `# chains=` line"))?;
    let width = names.len() + STAT_NAMES.len();
    let slot: HashMap<&str, usize> = names
        .iter()
        .map(String::as_str)
        .chain(STAT_NAMES.iter().copied())
        .enumerate()
        .map(|(k, n)| (n, k))
        .collect();
    if slot.len() != width {
        return Err(bad("duplicate parameter name"));
    }
    let total = n_chains
        .checked_mul(n_retained)
        .and_then(|n| n.checked_mul(width))
        .ok_or_else(|| bad("shape overflows"))?;
    let mut cells = vec![f64::NAN; total];
    let mut filled = vec![false; total];
    let mut n_rows = 0usize;
    let mut footer = None;
    for (ln, line) in lines.by_ref() {
        if let Some(n) = line.strip_prefix("# end rows=") {
            footer = Some(n.parse::<usize>().map_err(|_| bad(format!("line {ln}: malformed footer")))?);
            break;
        }
        let err = |m: &str| bad(format!("line {ln}: {m}"));
        let mut parts = line.splitn(4, ',');
        let mut field = || parts.next().ok_or_else(|| err("expected 4 fields"));
        let c: usize = field()?.parse().map_err(|_| err("bad chain"))?;
        let i: usize = field()?.parse().map_err(|_| err("bad iteration"))?;
        let name = field()?;
        let value: f64 = field()?.parse().map_err(|_| err("bad value"))?;
        if c == 0 || c > n_chains || i == 0 || i > n_retained {
            return Err(err("chain or iteration out of range"));
        }
        let k = *slot.get(name).ok_or_else(|| err(&format!("unknown name `{name}`")))?;
        let at = ((c - 1) * n_retained + (i - 1)) * width + k;
        if std::mem::replace(&mut filled[at], true) {
            return Err(err("duplicate cell"));
        }
        cells[at] = value;
        n_rows += 1;
    }
    let footer = footer.ok_or_else(|| bad("truncated draws file (no end marker)"))?;
    if let Some((ln, _)) = lines.find(|(_, l)| !l.trim().is_empty()) {
        return Err(bad(format!("line {ln}: content after end marker")));
    }
    if footer != n_rows || n_rows != total {
        return Err(bad(format!("expected {total} rows, found {n_rows} (footer says {footer})")));
    }
    assemble(names, n_chains, n_retained, &cells, attrs)
}

fn assemble(
    names: Vec<String>,
    n_chains: usize,
    n_retained: usize,
    cells: &[f64],
    attrs: BTreeMap<String, String>,
) -> Result<DrawsStore> {
    let p = names.len();
    let width = p + STAT_NAMES.len();
    let mut values = Vec::with_capacity(n_chains * n_retained * p);
    let mut stats = Vec::with_capacity(n_chains * n_retained);
    for row in cells.chunks_exact(width.max(1)).take(n_chains * n_retained) {
        values.extend_from_slice(&row[..p]);
        let mut s = [0.0; 7];
        s.copy_from_slice(&row[p..]);
        stats.push(IterStats::from_values(s));
    }
    let mut store = DrawsStore::new(names, n_chains, n_retained, values, stats)?;
    store.attrs = attrs;
    Ok(store)
}

#[derive(Serialize, Deserialize)]
struct BinaryHeader {
    names: Vec<String>,
    n_chains: usize,
    n_retained: usize,
    attrs: BTreeMap<String, String>,
}

pub fn to_binary(store: &DrawsStore) -> Result<Vec<u8>> {
    check_savable(store)?;
    let header = serde_json::to_vec(&BinaryHeader {
        names: store.names().to_vec(),
        n_chains: store.n_chains(),
        n_retained: store.n_retained(),
        attrs: store.attrs.clone(),
    })?;
    let width = store.names().len() + STAT_NAMES.len();
    let mut out = Vec::with_capacity(16 + header.len() + 8 * width * store.n_draws());
    out.extend_from_slice(BINARY_MAGIC);
    out.extend_from_slice(&(header.len() as u64).to_le_bytes());
    out.extend_from_slice(&header);
    for c in 0..store.n_chains() {
        for i in 0..store.n_retained() {
            for v in store.draw(c, i).iter().chain(&store.stats(c, i).values()) {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    out.extend_from_slice(BINARY_TRAILER);
    Ok(out)
}

pub fn from_binary(bytes: &[u8]) -> Result<DrawsStore> {
    if bytes.len() < 8 || &bytes[..7] != &BINARY_MAGIC[..7] {
        return Err(bad("not a binary draws file"));
    }
    if bytes[7] != BINARY_MAGIC[7] {
        return Err(bad(format!("unsupported binary draws version {}", bytes[7])));
    }
    let len_bytes: [u8; 8] = bytes
        .get(8..16)
        .and_then(|b| b.try_into().ok())
        .ok_or_else(|| bad("truncated binary header"))?;
    let hlen = usize::try_from(u64::from_le_bytes(len_bytes)).map_err(|_| bad("header too large"))?;
    let body_start = 16usize.checked_add(hlen).ok_or_else(|| bad("header too large"))?;
    let header: BinaryHeader =
        serde_json::from_slice(bytes.get(16..body_start).ok_or_else(|| bad("truncated binary header"))?)?;
    let width = header.names.len() + STAT_NAMES.len();
    let n = header
        .n_chains
        .checked_mul(header.n_retained)
        .and_then(|n| n.checked_mul(width))
        .ok_or_else(|| bad("shape overflows"))?;
    let body_end = n
        .checked_mul(8)
        .and_then(|b| b.checked_add(body_start))
        .ok_or_else(|| bad("shape overflows"))?;
    if bytes.len() != body_end + BINARY_TRAILER.len() || &bytes[body_end..] != BINARY_TRAILER {
        return Err(bad("truncated or corrupt binary draws file"));
    }
    let cells: Vec<f64> = bytes[body_start..body_end]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    assemble(header.names, header.n_chains, header.n_retained, &cells, header.attrs)
}

pub fn save_draws(store: &DrawsStore, path: &Path, format: DrawsFormat) -> Result<()> {
    let bytes = match format {
        DrawsFormat::Text => to_text(store)?.into_bytes(),
        DrawsFormat::Binary => to_binary(store)?,
    };
    write_atomic(path, &bytes)
}

/// Loads either form, detected from the leading bytes.
pub fn load_draws(path: &Path) -> Result<DrawsStore> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(&BINARY_MAGIC[..7]) {
        from_binary(&bytes)
    } else {
        let text = std::str::from_utf8(&bytes).map_err(|_| bad("draws file is neither text nor binary"))?;
        from_text(text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn store(c: usize, r: usize) -> DrawsStore {
        let names: Vec<String> = ["alpha_m[1]", "beta_m[1]", "phi_v", "v[12]"].iter().map(|s| s.to_string()).collect();
        let values: Vec<f64> = (0..c * r * 4)
            .map(|k| (k as f64 * 0.7312).sin() / 3.0 + 1e-17 * k as f64)
            .collect();
        let stats = (0..c * r)
            .map(|k| IterStats::from_values([(k % 2) as f64, 3.0, 0.123456789, 0.81, 7.0, -12.5 + k as f64, -10.0]))
            .collect();
        let mut s = DrawsStore::new(names, c, r, values, stats).unwrap();
        s.attrs.insert("seed".into(), "7".into());
        s.attrs.insert("model".into(), "three".into());
        s
    }

    #[test]
    fn text_round_trip_is_exact() {
        let s = store(2, 5);
        let back = from_text(&to_text(&s).unwrap()).unwrap();
        assert_eq!(back, s);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("draws.csv");
        save_draws(&s, &p, DrawsFormat::Text).unwrap();
        assert_eq!(load_draws(&p).unwrap(), s);
    }

    #[test]
    fn binary_round_trip_is_exact() {
        let s = store(3, 4);
        assert_eq!(from_binary(&to_binary(&s).unwrap()).unwrap(), s);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("draws.bin");
        save_draws(&s, &p, DrawsFormat::from_path(&p)).unwrap();
        assert_eq!(load_draws(&p).unwrap(), s);
    }

    #[test]
    fn empty_store_round_trips() {
        let s = store(2, 0);
        assert_eq!(from_text(&to_text(&s).unwrap()).unwrap(), s);
        assert_eq!(from_binary(&to_binary(&s).unwrap()).unwrap(), s);
    }

    #[test]
    fn truncation_is_detected() {
        let text = to_text(&store(2, 3)).unwrap();
        let cut: String = text.lines().take(20).map(|l| format!("{l}\n")).collect();
        assert!(from_text(&cut).is_err());
        let bytes = to_binary(&store(2, 3)).unwrap();
        assert!(from_binary(&bytes[..bytes.len() - 9]).is_err());
    }

    #[test]
    fn rejects_version_and_garbage() {
        let text = to_text(&store(1, 1)).unwrap().replacen("draws 1", "draws 2", 1);
        assert!(matches!(from_text(&text), Err(Error::DrawsFormat(m)) if m.contains("version")));
        let mut bytes = to_binary(&store(1, 1)).unwrap();
        bytes[7] = 9;
        assert!(matches!(from_binary(&bytes), Err(Error::DrawsFormat(m)) if m.contains("version")));
        assert!(from_text("chain,iter,name,value\n").is_err());
        let dup = to_text(&store(1, 1)).unwrap().replacen("1,1,beta_m[1]", "1,1,alpha_m[1]", 1);
        assert!(from_text(&dup).is_err());
    }

    #[test]
    fn reserved_names_are_refused() {
        let s = DrawsStore::new(vec!["__lp".into()], 1, 0, vec![], vec![]).unwrap();
        assert!(to_text(&s).is_err());
    }
}
