//! Text serialization of slotted traces.
//!
//! ```text
//! # edgecache slotted trace v1
//! slot_duration,86400
//! num_slots,1000
//! [files]
//! file_id,original_id,release_slot
//! 0,17,0
//! ...
//! [requests]
//! slot,file_id,count
//! 0,0,3
//! ...
//! ```
//!
//! Each `[requests]` row is a run of `count` consecutive requests to one file;
//! rows appear in arrival order, so per-slot demand is the sum of its rows
//! and request-level policies can replay the exact sequence.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{FileId, SlottedTrace};
use crate::error::{Error, Result};

pub const TRACE_FORMAT_HEADER: &str = "# edgecache slotted trace v1";

pub fn trace_to_string(trace: &SlottedTrace) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{TRACE_FORMAT_HEADER}");
    let _ = writeln!(s, "slot_duration,{}", trace.slot_duration);
    let _ = writeln!(s, "num_slots,{}", trace.num_slots);
    s.push_str("[files]\nfile_id,original_id,release_slot\n");
    for (f, (id, r)) in trace.original_ids.iter().zip(&trace.release).enumerate() {
        let _ = writeln!(s, "{f},{id},{r}");
    }
    s.push_str("[requests]\nslot,file_id,count\n");
    for (t, runs) in trace.runs.iter().enumerate() {
        for (f, n) in runs {
            let _ = writeln!(s, "{t},{f},{n}");
        }
    }
    s
}

pub fn write_trace(trace: &SlottedTrace, path: &Path) -> Result<()> {
    fs::write(path, trace_to_string(trace)).map_err(|e| Error::io(path, e))
}

fn bad(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Input(format!("trace line {}: {msg}", line + 1))
}

fn fields<const N: usize>(line: usize, text: &str) -> Result<[u64; N]> {
    let mut out = [0u64; N];
    let mut parts = text.split(',');
    for slot in out.iter_mut() {
        let p = parts.next().ok_or_else(|| bad(line, "too few columns"))?;
        *slot = p.trim().parse().map_err(|e| bad(line, format!("{p:?}: {e}")))?;
    }
    if parts.next().is_some() {
        return Err(bad(line, "too many columns"));
    }
    Ok(out)
}

fn keyed(line: usize, text: Option<&str>, key: &str) -> Result<u64> {
    let text = text.ok_or_else(|| bad(line, format!("missing {key}")))?;
    let (k, v) = text.split_once(',').ok_or_else(|| bad(line, "expected key,value"))?;
    if k != key {
        return Err(bad(line, format!("expected {key}, found {k}")));
    }
    v.trim().parse().map_err(|e| bad(line, format!("{key}: {e}")))
}

pub fn trace_from_str(text: &str) -> Result<SlottedTrace> {
    let mut lines = text.lines().enumerate();
    let mut next = |expect: Option<&str>| -> Result<(usize, &str)> {
        let (i, l) = lines.next().ok_or_else(|| Error::Input("truncated trace file".into()))?;
        if let Some(e) = expect {
            if l != e {
                return Err(bad(i, format!("expected {e:?}")));
            }
        }
        Ok((i, l))
    };
    next(Some(TRACE_FORMAT_HEADER))?;
    let (i, l) = next(None)?;
    let slot_duration = keyed(i, Some(l), "slot_duration")?;
    let (i, l) = next(None)?;
    let num_slots = keyed(i, Some(l), "num_slots")? as usize;
    next(Some("[files]"))?;
    next(Some("file_id,original_id,release_slot"))?;

    let mut ids = Vec::new();
    let mut release = Vec::new();
    let mut runs: Vec<Vec<(FileId, u32)>> = vec![Vec::new(); num_slots];
    let mut in_requests = false;
    for (i, l) in lines {
        if !in_requests {
            if l == "[requests]" {
                continue;
            }
            if l == "slot,file_id,count" {
                in_requests = true;
                continue;
            }
            let [f, id, r] = fields::<3>(i, l)?;
            if f as usize != ids.len() {
                return Err(bad(i, "file ids must be dense and ascending"));
            }
            ids.push(id);
            release.push(r as usize);
        } else {
            let [t, f, n] = fields::<3>(i, l)?;
            let t = t as usize;
            if t >= num_slots {
                return Err(bad(i, format!("slot {t} beyond num_slots {num_slots}")));
            }
            let f = u32::try_from(f).map_err(|_| bad(i, "file id overflow"))?;
            let n = u32::try_from(n).map_err(|_| bad(i, "count overflow"))?;
            runs[t].push((FileId(f), n));
        }
    }
    if !in_requests {
        return Err(Error::Input("trace file has no [requests] section".into()));
    }
    SlottedTrace::from_parts(slot_duration, num_slots, ids, release, runs)
}

pub fn read_trace(path: &Path) -> Result<SlottedTrace> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    trace_from_str(&text)
}
