//! Slotted request traces.
//!
//! A [`SlottedTrace`] holds, for every slot, the ordered sequence of requests
//! (stored as runs of consecutive requests to the same file) together with
//! the release slot of every file. Files are identified by dense ids assigned
//! in release order, so the library available at slot `t` is always the id
//! prefix `0..library_size_at(t)`.

mod ingest;
mod io;
mod synth;

use std::collections::hash_map::Entry;
use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use ingest::{ingest_events, read_events_csv, read_release_csv, CsvLayout, IngestOptions};
pub use io::{read_trace, write_trace, TRACE_FORMAT_HEADER};
pub use synth::{generate_synthetic, DecayShape, SynthConfig};

/// Dense file identifier inside a trace.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FileId(pub u32);

impl FileId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for FileId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One timestamped request, e.g. a single rating row of a ratings log.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RequestEvent {
    pub file_id: u64,
    pub timestamp: i64,
}

/// Read access to per-file demand history, as consumed by the predictor.
pub trait DemandHistory {
    fn num_slots(&self) -> usize;
    fn release_slot(&self, file: FileId) -> usize;
    /// `d_{t,f}`; zero before release.
    fn demand(&self, file: FileId, slot: usize) -> u32;
    fn library_size_at(&self, slot: usize) -> usize;
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SlottedTrace {
    slot_duration: u64,
    num_slots: usize,
    original_ids: Vec<u64>,
    release: Vec<usize>,
    /// Per file, demand for slots `release..num_slots`.
    series: Vec<Vec<u32>>,
    /// Per slot, ordered request runs `(file, run length)`.
    runs: Vec<Vec<(FileId, u32)>>,
    library: Vec<usize>,
    totals: Vec<u64>,
}

impl SlottedTrace {
    /// Assemble a trace from dense parts.
    ///
    /// `release` must be non-decreasing in file id and every request must
    /// fall at or after its file's release slot.
    pub fn from_parts(
        slot_duration: u64,
        num_slots: usize,
        original_ids: Vec<u64>,
        release: Vec<usize>,
        runs: Vec<Vec<(FileId, u32)>>,
    ) -> Result<Self> {
        if slot_duration == 0 {
            return Err(Error::Input("slot duration must be positive".into()));
        }
        if num_slots == 0 {
            return Err(Error::Input("trace must have at least one slot".into()));
        }
        if runs.len() != num_slots {
            return Err(Error::Input(format!(
                "expected {num_slots} slots of requests, got {}",
                runs.len()
            )));
        }
        if original_ids.len() != release.len() {
            return Err(Error::Input("file table columns differ in length".into()));
        }
        let num_files = release.len();
        if num_files > u32::MAX as usize {
            return Err(Error::Input("too many files".into()));
        }
        for (f, pair) in release.windows(2).enumerate() {
            if pair[1] < pair[0] {
                return Err(Error::Input(format!(
                    "file {} released before file {f}; ids must follow release order",
                    f + 1
                )));
            }
        }
        if let Some(&last) = release.last() {
            if last >= num_slots {
                return Err(Error::Input(format!(
                    "release slot {last} beyond trace end {num_slots}"
                )));
            }
        }

        let mut series: Vec<Vec<u32>> = release.iter().map(|&r| vec![0; num_slots - r]).collect();
        let mut totals = vec![0u64; num_slots];
        for (t, slot_runs) in runs.iter().enumerate() {
            for &(file, count) in slot_runs {
                let f = file.index();
                if f >= num_files {
                    return Err(Error::Input(format!("slot {t}: unknown file {file}")));
                }
                if count == 0 {
                    return Err(Error::Input(format!("slot {t}: empty run for file {file}")));
                }
                if t < release[f] {
                    return Err(Error::Input(format!(
                        "slot {t}: file {file} requested before its release slot {}",
                        release[f]
                    )));
                }
                let cell = &mut series[f][t - release[f]];
                *cell = cell
                    .checked_add(count)
                    .ok_or_else(|| Error::Input(format!("slot {t}: demand overflow for file {file}")))?;
                totals[t] += u64::from(count);
            }
        }

        let mut library = vec![0usize; num_slots];
        let mut next = 0;
        for (t, size) in library.iter_mut().enumerate() {
            while next < num_files && release[next] <= t {
                next += 1;
            }
            *size = next;
        }

        Ok(SlottedTrace {
            slot_duration,
            num_slots,
            original_ids,
            release,
            series,
            runs,
            library,
            totals,
        })
    }

    /// Build from per-file demand series without intra-slot ordering: each
    /// slot lists one run per requested file in id order.
    pub fn from_series(slot_duration: u64, release: Vec<usize>, series: Vec<Vec<u32>>, num_slots: usize) -> Result<Self> {
        if release.len() != series.len() {
            return Err(Error::Input("release table and series differ in length".into()));
        }
        let mut runs = vec![Vec::new(); num_slots];
        for (f, (r, s)) in release.iter().zip(&series).enumerate() {
            if r + s.len() > num_slots {
                return Err(Error::Input(format!("series of file {f} runs past the trace end")));
            }
            for (k, &d) in s.iter().enumerate() {
                if d > 0 {
                    runs[r + k].push((FileId(f as u32), d));
                }
            }
        }
        let ids = (0..release.len() as u64).collect();
        Self::from_parts(slot_duration, num_slots, ids, release, runs)
    }

    pub fn num_slots(&self) -> usize {
        self.num_slots
    }

    /// `|F_t|`: files released at or before slot `t`.
    pub fn library_size_at(&self, t: usize) -> usize {
        self.library[t]
    }

    pub fn slot_duration(&self) -> u64 {
        self.slot_duration
    }

    pub fn num_files(&self) -> usize {
        self.release.len()
    }

    pub fn original_id(&self, file: FileId) -> u64 {
        self.original_ids[file.index()]
    }

    pub fn release_slots(&self) -> &[usize] {
        &self.release
    }

    /// Ordered request runs of slot `t`.
    pub fn runs_at(&self, t: usize) -> &[(FileId, u32)] {
        &self.runs[t]
    }

    /// Requests of slot `t` in arrival order, one entry per request.
    pub fn requests_at(&self, t: usize) -> impl Iterator<Item = FileId> + '_ {
        self.runs[t]
            .iter()
            .flat_map(|&(f, n)| std::iter::repeat_n(f, n as usize))
    }

    fn check_slot(&self, t: usize) -> Result<()> {
        if t >= self.num_slots {
            return Err(Error::Range(format!("slot {t} outside trace of {} slots", self.num_slots)));
        }
        Ok(())
    }

    /// Demand vector `d_t` over the library `F_t`, indexed by file id.
    pub fn demands_at(&self, t: usize) -> Result<Vec<u32>> {
        self.check_slot(t)?;
        Ok(self.demand_vector(t))
    }

    pub(crate) fn demand_vector(&self, t: usize) -> Vec<u32> {
        (0..self.library[t])
            .map(|f| self.series[f][t - self.release[f]])
            .collect()
    }

    /// `Σ_f d_{t,f}`.
    pub fn total_requests_at(&self, t: usize) -> Result<u64> {
        self.check_slot(t)?;
        Ok(self.totals[t])
    }

    pub fn total_requests(&self) -> u64 {
        self.totals.iter().sum()
    }

    /// Per-slot request totals.
    pub fn slot_totals(&self) -> &[u64] {
        &self.totals
    }

    /// Demand series of `file` starting at its release slot.
    pub fn series(&self, file: FileId) -> &[u32] {
        &self.series[file.index()]
    }

    /// The first `slots` slots of this trace; files released later are dropped.
    pub fn truncated(&self, slots: usize) -> Result<Self> {
        if slots == 0 {
            return Err(Error::Config("cannot truncate a trace to zero slots".into()));
        }
        if slots >= self.num_slots {
            return Ok(self.clone());
        }
        let keep = self.library[slots - 1];
        Self::from_parts(
            self.slot_duration,
            slots,
            self.original_ids[..keep].to_vec(),
            self.release[..keep].to_vec(),
            self.runs[..slots].to_vec(),
        )
    }

    /// FNV-1a digest over the canonical serialization; stable across runs.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |x: u64| {
            for b in x.to_le_bytes() {
                h ^= u64::from(b);
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        eat(self.slot_duration);
        eat(self.num_slots as u64);
        for (id, r) in self.original_ids.iter().zip(&self.release) {
            eat(*id);
            eat(*r as u64);
        }
        for (t, slot) in self.runs.iter().enumerate() {
            for &(f, n) in slot {
                eat(t as u64);
                eat(u64::from(f.0));
                eat(u64::from(n));
            }
        }
        h
    }
}

impl DemandHistory for SlottedTrace {
    fn num_slots(&self) -> usize {
        self.num_slots
    }

    fn release_slot(&self, file: FileId) -> usize {
        self.release[file.index()]
    }

    #[inline]
    fn demand(&self, file: FileId, slot: usize) -> u32 {
        let f = file.index();
        let r = self.release[f];
        if slot < r {
            0
        } else {
            self.series[f][slot - r]
        }
    }

    fn library_size_at(&self, slot: usize) -> usize {
        self.library[slot]
    }
}

/// Accumulates slot-indexed requests keyed by external file ids and assigns
/// dense ids in release order.
#[derive(Debug, Default)]
pub(crate) struct TraceBuilder {
    first_seen: HashMap<u64, (usize, usize)>,
    order: Vec<u64>,
    runs: Vec<Vec<(u64, u32)>>,
}

impl TraceBuilder {
    pub(crate) fn push(&mut self, slot: usize, external: u64) {
        if self.runs.len() <= slot {
            self.runs.resize_with(slot + 1, Vec::new);
        }
        if let Entry::Vacant(v) = self.first_seen.entry(external) {
            v.insert((slot, self.order.len()));
            self.order.push(external);
        }
        let runs = &mut self.runs[slot];
        match runs.last_mut() {
            Some((f, n)) if *f == external => *n += 1,
            _ => runs.push((external, 1)),
        }
    }

    /// Finish with `release_override` mapping external ids to release slots.
    /// Overrides later than the first request are clamped to it.
    pub(crate) fn build(
        self,
        slot_duration: u64,
        num_slots: usize,
        release_override: &HashMap<u64, usize>,
    ) -> Result<SlottedTrace> {
        let mut files: Vec<(usize, usize, u64)> = self
            .order
            .iter()
            .map(|ext| {
                let (first, seq) = self.first_seen[ext];
                let release = match release_override.get(ext) {
                    Some(&r) if r <= first => r,
                    Some(&r) => {
                        log::warn!("release slot {r} of file {ext} is after its first request in slot {first}; clamping");
                        first
                    }
                    None => first,
                };
                (release, seq, *ext)
            })
            .collect();
        files.sort_unstable();
        let dense: HashMap<u64, FileId> = files
            .iter()
            .enumerate()
            .map(|(i, &(_, _, ext))| (ext, FileId(i as u32)))
            .collect();
        let mut runs: Vec<Vec<(FileId, u32)>> = self
            .runs
            .into_iter()
            .map(|slot| slot.into_iter().map(|(ext, n)| (dense[&ext], n)).collect())
            .collect();
        runs.resize_with(num_slots, Vec::new);
        SlottedTrace::from_parts(
            slot_duration,
            num_slots,
            files.iter().map(|f| f.2).collect(),
            files.iter().map(|f| f.0).collect(),
            runs,
        )
    }
}
