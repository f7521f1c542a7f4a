use std::collections::HashMap;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use super::{RequestEvent, SlottedTrace, TraceBuilder};
use crate::error::{Error, Result};

/// Optional knobs for [`ingest_events`].
#[derive(Clone, Debug, Default)]
pub struct IngestOptions {
    /// External release timestamps overriding the first-request proxy.
    pub release_timestamps: HashMap<u64, i64>,
    /// Skip events of files whose supplied release timestamp precedes the
    /// origin, i.e. keep only content released inside the observed window.
    pub drop_released_before_origin: bool,
    /// Drop events falling at or beyond this many slots.
    pub max_slots: Option<usize>,
}

/// Bucket events into slots of `slot_duration` seconds starting at `origin`.
///
/// Events are stably sorted by timestamp, so same-second events keep their
/// input order inside the slot.
pub fn ingest_events(
    events: &[RequestEvent],
    slot_duration: u64,
    origin: i64,
    options: &IngestOptions,
) -> Result<SlottedTrace> {
    if events.is_empty() {
        return Err(Error::Input("no request events".into()));
    }
    if slot_duration == 0 {
        return Err(Error::Input("slot duration must be positive".into()));
    }
    if let Some(0) = options.max_slots {
        return Err(Error::Input("max_slots must be positive".into()));
    }
    let slot_of = |ts: i64| -> usize { ((ts - origin) as u64 / slot_duration) as usize };

    for (i, e) in events.iter().enumerate() {
        if e.timestamp < 0 {
            return Err(Error::Input(format!(
                "event {i} (file {}) has negative timestamp {}",
                e.file_id, e.timestamp
            )));
        }
        if e.timestamp < origin {
            return Err(Error::Input(format!(
                "event {i} (file {}) at {} precedes origin {origin}",
                e.file_id, e.timestamp
            )));
        }
    }

    let mut order: Vec<&RequestEvent> = events.iter().collect();
    order.sort_by_key(|e| e.timestamp);

    let mut release = HashMap::new();
    let mut excluded = HashMap::new();
    for (&id, &ts) in &options.release_timestamps {
        if ts < origin {
            if options.drop_released_before_origin {
                excluded.insert(id, ());
            } else {
                release.insert(id, 0usize);
            }
        } else {
            release.insert(id, slot_of(ts));
        }
    }

    let mut builder = TraceBuilder::default();
    let mut kept = 0usize;
    for e in order {
        if excluded.contains_key(&e.file_id) {
            continue;
        }
        let slot = slot_of(e.timestamp);
        if options.max_slots.is_some_and(|m| slot >= m) {
            continue;
        }
        builder.push(slot, e.file_id);
        kept += 1;
    }
    if kept == 0 {
        return Err(Error::Input("all events were filtered out".into()));
    }
    let num_slots = builder.runs.len();
    let num_slots = options.max_slots.map_or(num_slots, |m| m.max(num_slots));
    // Overrides past the window are irrelevant once clamped to first request.
    let release: HashMap<u64, usize> = release.into_iter().filter(|(_, s)| *s < num_slots).collect();
    builder.build(slot_duration, num_slots, &release)
}

/// Column layout of a ratings-style CSV log.
#[derive(Clone, Debug)]
pub struct CsvLayout {
    pub delimiter: u8,
    /// `None` detects a header from a non-numeric timestamp in the first row.
    pub has_header: Option<bool>,
    pub file_column: usize,
    pub timestamp_column: usize,
}

impl Default for CsvLayout {
    /// `user_id, file_id, rating, timestamp`.
    fn default() -> Self {
        CsvLayout {
            delimiter: b',',
            has_header: None,
            file_column: 1,
            timestamp_column: 3,
        }
    }
}

fn parse_rows<R: Read>(reader: R, layout: &CsvLayout, what: &str) -> Result<Vec<(u64, i64)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(layout.delimiter)
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut out = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let field = |c: usize| {
            rec.get(c)
                .map(str::trim)
                .ok_or_else(|| Error::Input(format!("{what} line {}: missing column {c}", line + 1)))
        };
        let ts_raw = field(layout.timestamp_column)?;
        if line == 0 {
            let header = layout.has_header.unwrap_or_else(|| ts_raw.parse::<i64>().is_err());
            if header {
                continue;
            }
        }
        let file = field(layout.file_column)?
            .parse::<u64>()
            .map_err(|e| Error::Input(format!("{what} line {}: bad file id: {e}", line + 1)))?;
        let ts = ts_raw
            .parse::<i64>()
            .map_err(|e| Error::Input(format!("{what} line {}: bad timestamp: {e}", line + 1)))?;
        out.push((file, ts));
    }
    Ok(out)
}

/// Read request events from a ratings-layout CSV (other columns ignored).
pub fn read_events_csv(path: &Path, layout: &CsvLayout) -> Result<Vec<RequestEvent>> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_rows(f, layout, &path.display().to_string())?
        .into_iter()
        .map(|(file_id, timestamp)| RequestEvent { file_id, timestamp })
        .collect())
}

/// Read a `file_id, release_timestamp` table.
pub fn read_release_csv(path: &Path, delimiter: u8) -> Result<HashMap<u64, i64>> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let layout = CsvLayout {
        delimiter,
        has_header: None,
        file_column: 0,
        timestamp_column: 1,
    };
    Ok(parse_rows(f, &layout, &path.display().to_string())?.into_iter().collect())
}
