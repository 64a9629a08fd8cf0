//! Event files (`*.events.csv`) and their `key=value` metadata sidecars.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use super::event::{EventKind, EventStream, LobEvent, Side, StockDay, StreamMeta};
use crate::error::{Error, Result};

pub const EVENT_HEADER: &str = "timestamp,kind,side,price_ticks,volume,order_ref";
pub const EVENTS_SUFFIX: &str = ".events.csv";
pub const META_SUFFIX: &str = ".meta";

/// Row-level outcome of reading an event file.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IngestReport {
    pub rows: usize,
    pub accepted: usize,
    pub rejected: usize,
    /// (1-based line number, reason) for the first rejected rows.
    pub rejected_rows: Vec<(usize, String)>,
}

const KEPT_ROW_ERRORS: usize = 64;

/// File stem shared by an event file and its sidecar.
pub fn stream_stem(key: &StockDay) -> String {
    format!("{}_d{:02}", key.stock_id, key.day_id)
}

pub fn events_path(dir: &Path, key: &StockDay) -> PathBuf {
    dir.join(format!("{}{EVENTS_SUFFIX}", stream_stem(key)))
}

pub fn meta_path_for(events_path: &Path) -> PathBuf {
    let name = events_path
        .file_name()
        .and_then(|n| n.to_str())
        .unwrap_or_default();
    let stem = name.strip_suffix(EVENTS_SUFFIX).unwrap_or(name);
    events_path.with_file_name(format!("{stem}{META_SUFFIX}"))
}

/// All event files in `dir`, sorted by file name.
pub fn list_event_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path
            .file_name()
            .and_then(|n| n.to_str())
            .is_some_and(|n| n.ends_with(EVENTS_SUFFIX))
        {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

pub fn write_meta(path: &Path, meta: &StreamMeta) -> Result<()> {
    let text = format!(
        "stock_id={}\nday_id={}\ntick_size={}\n",
        meta.key.stock_id, meta.key.day_id, meta.tick_size
    );
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_meta(path: &Path) -> Result<StreamMeta> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let (mut stock, mut day, mut tick) = (None, None, None);
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| parse_err(format!("expected key=value, got {line:?}")))?;
        match k.trim() {
            "stock_id" => stock = Some(v.trim().to_string()),
            "day_id" => {
                day = Some(v.trim().parse::<u32>().map_err(|e| parse_err(e.to_string()))?)
            }
            "tick_size" => {
                let t = v.trim().parse::<f64>().map_err(|e| parse_err(e.to_string()))?;
                if !(t > 0.0 && t.is_finite()) {
                    return Err(parse_err("tick_size must be positive".into()));
                }
                tick = Some(t)
            }
            other => return Err(parse_err(format!("unknown key {other:?}"))),
        }
    }
    match (stock, day, tick) {
        (Some(stock_id), Some(day_id), Some(tick_size)) => Ok(StreamMeta {
            key: StockDay { stock_id, day_id },
            tick_size,
        }),
        _ => Err(Error::Format(format!(
            "{}: metadata needs stock_id, day_id and tick_size",
            path.display()
        ))),
    }
}

fn parse_row(line: &str) -> std::result::Result<LobEvent, String> {
    let mut it = line.split(',');
    let mut next = |name: &str| it.next().ok_or_else(|| format!("missing field {name}"));
    let timestamp = next("timestamp")?
        .parse::<i64>()
        .map_err(|e| format!("timestamp: {e}"))?;
    let kind_s = next("kind")?;
    let kind = EventKind::from_code(kind_s).ok_or_else(|| format!("unknown kind {kind_s:?}"))?;
    let side_s = next("side")?;
    let side = Side::from_code(side_s).ok_or_else(|| format!("unknown side {side_s:?}"))?;
    let price = next("price_ticks")?
        .parse::<i64>()
        .map_err(|e| format!("price_ticks: {e}"))?;
    let volume_raw = next("volume")?
        .parse::<i64>()
        .map_err(|e| format!("volume: {e}"))?;
    if volume_raw < 0 {
        return Err(format!("negative volume {volume_raw}"));
    }
    let volume = volume_raw as u64;
    if kind == EventKind::Submit && volume == 0 {
        return Err("submit with zero volume".into());
    }
    let order_ref = next("order_ref")?
        .parse::<u64>()
        .map_err(|e| format!("order_ref: {e}"))?;
    if it.next().is_some() {
        return Err("too many fields".into());
    }
    Ok(LobEvent {
        timestamp,
        kind,
        side,
        price,
        volume,
        order_ref,
    })
}

/// Parse event rows from a reader. Header mismatches and decreasing
/// timestamps are hard errors; other malformed rows are counted and skipped.
pub fn read_events_from(reader: impl BufRead, path: &Path) -> Result<(Vec<LobEvent>, IngestReport)> {
    let mut lines = reader.lines();
    let header = match lines.next() {
        Some(h) => h.map_err(|e| Error::io(path, e))?,
        None => {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: 1,
                message: "missing header".into(),
            })
        }
    };
    if header.trim_end_matches('\r') != EVENT_HEADER {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: format!("header mismatch: expected {EVENT_HEADER:?}, got {header:?}"),
        });
    }
    let mut report = IngestReport::default();
    let mut events = Vec::new();
    let mut last_ts = i64::MIN;
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.is_empty() {
            continue;
        }
        report.rows += 1;
        match parse_row(&line) {
            Ok(ev) => {
                if ev.timestamp < last_ts {
                    return Err(Error::Parse {
                        path: path.to_path_buf(),
                        line: line_no,
                        message: format!("timestamp {} decreases (previous {last_ts})", ev.timestamp),
                    });
                }
                last_ts = ev.timestamp;
                report.accepted += 1;
                events.push(ev);
            }
            Err(msg) => {
                report.rejected += 1;
                if report.rejected_rows.len() < KEPT_ROW_ERRORS {
                    report.rejected_rows.push((line_no, msg));
                }
            }
        }
    }
    Ok((events, report))
}

/// Read an event file plus its metadata sidecar.
pub fn read_event_file(path: &Path) -> Result<(EventStream, IngestReport)> {
    let meta = read_meta(&meta_path_for(path))?;
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let (events, report) = read_events_from(BufReader::new(file), path)?;
    Ok((EventStream { meta, events }, report))
}

pub fn write_events_to(mut w: impl Write, events: &[LobEvent]) -> std::io::Result<()> {
    writeln!(w, "{EVENT_HEADER}")?;
    for e in events {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            e.timestamp,
            e.kind.code(),
            e.side.code(),
            e.price,
            e.volume,
            e.order_ref
        )?;
    }
    w.flush()
}

/// Write `stream` as `<dir>/<stock>_dNN.events.csv` plus sidecar; returns
/// the event file path.
pub fn write_event_file(dir: &Path, stream: &EventStream) -> Result<PathBuf> {
    let path = events_path(dir, &stream.meta.key);
    let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    write_events_to(BufWriter::new(file), &stream.events).map_err(|e| Error::io(&path, e))?;
    write_meta(&meta_path_for(&path), &stream.meta)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(text: &str) -> Result<(Vec<LobEvent>, IngestReport)> {
        read_events_from(text.as_bytes(), Path::new("mem.events.csv"))
    }

    #[test]
    fn empty_file_with_header_is_empty() {
        let (events, report) = read(&format!("{EVENT_HEADER}\n")).unwrap();
        assert!(events.is_empty());
        assert_eq!(report, IngestReport::default());
    }

    #[test]
    fn negative_volume_row_is_counted() {
        let text = format!("{EVENT_HEADER}\n1,S,B,100,5,1\n2,C,B,100,-3,1\n3,XX,B,1,1,1\n4,D,A,0,0,1\n");
        let (events, report) = read(&text).unwrap();
        assert_eq!(events.len(), 2);
        assert_eq!(report.rows, 4);
        assert_eq!(report.rejected, 2);
        assert_eq!(report.rejected_rows[0].0, 3);
        assert!(report.rejected_rows[0].1.contains("negative volume"));
    }

    #[test]
    fn header_mismatch_and_time_reversal_are_hard_errors() {
        assert!(matches!(read("ts,kind\n"), Err(Error::Parse { line: 1, .. })));
        let text = format!("{EVENT_HEADER}\n5,S,B,100,5,1\n4,S,B,100,5,2\n");
        match read(&text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn file_round_trip_with_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let stream = EventStream {
            meta: StreamMeta {
                key: StockDay::new("ACME", 3),
                tick_size: 0.01,
            },
            events: vec![
                LobEvent {
                    timestamp: 10,
                    kind: EventKind::Submit,
                    side: Side::Ask,
                    price: 1002,
                    volume: 100,
                    order_ref: 1,
                },
                LobEvent {
                    timestamp: 11,
                    kind: EventKind::ExecHidden,
                    side: Side::Bid,
                    price: 1001,
                    volume: 4,
                    order_ref: 0,
                },
            ],
        };
        let path = write_event_file(dir.path(), &stream).unwrap();
        assert!(path.ends_with("ACME_d03.events.csv"));
        let (back, report) = read_event_file(&path).unwrap();
        assert_eq!(back, stream);
        assert_eq!(report.accepted, 2);
        assert_eq!(list_event_files(dir.path()).unwrap(), vec![path]);
    }
}
