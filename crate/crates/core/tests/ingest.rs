//! Event-file ingestion edge cases and LOBF round trips at full-dataset size.

use std::fs;
use std::path::Path;

use lobcast::book::io::{read_event_file, EVENT_HEADER};
use lobcast::features::io::{read_matrix, write_matrix, FeatureMatrix};
use lobcast::features::FEATURES;
use lobcast::pipeline::{featurize_events_dir, read_feature_store, write_feature_store};
use rand::{Rng, SeedableRng};

fn write_day(dir: &Path, stem: &str, body: &str) -> std::path::PathBuf {
    fs::create_dir_all(dir).unwrap();
    let (stock, day) = stem.split_once("_d").unwrap();
    fs::write(dir.join(format!("{stem}.meta")), format!("stock_id={stock}\nday_id={}\ntick_size=0.01\n", day.parse::<u32>().unwrap())).unwrap();
    let path = dir.join(format!("{stem}.events.csv"));
    fs::write(&path, format!("{EVENT_HEADER}\n{body}")).unwrap();
    path
}

#[test]
fn header_only_file_gives_an_empty_store() {
    let tmp = tempfile::tempdir().unwrap();
    let ev = tmp.path().join("ev");
    let path = write_day(&ev, "S01_d01", "");
    let (stream, report) = read_event_file(&path).unwrap();
    assert!(stream.events.is_empty());
    assert_eq!((report.rows, report.accepted, report.rejected), (0, 0, 0));

    let (days, reports) = featurize_events_dir(&ev).unwrap();
    assert_eq!(reports[0].blocks, 0);
    assert_eq!(reports[0].feature_rows, 0);
    let store = tmp.path().join("store");
    let manifest = write_feature_store(&store, &days).unwrap();
    assert_eq!((manifest.entries[0].blocks, manifest.entries[0].rows), (0, 0));
    let back = read_feature_store(&store).unwrap();
    assert!(back[0].vectors.is_empty() && back[0].mids.is_empty());
}

#[test]
fn malformed_rows_are_counted_and_skipped() {
    let tmp = tempfile::tempdir().unwrap();
    let body = "\
1,S,B,99,10,1
2,S,A,101,-5,2
3,S,A,101,5,3
4,Q,A,101,5,4
5,S,B,98,0,5
6,S,B,98,7
";
    let path = write_day(tmp.path(), "S01_d02", body);
    let (stream, report) = read_event_file(&path).unwrap();
    assert_eq!(report.rows, 6);
    assert_eq!(report.accepted, 2);
    assert_eq!(report.rejected, 4);
    assert_eq!(stream.events.len(), 2);
    let lines: Vec<usize> = report.rejected_rows.iter().map(|(l, _)| *l).collect();
    assert_eq!(lines, vec![3, 5, 6, 7]);
    assert!(report.rejected_rows[0].1.contains("negative volume"));
}

#[test]
fn decreasing_timestamps_are_fatal() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write_day(tmp.path(), "S01_d03", "5,S,B,99,10,1\n4,S,A,101,5,2\n");
    assert!(read_event_file(&path).is_err());
}

#[test]
fn full_size_matrix_round_trips_bit_exactly() {
    const ROWS: usize = 453_975;
    let mut rng = rand::rngs::StdRng::seed_from_u64(3);
    let mut m = FeatureMatrix::new(FEATURES);
    m.rows = ROWS;
    m.data = (0..ROWS * FEATURES).map(|_| f64::from_bits(rng.gen::<u64>() & !(0x7ff << 52) | (rng.gen_range(1..0x7ff) << 52))).collect();
    // A few special values that a lossy path would disturb.
    m.data[0] = -0.0;
    m.data[1] = f64::MIN_POSITIVE / 3.0;
    m.data[2] = f64::MAX;
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("big.lobf");
    write_matrix(&path, &m).unwrap();
    assert_eq!(fs::metadata(&path).unwrap().len() as usize, 24 + ROWS * FEATURES * 8);
    let back = read_matrix(&path).unwrap();
    assert_eq!((back.rows, back.cols), (ROWS, FEATURES));
    assert!(back.data.iter().zip(&m.data).all(|(a, b)| a.to_bits() == b.to_bits()));
}
