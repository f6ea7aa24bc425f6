//! Per-episode metrics and JSON emission with lossless float formatting.
//!
//! All floats in output files are written as `{:.16e}` — 17 significant
//! digits, enough to round-trip any f64 exactly — so identical runs produce
//! byte-identical files. Wall-clock time is kept out of `metrics.jsonl` for
//! the same reason; it is reported in `summary.json` only.

use std::io;

use serde::{Deserialize, Serialize};
use serde_json::ser::Formatter;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub episode: usize,
    pub global_test_accuracy: f64,
    pub mean_support_loss: f64,
    pub mean_query_loss: f64,
    pub participating_client_ids: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pseudo_label_purity: Option<f64>,
    /// Wall time of the episode; never serialized (see module docs).
    #[serde(skip)]
    pub wall_ms: f64,
}

/// Compact JSON formatter writing floats with 17 significant digits.
struct PreciseCompact;

impl Formatter for PreciseCompact {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }
}

/// Pretty JSON formatter with the same float handling.
struct PrecisePretty<'a>(serde_json::ser::PrettyFormatter<'a>);

impl Formatter for PrecisePretty<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }
    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn end_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_key(w)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// One compact JSON line (no trailing newline).
pub fn to_json_line<T: Serialize>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, PreciseCompact);
    value.serialize(&mut ser).expect("JSON serialization");
    String::from_utf8(out).expect("JSON is UTF-8")
}

/// Pretty-printed JSON document (no trailing newline).
pub fn to_json_pretty<T: Serialize>(value: &T) -> String {
    let mut out = Vec::new();
    let pretty = PrecisePretty(serde_json::ser::PrettyFormatter::new());
    let mut ser = serde_json::Serializer::with_formatter(&mut out, pretty);
    value.serialize(&mut ser).expect("JSON serialization");
    String::from_utf8(out).expect("JSON is UTF-8")
}

/// 17-significant-digit float for CSV cells.
pub fn format_float(value: f64) -> String {
    format!("{value:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_exactly() {
        for &x in &[0.1, 1.0 / 3.0, 1e-300, 123456.789, -0.0, 2.0_f64.powi(-1074)] {
            let s = format_float(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{s}");
        }
    }

    #[test]
    fn json_line_round_trips_record() {
        let r = MetricsRecord {
            episode: 3,
            global_test_accuracy: 0.1 + 0.2,
            mean_support_loss: 1.0 / 3.0,
            mean_query_loss: 2.0 / 7.0,
            participating_client_ids: vec![1, 4, 9],
            pseudo_label_purity: Some(0.9),
            wall_ms: 123.0,
        };
        let line = to_json_line(&r);
        assert!(!line.contains("wall_ms"), "{line}");
        let back: MetricsRecord = serde_json::from_str(&line).unwrap();
        assert_eq!(back.global_test_accuracy.to_bits(), r.global_test_accuracy.to_bits());
        assert_eq!(back.mean_support_loss.to_bits(), r.mean_support_loss.to_bits());
        assert_eq!(back.wall_ms, 0.0);
    }

    #[test]
    fn purity_omitted_when_absent() {
        let r = MetricsRecord {
            episode: 0,
            global_test_accuracy: 0.5,
            mean_support_loss: 0.0,
            mean_query_loss: 0.0,
            participating_client_ids: vec![],
            pseudo_label_purity: None,
            wall_ms: 0.0,
        };
        assert!(!to_json_line(&r).contains("purity"));
    }

    #[test]
    fn pretty_formatter_keeps_precision() {
        #[derive(Serialize)]
        struct Doc {
            xs: Vec<f64>,
        }
        let doc = Doc { xs: vec![0.1, 0.3] };
        let text = to_json_pretty(&doc);
        assert!(text.contains("1.0000000000000001e-1"), "{text}");
        assert!(text.contains('\n'));
    }
}
