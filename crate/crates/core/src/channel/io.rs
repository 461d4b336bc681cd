//! CSV and JSON forms of a channel.
//!
//! CSV: the header row holds the output labels after a leading `input`
//! cell; each following row starts with its input label. Entries are
//! written in scientific notation with 17 significant digits.

use super::ChannelMatrix;
use crate::error::{Error, Result};

const CSV_CORNER: &str = "input";

fn parse_err(line: usize, reason: impl Into<String>) -> Error {
    Error::Parse {
        source_name: "channel csv".into(),
        line,
        reason: reason.into(),
    }
}

impl ChannelMatrix {
    pub fn to_csv_string(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let header = std::iter::once(CSV_CORNER).chain(self.output_labels.iter().map(String::as_str));
        // Writing into a Vec cannot fail.
        w.write_record(header).expect("in-memory csv");
        for x in 0..self.rows {
            let mut record = vec![self.input_labels[x].clone()];
            record.extend(self.row(x).iter().map(|v| format!("{v:.16e}")));
            w.write_record(&record).expect("in-memory csv");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv output is utf-8")
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .has_headers(false)
            .from_reader(text.as_bytes());
        let mut records = r.records();
        let header = records
            .next()
            .ok_or_else(|| parse_err(1, "missing header"))?
            .map_err(|e| parse_err(1, e.to_string()))?;
        let output_labels: Vec<String> = header.iter().skip(1).map(str::to_owned).collect();
        let mut input_labels = Vec::new();
        let mut rows = Vec::new();
        for (i, rec) in records.enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| parse_err(line, e.to_string()))?;
            let mut fields = rec.iter();
            input_labels.push(fields.next().unwrap_or_default().to_owned());
            let row = fields
                .map(|f| f.trim().parse::<f64>().map_err(|e| parse_err(line, format!("{f:?}: {e}"))))
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        ChannelMatrix::with_labels(rows, input_labels, output_labels)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(self).expect("channel serializes")
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            source_name: "channel json".into(),
            line: e.line(),
            reason: e.to_string(),
        })
    }
}
