//! Event CSV reading and writing.
//!
//! Files have the header `time,source,destination`, one event per row, with
//! times in decimal seconds from the file's epoch. Lines starting with `#`
//! are comments; `# epoch: <value>` and `# horizon: <seconds>` are read back.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use meg_core::{Event, EventLog, GraphKind};

use crate::error::{CliError, Result};

/// Node names, mapped to dense ids by position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Labels {
    Directed(Vec<String>),
    Bipartite {
        sources: Vec<String>,
        destinations: Vec<String>,
    },
}

impl Labels {
    /// Labels `0..n_src` (and `0..n_dst`) for graphs without names.
    pub fn numbered(kind: GraphKind) -> Self {
        let names = |n: usize| (0..n).map(|i| i.to_string()).collect();
        match kind {
            GraphKind::Directed { n } => Labels::Directed(names(n)),
            GraphKind::Bipartite { n_src, n_dst } => Labels::Bipartite {
                sources: names(n_src),
                destinations: names(n_dst),
            },
        }
    }

    pub fn kind(&self) -> GraphKind {
        match self {
            Labels::Directed(nodes) => GraphKind::Directed { n: nodes.len() },
            Labels::Bipartite { sources, destinations } => GraphKind::Bipartite {
                n_src: sources.len(),
                n_dst: destinations.len(),
            },
        }
    }

    pub fn sources(&self) -> &[String] {
        match self {
            Labels::Directed(nodes) => nodes,
            Labels::Bipartite { sources, .. } => sources,
        }
    }

    pub fn destinations(&self) -> &[String] {
        match self {
            Labels::Directed(nodes) => nodes,
            Labels::Bipartite { destinations, .. } => destinations,
        }
    }

    fn src_id(&self, label: &str) -> Option<usize> {
        self.sources().iter().position(|l| l == label)
    }

    fn dst_id(&self, label: &str) -> Option<usize> {
        self.destinations().iter().position(|l| l == label)
    }
}

/// Whether sources and destinations share one node set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Deserialize, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphDecl {
    #[default]
    Directed,
    Bipartite,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub log: EventLog,
    pub labels: Labels,
    /// Free-form epoch declaration copied from the file header.
    pub epoch: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IngestReport {
    pub records: usize,
    pub duplicates: usize,
}

/// How labels become node ids.
#[derive(Debug, Clone, Copy)]
pub enum LabelSource<'a> {
    /// Build a table from the labels present in the file.
    Discover(GraphDecl),
    /// Use an existing table; unknown labels are an error.
    Fixed(&'a Labels),
}

struct Row {
    line: u64,
    time: f64,
    src: String,
    dst: String,
}

/// Reads, sorts and deduplicates an event file.
pub fn ingest(path: &Path, labels: LabelSource<'_>, dt: f64) -> Result<(Dataset, IngestReport)> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    read_events(&text, path, labels, dt)
}

/// [`ingest`] on text already in memory; `path` is only used in messages.
pub fn read_events(text: &str, path: &Path, labels: LabelSource<'_>, dt: f64) -> Result<(Dataset, IngestReport)> {
    let parse_err = |line: u64, message: String| CliError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };

    let mut epoch = None;
    let mut horizon = None;
    for (k, line) in text.lines().enumerate() {
        let Some(comment) = line.trim_start().strip_prefix('#') else {
            continue;
        };
        if let Some((key, value)) = comment.split_once(':') {
            match key.trim() {
                "epoch" => epoch = Some(value.trim().to_string()),
                "horizon" => {
                    let h: f64 = value
                        .trim()
                        .parse()
                        .map_err(|_| parse_err(k as u64 + 1, format!("bad horizon '{}'", value.trim())))?;
                    horizon = Some(h);
                }
                _ => {}
            }
        }
    }

    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    if header.iter().collect::<Vec<_>>() != ["time", "source", "destination"] {
        let line = header.position().map_or(1, |p| p.line());
        return Err(parse_err(line, "expected the header time,source,destination".into()));
    }

    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let time: f64 = record[0]
            .parse()
            .map_err(|_| parse_err(line, format!("bad time '{}'", &record[0])))?;
        if !(time.is_finite() && time >= 0.0) {
            return Err(parse_err(line, format!("time {time} must be finite and nonnegative")));
        }
        let (src, dst) = (&record[1], &record[2]);
        if src.is_empty() || dst.is_empty() {
            return Err(parse_err(line, "empty node label".into()));
        }
        rows.push(Row {
            line,
            time,
            src: src.to_string(),
            dst: dst.to_string(),
        });
    }
    let records = rows.len();

    let labels = match labels {
        LabelSource::Fixed(table) => table.clone(),
        LabelSource::Discover(decl) => discover_labels(&rows, decl),
    };
    let mut events = Vec::with_capacity(rows.len());
    for row in &rows {
        let src = labels
            .src_id(&row.src)
            .ok_or_else(|| parse_err(row.line, format!("unknown source label '{}'", row.src)))?;
        let dst = labels
            .dst_id(&row.dst)
            .ok_or_else(|| parse_err(row.line, format!("unknown destination label '{}'", row.dst)))?;
        events.push(Event::new(row.time, src, dst));
    }

    events.sort_by(|a, b| {
        a.time
            .total_cmp(&b.time)
            .then(a.src.cmp(&b.src))
            .then(a.dst.cmp(&b.dst))
    });
    events.dedup();
    let duplicates = records - events.len();
    if duplicates > 0 {
        log::info!("{}: {duplicates} duplicate events removed", path.display());
    }

    let last = events.last().map_or(0.0, |e| e.time);
    let horizon = horizon.unwrap_or(last);
    if horizon < last {
        return Err(parse_err(
            0,
            format!("declared horizon {horizon} precedes the last event at {last}"),
        ));
    }
    let log = EventLog::new(events, horizon, dt)?;
    Ok((Dataset { log, labels, epoch }, IngestReport { records, duplicates }))
}

/// Numeric labels sort numerically, anything else lexicographically, so ids
/// do not depend on row order.
fn sorted_labels(set: BTreeSet<&str>) -> Vec<String> {
    let mut labels: Vec<String> = set.into_iter().map(str::to_string).collect();
    let numeric: Option<Vec<i64>> = labels.iter().map(|l| l.parse().ok()).collect();
    if let Some(keys) = numeric {
        let mut pairs: Vec<(i64, String)> = keys.into_iter().zip(labels).collect();
        pairs.sort();
        labels = pairs.into_iter().map(|(_, l)| l).collect();
    }
    labels
}

fn discover_labels(rows: &[Row], decl: GraphDecl) -> Labels {
    let srcs: BTreeSet<&str> = rows.iter().map(|r| r.src.as_str()).collect();
    let dsts: BTreeSet<&str> = rows.iter().map(|r| r.dst.as_str()).collect();
    match decl {
        GraphDecl::Directed => Labels::Directed(sorted_labels(srcs.union(&dsts).copied().collect())),
        GraphDecl::Bipartite => Labels::Bipartite {
            sources: sorted_labels(srcs),
            destinations: sorted_labels(dsts),
        },
    }
}

/// Writes a log in the format [`ingest`] reads, including the horizon.
pub fn write_events(path: &Path, log: &EventLog, labels: &Labels, epoch: Option<&str>) -> Result<()> {
    let mut out = Vec::new();
    format_events(&mut out, log, labels, epoch).map_err(|e| CliError::io(path, e))?;
    fs::write(path, out).map_err(|e| CliError::io(path, e))
}

pub fn format_events(
    out: &mut impl Write,
    log: &EventLog,
    labels: &Labels,
    epoch: Option<&str>,
) -> std::io::Result<()> {
    if let Some(epoch) = epoch {
        writeln!(out, "# epoch: {epoch}")?;
    }
    writeln!(out, "# horizon: {}", log.horizon())?;
    writeln!(out, "time,source,destination")?;
    let (src, dst) = (labels.sources(), labels.destinations());
    for e in log.events() {
        writeln!(out, "{},{},{}", e.time, src[e.src], dst[e.dst])?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(text: &str) -> Result<(Dataset, IngestReport)> {
        read_events(
            text,
            Path::new("events.csv"),
            LabelSource::Discover(GraphDecl::Directed),
            0.0,
        )
    }

    #[test]
    fn three_lines() {
        let (data, report) = read("time,source,destination\n1.0,a,b\n2.5,b,a\n3,a,b\n").unwrap();
        assert_eq!(data.log.len(), 3);
        assert_eq!(data.labels, Labels::Directed(vec!["a".into(), "b".into()]));
        assert_eq!(report.duplicates, 0);
        assert_eq!(data.log.horizon(), 3.0);
    }

    #[test]
    fn numeric_labels_sort_by_value() {
        let (data, _) = read("time,source,destination\n1,10,2\n2,9,2\n").unwrap();
        assert_eq!(data.labels.sources(), ["2", "9", "10"]);
    }

    #[test]
    fn malformed_lines_report_their_number() {
        let err = read("# epoch: 0\ntime,source,destination\n1,a,b\nabc,a,b\n").unwrap_err();
        assert!(matches!(err, CliError::Parse { line: 4, .. }), "{err}");
        let err = read("time,source,destination\n1,a\n").unwrap_err();
        assert!(matches!(err, CliError::Parse { line: 2, .. }), "{err}");
        let err = read("t,s,d\n1,a,b\n").unwrap_err();
        assert!(matches!(err, CliError::Parse { line: 1, .. }), "{err}");
    }

    #[test]
    fn unknown_label_with_fixed_table() {
        let table = Labels::Directed(vec!["a".into(), "b".into()]);
        let err = read_events(
            "time,source,destination\n1,a,b\n2,a,c\n",
            Path::new("x.csv"),
            LabelSource::Fixed(&table),
            0.0,
        )
        .unwrap_err();
        assert!(matches!(err, CliError::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn header_comments_round_trip() {
        let text = "# epoch: 2001-12-01T00:00:00Z\n# horizon: 10\ntime,source,destination\n0.5,x,y\n";
        let (data, _) = read(text).unwrap();
        assert_eq!(data.epoch.as_deref(), Some("2001-12-01T00:00:00Z"));
        assert_eq!(data.log.horizon(), 10.0);
        let mut out = Vec::new();
        format_events(&mut out, &data.log, &data.labels, data.epoch.as_deref()).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), text);
    }
}
