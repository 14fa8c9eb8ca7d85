//! Packet-record ingestion and fixed-size valid-packet windows.
//!
//! The canonical input is one packet per text line:
//!
//! ```text
//! timestamp_us,src_ip,dst_ip,protocol,ip_version
//! ```
//!
//! Only TCP over IPv4 counts as a valid packet. Windows hold exactly `N_V`
//! consecutive valid packets; invalid records are skipped and a trailing
//! partial window is dropped.

use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader};
use std::net::IpAddr;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use flate2::read::MultiGzDecoder;
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("window size must be at least 1, got {0}")]
    InvalidWindowSize(usize),
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

/// Transport protocol column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Protocol {
    Tcp,
    Udp,
    Icmp,
    Other,
}

impl Protocol {
    pub fn as_str(self) -> &'static str {
        match self {
            Protocol::Tcp => "TCP",
            Protocol::Udp => "UDP",
            Protocol::Icmp => "ICMP",
            Protocol::Other => "OTHER",
        }
    }
}

impl FromStr for Protocol {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "TCP" => Ok(Protocol::Tcp),
            "UDP" => Ok(Protocol::Udp),
            "ICMP" => Ok(Protocol::Icmp),
            "OTHER" => Ok(Protocol::Other),
            other => Err(format!("unknown protocol {other:?}")),
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// IP version column; only 4 and 6 are representable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum IpVersion {
    V4,
    V6,
}

impl IpVersion {
    pub fn number(self) -> u8 {
        match self {
            IpVersion::V4 => 4,
            IpVersion::V6 => 6,
        }
    }
}

/// One captured packet.
///
/// Addresses are kept as the text that appeared in the input. They are
/// checked to be well-formed IP addresses but are otherwise opaque,
/// sortable keys.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PacketRecord {
    pub timestamp_us: u64,
    pub src: String,
    pub dst: String,
    pub protocol: Protocol,
    pub ip_version: IpVersion,
}

impl PacketRecord {
    /// A valid TCP/IPv4 packet.
    pub fn tcp_v4(timestamp_us: u64, src: impl Into<String>, dst: impl Into<String>) -> Self {
        PacketRecord {
            timestamp_us,
            src: src.into(),
            dst: dst.into(),
            protocol: Protocol::Tcp,
            ip_version: IpVersion::V4,
        }
    }

    /// Writes the record as one canonical CSV line, without the newline.
    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.timestamp_us,
            self.src,
            self.dst,
            self.protocol,
            self.ip_version.number()
        )
    }
}

/// A valid packet is TCP over IPv4.
pub fn is_valid_packet(record: &PacketRecord) -> bool {
    record.protocol == Protocol::Tcp && record.ip_version == IpVersion::V4
}

/// Column roles of a packet line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Column {
    Timestamp,
    Source,
    Destination,
    Protocol,
    IpVersion,
}

/// Layout of a packet text line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormatSpec {
    pub columns: [Column; 5],
    pub delimiter: char,
    /// Skip the first line of every input file.
    pub header: bool,
}

impl Default for FormatSpec {
    fn default() -> Self {
        FormatSpec {
            columns: [
                Column::Timestamp,
                Column::Source,
                Column::Destination,
                Column::Protocol,
                Column::IpVersion,
            ],
            delimiter: ',',
            header: false,
        }
    }
}

impl FormatSpec {
    pub fn with_header(mut self, header: bool) -> Self {
        self.header = header;
        self
    }
}

/// Parses one packet line. `line_no` is 1-based and only used for errors.
pub fn parse_packet_line(
    line: &str,
    line_no: usize,
    format: &FormatSpec,
) -> Result<PacketRecord, IngestError> {
    let err = |reason: String| IngestError::Parse {
        line: line_no,
        reason,
    };
    let line = line.strip_suffix('\r').unwrap_or(line);
    let fields: Vec<&str> = line.split(format.delimiter).collect();
    if fields.len() != format.columns.len() {
        return Err(err(format!(
            "expected {} columns, found {}",
            format.columns.len(),
            fields.len()
        )));
    }

    let mut timestamp_us = None;
    let mut src = None;
    let mut dst = None;
    let mut protocol = None;
    let mut ip_version = None;
    for (column, field) in format.columns.iter().zip(fields) {
        match column {
            Column::Timestamp => {
                let ts = field
                    .parse::<u64>()
                    .map_err(|_| err(format!("invalid timestamp {field:?}")))?;
                timestamp_us = Some(ts);
            }
            Column::Source => src = Some(parse_address(field).map_err(err)?),
            Column::Destination => dst = Some(parse_address(field).map_err(err)?),
            Column::Protocol => protocol = Some(field.parse::<Protocol>().map_err(err)?),
            Column::IpVersion => {
                ip_version = Some(match field {
                    "4" => IpVersion::V4,
                    "6" => IpVersion::V6,
                    other => return Err(err(format!("invalid ip version {other:?}"))),
                })
            }
        }
    }

    match (timestamp_us, src, dst, protocol, ip_version) {
        (Some(timestamp_us), Some(src), Some(dst), Some(protocol), Some(ip_version)) => {
            Ok(PacketRecord {
                timestamp_us,
                src,
                dst,
                protocol,
                ip_version,
            })
        }
        _ => Err(err("format spec does not assign every column".into())),
    }
}

fn parse_address(field: &str) -> Result<String, String> {
    if field.is_empty() {
        return Err("empty address".into());
    }
    field
        .parse::<IpAddr>()
        .map(|_| field.to_owned())
        .map_err(|_| format!("invalid address {field:?}"))
}

/// Reads packet records from any buffered reader.
pub struct PacketReader<R> {
    lines: io::Lines<R>,
    format: FormatSpec,
    path: PathBuf,
    line_no: usize,
}

impl<R: BufRead> PacketReader<R> {
    pub fn new(reader: R, format: FormatSpec) -> Self {
        Self::with_path(reader, format, PathBuf::from("<stream>"))
    }

    fn with_path(reader: R, format: FormatSpec, path: PathBuf) -> Self {
        PacketReader {
            lines: reader.lines(),
            format,
            path,
            line_no: 0,
        }
    }
}

impl<R: BufRead> Iterator for PacketReader<R> {
    type Item = Result<PacketRecord, IngestError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.lines.next()? {
                Ok(line) => line,
                Err(source) => {
                    return Some(Err(IngestError::Io {
                        path: self.path.clone(),
                        source,
                    }))
                }
            };
            self.line_no += 1;
            if self.line_no == 1 && self.format.header {
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            return Some(parse_packet_line(&line, self.line_no, &self.format));
        }
    }
}

/// Opens a packet file, transparently decompressing names ending in `.gz`.
pub fn open_packet_file(
    path: &Path,
    format: &FormatSpec,
) -> Result<PacketReader<Box<dyn BufRead + Send>>, IngestError> {
    let file = File::open(path).map_err(|source| IngestError::Io {
        path: path.to_owned(),
        source,
    })?;
    let reader: Box<dyn BufRead + Send> = if path.extension().and_then(|e| e.to_str()) == Some("gz")
    {
        Box::new(BufReader::new(MultiGzDecoder::new(file)))
    } else {
        Box::new(BufReader::new(file))
    };
    Ok(PacketReader::with_path(
        reader,
        format.clone(),
        path.to_owned(),
    ))
}

/// Chains several packet files into one record stream, in the given order.
pub fn read_packet_files(
    paths: &[PathBuf],
    format: &FormatSpec,
) -> impl Iterator<Item = Result<PacketRecord, IngestError>> + Send {
    let paths = paths.to_vec();
    let format = format.clone();
    paths
        .into_iter()
        .flat_map(move |path| -> Box<dyn Iterator<Item = _> + Send> {
            match open_packet_file(&path, &format) {
                Ok(reader) => Box::new(reader),
                Err(e) => Box::new(std::iter::once(Err(e))),
            }
        })
}

/// Exactly `N_V` consecutive valid packets, in arrival order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PacketWindow {
    index: u64,
    records: Vec<PacketRecord>,
}

impl PacketWindow {
    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn records(&self) -> &[PacketRecord] {
        &self.records
    }

    pub fn n_valid(&self) -> usize {
        self.records.len()
    }
}

/// Counts for one pass over an input stream.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct IngestSummary {
    pub total_read: u64,
    pub total_valid: u64,
    pub total_skipped: u64,
    pub windows_emitted: u64,
    /// Valid packets left in the trailing partial window.
    pub trailing_discarded: u64,
}

/// Splits a record stream into windows of exactly `N_V` valid packets.
pub struct Windower<I> {
    records: I,
    n_valid: usize,
    next_index: u64,
    summary: IngestSummary,
    finished: bool,
}

impl<I> Windower<I>
where
    I: Iterator<Item = Result<PacketRecord, IngestError>>,
{
    pub fn new<T>(records: T, n_valid: usize) -> Result<Self, IngestError>
    where
        T: IntoIterator<IntoIter = I>,
    {
        if n_valid < 1 {
            return Err(IngestError::InvalidWindowSize(n_valid));
        }
        Ok(Windower {
            records: records.into_iter(),
            n_valid,
            next_index: 0,
            summary: IngestSummary::default(),
            finished: false,
        })
    }

    /// Returns the next complete window, or `None` at end of stream.
    pub fn next_window(&mut self) -> Result<Option<PacketWindow>, IngestError> {
        if self.finished {
            return Ok(None);
        }
        let mut buf = Vec::with_capacity(self.n_valid.min(1 << 20));
        while buf.len() < self.n_valid {
            match self.records.next() {
                Some(record) => {
                    let record = record?;
                    self.summary.total_read += 1;
                    if is_valid_packet(&record) {
                        self.summary.total_valid += 1;
                        buf.push(record);
                    } else {
                        self.summary.total_skipped += 1;
                    }
                }
                None => {
                    self.finished = true;
                    self.summary.trailing_discarded = buf.len() as u64;
                    return Ok(None);
                }
            }
        }
        let window = PacketWindow {
            index: self.next_index,
            records: buf,
        };
        self.next_index += 1;
        self.summary.windows_emitted += 1;
        Ok(Some(window))
    }

    pub fn summary(&self) -> IngestSummary {
        self.summary
    }
}

impl<I> Iterator for Windower<I>
where
    I: Iterator<Item = Result<PacketRecord, IngestError>>,
{
    type Item = Result<PacketWindow, IngestError>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_window().transpose()
    }
}

/// Drains a stream and returns its ingest summary without keeping records.
pub fn summarize<I>(records: I) -> Result<IngestSummary, IngestError>
where
    I: IntoIterator<Item = Result<PacketRecord, IngestError>>,
{
    let mut summary = IngestSummary::default();
    for record in records {
        let record = record?;
        summary.total_read += 1;
        if is_valid_packet(&record) {
            summary.total_valid += 1;
        } else {
            summary.total_skipped += 1;
        }
    }
    Ok(summary)
}
