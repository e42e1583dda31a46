//! Edge-list ingestion: turns text sources into an ordered stream of
//! [`EdgeEvent`]s and interns external node labels into dense integer ids.
//!
//! The accepted format is one edge per line, `tail head [weight] [extra...]`,
//! where for an edge `(v, u)` the tail `v` is listed first and the head `u`
//! second; the head's row is the one updated by the sketch. Lines starting
//! with `#` or `%` and blank lines are skipped. Extra columns (timestamps
//! etc.) beyond the weight column are ignored; file order defines the
//! sequence number.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use thiserror::Error;

/// Dense node identifier assigned by [`NodeInterner`] in first-appearance order.
pub type NodeId = u32;

/// One directed edge observed on the stream.
///
/// `seq` is the position of the event in the stream (strictly increasing
/// across events yielded by one source). `weight` is the edge-specific
/// propagation probability, present only when the source is weighted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeEvent {
    pub tail: NodeId,
    pub head: NodeId,
    pub seq: u64,
    pub weight: Option<f64>,
}

impl EdgeEvent {
    pub fn new(tail: NodeId, head: NodeId, seq: u64) -> Self {
        EdgeEvent {
            tail,
            head,
            seq,
            weight: None,
        }
    }

    pub fn weighted(tail: NodeId, head: NodeId, seq: u64, weight: f64) -> Self {
        EdgeEvent {
            tail,
            head,
            seq,
            weight: Some(weight),
        }
    }
}

/// Stable bijection between external node labels and dense ids.
///
/// Ids are assigned in first-appearance order starting at 0, so a label seen
/// during ingestion can always be recovered with [`NodeInterner::resolve`].
#[derive(Debug, Default, Clone)]
pub struct NodeInterner {
    ids: HashMap<String, NodeId>,
    labels: Vec<String>,
}

impl NodeInterner {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the existing id for `label`, or assigns the next dense id.
    pub fn intern(&mut self, label: &str) -> NodeId {
        if let Some(&id) = self.ids.get(label) {
            return id;
        }
        let id = self.labels.len() as NodeId;
        self.ids.insert(label.to_string(), id);
        self.labels.push(label.to_string());
        id
    }

    /// Inverse of [`NodeInterner::intern`]. `None` for ids never assigned.
    pub fn resolve(&self, id: NodeId) -> Option<&str> {
        self.labels.get(id as usize).map(|s| s.as_str())
    }

    /// Id for a label already interned, without assigning a new one.
    pub fn lookup(&self, label: &str) -> Option<NodeId> {
        self.ids.get(label).copied()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Labels in id order.
    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}

/// Field-splitting rule for edge-list lines.
///
/// `Auto` splits on any run of whitespace or on single commas, which covers
/// the common public edge-list formats without a format flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Delimiter {
    #[default]
    Auto,
    Whitespace,
    Comma,
}

/// Parsing options for [`open_edge_stream`].
#[derive(Debug, Clone, Copy)]
pub struct StreamOptions {
    pub delimiter: Delimiter,
    /// When false, each line yields two events: `(v,u)` then `(u,v)`,
    /// with consecutive sequence numbers.
    pub directed: bool,
    /// When true, the third field is parsed as a weight in [0, 1].
    pub weighted: bool,
}

impl Default for StreamOptions {
    fn default() -> Self {
        StreamOptions {
            delimiter: Delimiter::Auto,
            directed: true,
            weighted: false,
        }
    }
}

#[derive(Debug, Error)]
pub enum StreamError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: expected at least {expected} fields, found {found}")]
    TooFewFields {
        line: u64,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: cannot parse weight {text:?}")]
    BadWeight { line: u64, text: String },
    #[error("line {line}: weight {weight} outside [0, 1]")]
    WeightOutOfRange { line: u64, weight: f64 },
}

/// Iterator over the edge events of one text source.
///
/// Owns the [`NodeInterner`] used to map labels to dense ids; retrieve it
/// with [`EdgeStream::interner`] or [`EdgeStream::into_interner`] after the
/// stream is consumed.
pub struct EdgeStream<R: BufRead> {
    reader: R,
    options: StreamOptions,
    interner: NodeInterner,
    next_seq: u64,
    line_no: u64,
    /// Reverse event of an undirected line, emitted before reading on.
    pending: Option<EdgeEvent>,
    done: bool,
}

/// Opens `path` as an edge stream with the given options.
pub fn open_edge_stream(
    path: impl AsRef<Path>,
    options: StreamOptions,
) -> Result<EdgeStream<BufReader<File>>, StreamError> {
    let file = File::open(path)?;
    Ok(EdgeStream::new(BufReader::new(file), options))
}

impl<R: BufRead> EdgeStream<R> {
    pub fn new(reader: R, options: StreamOptions) -> Self {
        EdgeStream {
            reader,
            options,
            interner: NodeInterner::new(),
            next_seq: 0,
            line_no: 0,
            pending: None,
            done: false,
        }
    }

    pub fn interner(&self) -> &NodeInterner {
        &self.interner
    }

    pub fn into_interner(self) -> NodeInterner {
        self.interner
    }

    fn split_line(line: &str, delimiter: Delimiter) -> Vec<&str> {
        match delimiter {
            Delimiter::Whitespace => line.split_whitespace().collect(),
            Delimiter::Comma => line.split(',').map(str::trim).collect(),
            Delimiter::Auto => line
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|f| !f.is_empty())
                .collect(),
        }
    }

    fn parse_line(
        &mut self,
        line: &str,
    ) -> Result<Option<(EdgeEvent, Option<EdgeEvent>)>, StreamError> {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with('%') {
            return Ok(None);
        }
        let fields = Self::split_line(trimmed, self.options.delimiter);
        let expected = if self.options.weighted { 3 } else { 2 };
        if fields.len() < expected {
            return Err(StreamError::TooFewFields {
                line: self.line_no,
                expected,
                found: fields.len(),
            });
        }
        let tail = self.interner.intern(fields[0]);
        let head = self.interner.intern(fields[1]);
        let weight = if self.options.weighted {
            let w: f64 = fields[2].parse().map_err(|_| StreamError::BadWeight {
                line: self.line_no,
                text: fields[2].to_string(),
            })?;
            if !(0.0..=1.0).contains(&w) {
                return Err(StreamError::WeightOutOfRange {
                    line: self.line_no,
                    weight: w,
                });
            }
            Some(w)
        } else {
            None
        };

        let forward = EdgeEvent {
            tail,
            head,
            seq: self.next_seq,
            weight,
        };
        self.next_seq += 1;
        let reverse = if self.options.directed {
            None
        } else {
            let ev = EdgeEvent {
                tail: head,
                head: tail,
                seq: self.next_seq,
                weight,
            };
            self.next_seq += 1;
            Some(ev)
        };
        Ok(Some((forward, reverse)))
    }
}

impl<R: BufRead> Iterator for EdgeStream<R> {
    type Item = Result<EdgeEvent, StreamError>;

    fn next(&mut self) -> Option<Self::Item> {
        if let Some(ev) = self.pending.take() {
            return Some(Ok(ev));
        }
        if self.done {
            return None;
        }
        loop {
            let mut line = String::new();
            match self.reader.read_line(&mut line) {
                Ok(0) => {
                    self.done = true;
                    return None;
                }
                Ok(_) => {
                    self.line_no += 1;
                    match self.parse_line(&line) {
                        Ok(None) => continue,
                        Ok(Some((forward, reverse))) => {
                            self.pending = reverse;
                            return Some(Ok(forward));
                        }
                        Err(e) => {
                            self.done = true;
                            return Some(Err(e));
                        }
                    }
                }
                Err(e) => {
                    self.done = true;
                    return Some(Err(StreamError::Io(e)));
                }
            }
        }
    }
}

/// Collects a whole stream, failing on the first malformed line.
pub fn collect_events<R: BufRead>(
    stream: EdgeStream<R>,
) -> Result<(Vec<EdgeEvent>, NodeInterner), StreamError> {
    let mut stream = stream;
    let mut events = Vec::new();
    for ev in stream.by_ref() {
        events.push(ev?);
    }
    Ok((events, stream.into_interner()))
}
