//! File formats: JSON networks, CSV stimuli, rasters and benchmark results.
//!
//! Every writer is a deterministic function of its input: fixed key order,
//! one record per line, shortest round-trip number rendering.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::model::{
    Leak, NetworkDef, NeuronParams, SpikeEvent, SpikeRaster, StimulusSchedule, SynapseDef, LIF,
};
use crate::{Error, Result};

pub const NETWORK_FORMAT_VERSION: u32 = 1;
pub const RASTER_HEADER: [&str; 2] = ["step", "neuron_id"];
pub const STIMULUS_HEADER: [&str; 3] = ["step", "neuron_id", "amplitude"];
pub const BENCH_HEADER: [&str; 7] = [
    "backend",
    "neurons",
    "connection_probability",
    "steps",
    "wall_time_seconds",
    "spike_count",
    "seed",
];
/// Written in the wall-time column of a cell that hit its time limit.
pub const TIMEOUT_MARKER: &str = "timeout";

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("malformed JSON at line {line}, column {column}: {message}")]
    Json {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema error at {location}: {message}")]
    Schema { location: String, message: String },
    #[error("malformed CSV at line {line}: {message}")]
    Csv { line: u64, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn schema(location: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Format(FormatError::Schema {
        location: location.into(),
        message: message.into(),
    })
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum LeakRecord {
    Amount(f64),
    Word(String),
}

fn default_leak() -> LeakRecord {
    LeakRecord::Amount(0.0)
}

fn default_behavior() -> String {
    LIF.to_string()
}

fn default_stdp() -> bool {
    true
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NeuronRecord {
    threshold: f64,
    #[serde(default = "default_leak")]
    leak: LeakRecord,
    reset: f64,
    #[serde(default)]
    refractory: i64,
    #[serde(default)]
    axonal_delay: i64,
    #[serde(default = "default_behavior")]
    behavior: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SynapseRecord {
    pre: i64,
    post: i64,
    weight: f64,
    delay: i64,
    #[serde(default = "default_stdp")]
    stdp: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkDocument {
    version: u32,
    neurons: Vec<NeuronRecord>,
    synapses: Vec<SynapseRecord>,
    #[serde(default)]
    metadata: BTreeMap<String, String>,
}

fn non_negative_u32(value: i64, location: String, what: &str) -> Result<u32> {
    u32::try_from(value).map_err(|_| {
        schema(
            location,
            format!("{what} must be a non-negative integer, got {value}"),
        )
    })
}

/// Decodes and validates a network document.
pub fn parse_network(bytes: &[u8]) -> Result<NetworkDef> {
    let doc: NetworkDocument = serde_json::from_slice(bytes).map_err(|e| {
        Error::Format(FormatError::Json {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    })?;
    if doc.version != NETWORK_FORMAT_VERSION {
        return Err(schema(
            "version",
            format!(
                "unsupported version {} (expected {NETWORK_FORMAT_VERSION})",
                doc.version
            ),
        ));
    }

    let mut net = NetworkDef {
        neurons: Vec::with_capacity(doc.neurons.len()),
        synapses: Vec::with_capacity(doc.synapses.len()),
        metadata: doc.metadata,
    };
    for (i, rec) in doc.neurons.into_iter().enumerate() {
        let leak = match rec.leak {
            LeakRecord::Amount(amount) => Leak::Finite(amount),
            LeakRecord::Word(word) if word == "inf" => Leak::Infinite,
            LeakRecord::Word(word) => {
                return Err(schema(
                    format!("neurons[{i}].leak"),
                    format!("expected a number or \"inf\", got {word:?}"),
                ))
            }
        };
        net.neurons.push(NeuronParams {
            threshold: rec.threshold,
            leak,
            reset: rec.reset,
            refractory_period: non_negative_u32(
                rec.refractory,
                format!("neurons[{i}].refractory"),
                "refractory",
            )?,
            axonal_delay: non_negative_u32(
                rec.axonal_delay,
                format!("neurons[{i}].axonal_delay"),
                "axonal_delay",
            )?,
            behavior: rec.behavior,
        });
    }
    for (s, rec) in doc.synapses.into_iter().enumerate() {
        net.synapses.push(SynapseDef {
            pre: non_negative_u32(rec.pre, format!("synapses[{s}].pre"), "pre")?,
            post: non_negative_u32(rec.post, format!("synapses[{s}].post"), "post")?,
            weight: rec.weight,
            delay: non_negative_u32(rec.delay, format!("synapses[{s}].delay"), "delay")?,
            stdp_enabled: rec.stdp,
        });
    }

    let violations = net.validate();
    if !violations.is_empty() {
        return Err(Error::InvalidNetwork(violations));
    }
    Ok(net)
}

fn leak_record(leak: Leak) -> LeakRecord {
    match leak {
        Leak::Finite(amount) => LeakRecord::Amount(amount),
        Leak::Infinite => LeakRecord::Word("inf".into()),
    }
}

/// Encodes a network: indented top level, one neuron or synapse per line.
pub fn write_network<W: Write>(net: &NetworkDef, mut out: W) -> Result<()> {
    writeln!(out, "{{")?;
    writeln!(out, "  \"version\": {NETWORK_FORMAT_VERSION},")?;
    writeln!(out, "  \"neurons\": [")?;
    for (i, p) in net.neurons.iter().enumerate() {
        let rec = NeuronRecord {
            threshold: p.threshold,
            leak: leak_record(p.leak),
            reset: p.reset,
            refractory: p.refractory_period as i64,
            axonal_delay: p.axonal_delay as i64,
            behavior: p.behavior.clone(),
        };
        let sep = if i + 1 < net.neurons.len() { "," } else { "" };
        writeln!(out, "    {}{sep}", json(&rec)?)?;
    }
    writeln!(out, "  ],")?;
    writeln!(out, "  \"synapses\": [")?;
    for (i, s) in net.synapses.iter().enumerate() {
        let rec = SynapseRecord {
            pre: s.pre as i64,
            post: s.post as i64,
            weight: s.weight,
            delay: s.delay as i64,
            stdp: s.stdp_enabled,
        };
        let sep = if i + 1 < net.synapses.len() { "," } else { "" };
        writeln!(out, "    {}{sep}", json(&rec)?)?;
    }
    writeln!(out, "  ],")?;
    writeln!(out, "  \"metadata\": {}", json(&net.metadata)?)?;
    writeln!(out, "}}")?;
    Ok(())
}

pub fn network_to_bytes(net: &NetworkDef) -> Vec<u8> {
    let mut buf = Vec::new();
    write_network(net, &mut buf).expect("writing to memory cannot fail");
    buf
}

fn json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string(value).map_err(|e| {
        Error::Format(FormatError::Json {
            line: 0,
            column: 0,
            message: e.to_string(),
        })
    })
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Format(FormatError::Io(io)),
        kind => Error::Format(FormatError::Csv {
            line,
            message: format!("{kind:?}"),
        }),
    }
}

fn csv_message(line: u64, message: impl Into<String>) -> Error {
    Error::Format(FormatError::Csv {
        line,
        message: message.into(),
    })
}

fn check_header<R: Read>(reader: &mut csv::Reader<R>, expected: &[&str]) -> Result<()> {
    let header = reader.headers().map_err(csv_error)?;
    if header.iter().ne(expected.iter().copied()) {
        return Err(csv_message(
            1,
            format!(
                "expected header {:?}, got {:?}",
                expected.join(","),
                header.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }
    Ok(())
}

fn field<T: std::str::FromStr>(record: &csv::StringRecord, idx: usize, name: &str) -> Result<T> {
    let line = record.position().map_or(0, |p| p.line());
    let raw = record
        .get(idx)
        .ok_or_else(|| csv_message(line, format!("missing column {name}")))?;
    raw.trim()
        .parse()
        .map_err(|_| csv_message(line, format!("cannot parse {name} from {raw:?}")))
}

pub fn write_raster<W: Write>(raster: &SpikeRaster, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RASTER_HEADER).map_err(csv_error)?;
    for e in raster.events() {
        w.write_record([e.step.to_string(), e.neuron.to_string()])
            .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a raster file. The file carries events only, so the raster bounds
/// are supplied by the caller. Rows must be strictly increasing.
pub fn parse_raster<R: Read>(
    input: R,
    neuron_count: usize,
    step_count: u32,
) -> Result<SpikeRaster> {
    let mut reader = csv::Reader::from_reader(input);
    check_header(&mut reader, &RASTER_HEADER)?;
    let mut events: Vec<SpikeEvent> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        let event = SpikeEvent {
            step: field(&record, 0, "step")?,
            neuron: field(&record, 1, "neuron_id")?,
        };
        if events.last().is_some_and(|last| *last >= event) {
            return Err(csv_message(
                line,
                "rows must be sorted by (step, neuron_id) without duplicates",
            ));
        }
        events.push(event);
    }
    SpikeRaster::from_events(neuron_count, step_count, events)
}

pub fn write_stimulus<W: Write>(stim: &StimulusSchedule, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(STIMULUS_HEADER).map_err(csv_error)?;
    for e in &stim.entries {
        w.write_record([
            e.step.to_string(),
            e.neuron.to_string(),
            e.amplitude.to_string(),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn parse_stimulus<R: Read>(input: R) -> Result<StimulusSchedule> {
    let mut reader = csv::Reader::from_reader(input);
    check_header(&mut reader, &STIMULUS_HEADER)?;
    let mut stim = StimulusSchedule::new();
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        stim.push(
            field(&record, 0, "step")?,
            field(&record, 1, "neuron_id")?,
            field(&record, 2, "amplitude")?,
        );
    }
    Ok(stim)
}

/// One row of a benchmark result file.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub backend: String,
    pub neurons: usize,
    pub connection_probability: f64,
    pub steps: u32,
    /// `None` marks a cell that hit its time limit.
    pub wall_time_seconds: Option<f64>,
    pub spike_count: Option<u64>,
    pub seed: u64,
}

pub fn write_bench_results<W: Write>(rows: &[BenchRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(BENCH_HEADER).map_err(csv_error)?;
    for row in rows {
        w.write_record([
            row.backend.clone(),
            row.neurons.to_string(),
            row.connection_probability.to_string(),
            row.steps.to_string(),
            row.wall_time_seconds
                .map_or_else(|| TIMEOUT_MARKER.to_string(), |t| t.to_string()),
            row.spike_count.map_or_else(String::new, |c| c.to_string()),
            row.seed.to_string(),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn parse_bench_results<R: Read>(input: R) -> Result<Vec<BenchRow>> {
    let mut reader = csv::Reader::from_reader(input);
    check_header(&mut reader, &BENCH_HEADER)?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        let wall = record.get(4).unwrap_or_default();
        let wall_time_seconds = if wall == TIMEOUT_MARKER {
            None
        } else {
            let t: f64 = field(&record, 4, "wall_time_seconds")?;
            if t.is_nan() || t <= 0.0 {
                return Err(csv_message(line, "wall_time_seconds must be positive"));
            }
            Some(t)
        };
        let spikes = record.get(5).unwrap_or_default();
        rows.push(BenchRow {
            backend: field(&record, 0, "backend")?,
            neurons: field(&record, 1, "neurons")?,
            connection_probability: field(&record, 2, "connection_probability")?,
            steps: field(&record, 3, "steps")?,
            wall_time_seconds,
            spike_count: if spikes.is_empty() {
                None
            } else {
                Some(field(&record, 5, "spike_count")?)
            },
            seed: field(&record, 6, "seed")?,
        });
    }
    Ok(rows)
}
