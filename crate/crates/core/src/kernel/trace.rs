//! Line-oriented trace export.
//!
//! Each realized event is one line of five tab-separated fields:
//!
//! ```text
//! id <TAB> time <TAB> kind <TAB> subject <TAB> payload
//! ```
//!
//! `time` is integer minutes, `kind` is the event kind name (for example
//! `order.hba1c` or `placeholder.0`), `subject` is `facility`, `patient:<id>`
//! or `clinician:<id>`, and `payload` is a comma-separated list of
//! `key=value` pairs with integer values, or `-` when empty. Lines starting with
//! `#` are comments.

use super::event::{EventRecord, Payload};
use crate::time::SimTime;
use std::fmt::Write as _;
use std::io::{self, BufRead, Write};

pub const TRACE_HEADER: &str = "# clinicsim trace v1: id\ttime\tkind\tsubject\tpayload";

pub fn format_record(record: &EventRecord) -> String {
    let mut line = format!(
        "{}\t{}\t{}\t{}\t",
        record.id, record.time, record.kind, record.subject
    );
    if record.payload.is_empty() {
        line.push('-');
    } else {
        for (i, (k, v)) in record.payload.iter().enumerate() {
            if i > 0 {
                line.push(',');
            }
            let _ = write!(line, "{k}={v}");
        }
    }
    line
}

pub fn write_trace<W: Write>(mut out: W, trace: &[EventRecord]) -> io::Result<()> {
    writeln!(out, "{TRACE_HEADER}")?;
    for record in trace {
        writeln!(out, "{}", format_record(record))?;
    }
    Ok(())
}

pub fn trace_to_string(trace: &[EventRecord]) -> String {
    let mut buf = Vec::new();
    write_trace(&mut buf, trace).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("trace is ASCII")
}

pub fn parse_record(line: &str) -> Result<EventRecord, String> {
    let fields: Vec<&str> = line.split('\t').collect();
    let [id, time, kind, subject, payload] = fields[..] else {
        return Err(format!("expected 5 fields, found {}", fields.len()));
    };
    let mut parsed = Payload::new();
    if payload != "-" {
        for pair in payload.split(',') {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| format!("bad payload entry `{pair}`"))?;
            let v: i64 = v.parse().map_err(|_| format!("bad payload value `{pair}`"))?;
            parsed.push(k.to_owned(), v);
        }
    }
    Ok(EventRecord {
        id: id.parse().map_err(|_| format!("bad id `{id}`"))?,
        time: SimTime::from_minutes(time.parse().map_err(|_| format!("bad time `{time}`"))?),
        kind: kind.parse()?,
        subject: subject.parse()?,
        payload: parsed,
    })
}

pub fn read_trace<R: BufRead>(input: R) -> Result<Vec<EventRecord>, String> {
    let mut out = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line = line.map_err(|e| e.to_string())?;
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        out.push(parse_record(&line).map_err(|e| format!("line {}: {e}", n + 1))?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::event::{EventKind, Subject};
    use crate::measure::Measure;

    #[test]
    fn record_round_trip() {
        let rec = EventRecord {
            id: 7,
            time: SimTime::from_minutes(1234),
            kind: EventKind::Completion(Measure::EyeExam),
            subject: Subject::Patient(3),
            payload: Payload::new().with("visit", 2).with("delay", -1),
        };
        let line = format_record(&rec);
        assert_eq!(line, "7\t1234\tcompletion.eye_exam\tpatient:3\tvisit=2,delay=-1");
        assert_eq!(parse_record(&line).unwrap(), rec);

        let empty = EventRecord {
            payload: Payload::new(),
            kind: EventKind::DayStart,
            subject: Subject::Facility,
            ..rec
        };
        let text = trace_to_string(std::slice::from_ref(&empty));
        assert_eq!(read_trace(text.as_bytes()).unwrap(), vec![empty]);
    }
}
