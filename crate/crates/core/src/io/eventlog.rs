//! Line-oriented event log.
//!
//! ```text
//! # qfccert event log v1
//! round_id,x,y,a,b,t_detect_ps
//! 0,0,1,1,0,25340
//! 1,1,0,-,1,
//! 2..1000,0,0,-,1,
//! ```
//!
//! `-` is the no-click outcome and `t_detect_ps` is empty exactly when
//! `a = -`. A `start..end` id (end exclusive) stands for a block of no-click
//! rounds with identical settings and Bob outcome. Numbers are plain decimal
//! digits without sign or leading zeros, and every line ends in `\n`, so a
//! valid file is reproduced byte for byte by [`format_event_log`].

use std::io::Write;

use crate::model::{Entry, EventLog, NoClickRun, Outcome, Round, Setting};
use crate::{Error, Result};

pub const HEADER: &str = "# qfccert event log v1";
pub const COLUMNS: &str = "round_id,x,y,a,b,t_detect_ps";

fn parse_u64(field: &str, what: &str, line: usize) -> Result<u64> {
    let ok = !field.is_empty()
        && field.bytes().all(|c| c.is_ascii_digit())
        && (field == "0" || !field.starts_with('0'));
    if !ok {
        return Err(Error::Parse {
            line,
            message: format!("{what} {field:?} is not a canonical non-negative integer"),
        });
    }
    field.parse().map_err(|_| Error::Parse {
        line,
        message: format!("{what} {field:?} does not fit in 64 bits"),
    })
}

fn parse_setting(field: &str, what: &str, line: usize) -> Result<Setting> {
    match field {
        "0" => Ok(Setting::Zero),
        "1" => Ok(Setting::One),
        _ => Err(Error::Parse {
            line,
            message: format!("setting {what} must be 0 or 1, got {field:?}"),
        }),
    }
}

fn parse_outcome(field: &str, what: &str, line: usize) -> Result<Outcome> {
    match field {
        "0" => Ok(Outcome::Zero),
        "1" => Ok(Outcome::One),
        "-" => Ok(Outcome::NoClick),
        _ => Err(Error::Parse {
            line,
            message: format!("outcome {what} must be 0, 1 or -, got {field:?}"),
        }),
    }
}

fn parse_line(text: &str, line: usize) -> Result<Entry> {
    let fields: Vec<&str> = text.split(',').collect();
    if fields.len() != 6 {
        return Err(Error::Parse {
            line,
            message: format!("expected 6 comma-separated fields, found {}", fields.len()),
        });
    }
    let x = parse_setting(fields[1], "x", line)?;
    let y = parse_setting(fields[2], "y", line)?;
    let a = parse_outcome(fields[3], "a", line)?;
    let b = parse_outcome(fields[4], "b", line)?;
    if let Some((start, end)) = fields[0].split_once("..") {
        let start = parse_u64(start, "run start", line)?;
        let end = parse_u64(end, "run end", line)?;
        if end <= start {
            return Err(Error::Parse {
                line,
                message: format!("empty run {start}..{end}"),
            });
        }
        if a != Outcome::NoClick || !fields[5].is_empty() {
            return Err(Error::Parse {
                line,
                message: "a run must have a = - and no detection time".into(),
            });
        }
        return Ok(Entry::Run(NoClickRun { start, end, x, y, b }));
    }
    let round_id = parse_u64(fields[0], "round_id", line)?;
    let t_detect_ps = if fields[5].is_empty() {
        None
    } else {
        Some(parse_u64(fields[5], "t_detect_ps", line)?)
    };
    let round = Round {
        round_id,
        x,
        y,
        a,
        b,
        t_detect_ps,
    };
    round.validate().map_err(|e| Error::Parse {
        line,
        message: e.to_string(),
    })?;
    Ok(Entry::Round(round))
}

pub fn parse_event_log(text: &str) -> Result<EventLog> {
    if text.contains('\r') {
        return Err(Error::Parse {
            line: 1 + text.split('\r').next().map_or(0, |s| s.matches('\n').count()),
            message: "carriage returns are not allowed".into(),
        });
    }
    let Some(body) = text.strip_suffix('\n') else {
        return Err(Error::Parse {
            line: text.matches('\n').count() + 1,
            message: "file must end with a newline".into(),
        });
    };
    let mut lines = body.split('\n');
    if lines.next() != Some(HEADER) {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header {HEADER:?}"),
        });
    }
    if lines.next() != Some(COLUMNS) {
        return Err(Error::Parse {
            line: 2,
            message: format!("expected column line {COLUMNS:?}"),
        });
    }
    let mut entries = Vec::new();
    let mut next_id: Option<u64> = None;
    for (i, text) in lines.enumerate() {
        let line = i + 3;
        let e = parse_line(text, line)?;
        if next_id.is_some_and(|n| e.first_id() < n) {
            return Err(Error::Parse {
                line,
                message: format!("round id {} does not increase", e.first_id()),
            });
        }
        next_id = Some(e.end_id());
        entries.push(e);
    }
    EventLog::new(entries)
}

/// The two header lines.
pub fn write_header(mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "{HEADER}")?;
    writeln!(w, "{COLUMNS}")
}

/// One record line. Callers are responsible for increasing ids.
pub fn write_entry(mut w: impl Write, e: &Entry) -> std::io::Result<()> {
    match e {
        Entry::Round(r) => {
            write!(w, "{},{},{},{},{},", r.round_id, r.x, r.y, r.a, r.b)?;
            if let Some(t) = r.t_detect_ps {
                write!(w, "{t}")?;
            }
            writeln!(w)
        }
        Entry::Run(run) => writeln!(w, "{}..{},{},{},-,{},", run.start, run.end, run.x, run.y, run.b),
    }
}

pub fn write_event_log(log: &EventLog, mut w: impl Write) -> std::io::Result<()> {
    write_header(&mut w)?;
    for e in log.entries() {
        write_entry(&mut w, e)?;
    }
    Ok(())
}

pub fn format_event_log(log: &EventLog) -> String {
    let mut buf = Vec::new();
    write_event_log(log, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("ASCII output")
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "# qfccert event log v1\nround_id,x,y,a,b,t_detect_ps\n0,0,1,1,0,25340\n1,1,0,-,1,\n2..1000,0,0,-,1,\n1000,1,1,0,-,7\n";

    #[test]
    fn round_trip_is_byte_identical() {
        let log = parse_event_log(SAMPLE).unwrap();
        assert_eq!(log.num_rounds(), 1001);
        assert_eq!(format_event_log(&log), SAMPLE);
    }

    #[test]
    fn header_only() {
        let text = format!("{HEADER}\n{COLUMNS}\n");
        let log = parse_event_log(&text).unwrap();
        assert!(log.is_empty());
        assert_eq!(format_event_log(&log), text);
    }

    fn error_line(text: &str) -> usize {
        match parse_event_log(text) {
            Err(Error::Parse { line, .. }) => line,
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn errors_carry_line_numbers() {
        let base = format!("{HEADER}\n{COLUMNS}\n0,0,0,0,0,5\n");
        assert_eq!(error_line(&format!("{base}1,0,0,1,0,\n")), 4); // click without time
        assert_eq!(error_line(&format!("{base}1,0,0,-,0,3\n")), 4); // time without click
        assert_eq!(error_line(&format!("{base}0,0,0,0,0,5\n")), 4); // repeated id
        assert_eq!(error_line(&format!("{base}01,0,0,-,0,\n")), 4); // leading zero
        assert_eq!(error_line(&format!("{base}2,2,0,-,0,\n")), 4);
        assert_eq!(error_line(&format!("{base}2,0,0,-,0\n")), 4);
        assert_eq!(error_line(&format!("{base}5..5,0,0,-,0,\n")), 4);
        assert_eq!(error_line("# other\n"), 1);
        assert_eq!(error_line(&format!("{HEADER}\nid\n")), 2);
        assert_eq!(error_line(&format!("{HEADER}\n{COLUMNS}\n0,0,0,-,0,")), 3);
    }
}
