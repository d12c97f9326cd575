//! Delimited-text formats for track logs and flow-field exports.
//!
//! Track log, one observation per row, rows sorted by time:
//!
//! ```text
//! # t,id,x,y,vx,vy
//! 0,1,0.5,10.25,1.2,0
//! ```
//!
//! Flow-field export, one cell per row in row-major order. The first comment
//! line records the grid so the file can be read back:
//!
//! ```text
//! # grid origin_x=0 origin_y=0 cell_size=0.5 width=40 height=40
//! # i,j,cx,cy,fx,fy,mag
//! 0,0,0.25,0.25,0,0,0
//! ```

use std::io::{BufReader, Read, Write};

use super::{FlowField, GridSpec, PedObservation, TrackFrame, TrackLog};
use crate::error::{Error, Result};
use crate::geometry::Vec2;

pub const TRACK_HEADER: &str = "# t,id,x,y,vx,vy";
pub const FIELD_HEADER: &str = "# i,j,cx,cy,fx,fy,mag";

fn parse_error(line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn csv_reader<R: Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader)
}

/// Comment and blank lines come through as records so that record positions
/// count every physical line.
fn is_skipped(record: &csv::StringRecord) -> bool {
    record.get(0).is_none_or(|f| f.starts_with('#')) || (record.len() == 1 && record[0].is_empty())
}

fn field_of<T: std::str::FromStr>(
    record: &csv::StringRecord,
    k: usize,
    name: &str,
    line: u64,
) -> Result<T> {
    let raw = record
        .get(k)
        .ok_or_else(|| parse_error(line, format!("missing column `{name}`")))?;
    raw.parse()
        .map_err(|_| parse_error(line, format!("column `{name}`: cannot parse `{raw}`")))
}

fn finite(value: f64, name: &str, line: u64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(parse_error(line, format!("column `{name}` is not finite")))
    }
}

/// Read a track log, grouping rows with equal `t` into frames.
///
/// Rows must be sorted by time, ids unique within a frame, and observed speeds
/// at most `v_ped_max`.
pub fn read_track_log<R: Read>(reader: R, v_ped_max: f64) -> Result<TrackLog> {
    let mut rdr = csv_reader(reader);
    let mut frames: Vec<TrackFrame> = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_error(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if is_skipped(&record) {
            continue;
        }
        if record.len() != 6 {
            return Err(parse_error(
                line,
                format!("expected 6 columns, found {}", record.len()),
            ));
        }
        let t = finite(field_of(&record, 0, "t", line)?, "t", line)?;
        let id: u64 = field_of(&record, 1, "id", line)?;
        let x = finite(field_of(&record, 2, "x", line)?, "x", line)?;
        let y = finite(field_of(&record, 3, "y", line)?, "y", line)?;
        let vx = finite(field_of(&record, 4, "vx", line)?, "vx", line)?;
        let vy = finite(field_of(&record, 5, "vy", line)?, "vy", line)?;
        if t < 0.0 {
            return Err(parse_error(line, "negative time"));
        }
        let velocity = Vec2::new(vx, vy);
        if velocity.magnitude() > v_ped_max {
            return Err(parse_error(
                line,
                format!("speed {} exceeds {v_ped_max} m/s", velocity.magnitude()),
            ));
        }
        let obs = PedObservation {
            id,
            position: Vec2::new(x, y),
            velocity,
        };
        match frames.last_mut() {
            Some(frame) if frame.t == t => {
                if frame.observations.iter().any(|o| o.id == id) {
                    return Err(parse_error(line, format!("duplicate id {id} at t = {t}")));
                }
                frame.observations.push(obs);
            }
            Some(frame) if frame.t > t => {
                return Err(parse_error(line, format!("time {t} precedes {}", frame.t)));
            }
            _ => frames.push(TrackFrame {
                t,
                observations: vec![obs],
            }),
        }
    }
    Ok(TrackLog { frames })
}

pub fn write_track_log<W: Write>(mut w: W, log: &TrackLog) -> Result<()> {
    writeln!(w, "{TRACK_HEADER}")?;
    for frame in &log.frames {
        for o in &frame.observations {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                frame.t, o.id, o.position.x, o.position.y, o.velocity.x, o.velocity.y
            )?;
        }
    }
    Ok(())
}

pub fn write_field<W: Write>(mut w: W, field: &FlowField) -> Result<()> {
    let s = &field.spec;
    writeln!(
        w,
        "# grid origin_x={} origin_y={} cell_size={} width={} height={}",
        s.origin.x, s.origin.y, s.cell_size, s.width, s.height
    )?;
    writeln!(w, "{FIELD_HEADER}")?;
    for (idx, cell) in field.cells.iter().enumerate() {
        let (i, j) = s.coords(idx);
        let c = s.center(i, j);
        let f = cell.force;
        writeln!(
            w,
            "{i},{j},{},{},{},{},{}",
            c.x,
            c.y,
            f.x,
            f.y,
            f.magnitude()
        )?;
    }
    Ok(())
}

fn parse_grid_line(line: &str, lineno: u64) -> Result<Option<GridSpec>> {
    let Some(rest) = line.trim_start_matches('#').trim().strip_prefix("grid") else {
        return Ok(None);
    };
    let mut origin = Vec2::ZERO;
    let (mut cell_size, mut width, mut height) = (None, None, None);
    for pair in rest.split_whitespace() {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| parse_error(lineno, format!("malformed grid entry `{pair}`")))?;
        let bad = || parse_error(lineno, format!("cannot parse grid entry `{pair}`"));
        match key {
            "origin_x" => origin.x = value.parse().map_err(|_| bad())?,
            "origin_y" => origin.y = value.parse().map_err(|_| bad())?,
            "cell_size" => cell_size = Some(value.parse().map_err(|_| bad())?),
            "width" => width = Some(value.parse().map_err(|_| bad())?),
            "height" => height = Some(value.parse().map_err(|_| bad())?),
            _ => {}
        }
    }
    match (cell_size, width, height) {
        (Some(cs), Some(w), Some(h)) => GridSpec::new(origin, cs, w, h).map(Some),
        _ => Err(parse_error(
            lineno,
            "grid line lacks cell_size, width or height",
        )),
    }
}

/// Read a flow-field export back into a field carrying only forces.
///
/// Without the `# grid` comment line the grid is inferred from the cell
/// centers, which needs at least two cells along each axis.
pub fn read_field<R: Read>(reader: R) -> Result<FlowField> {
    let mut text = String::new();
    BufReader::new(reader).read_to_string(&mut text)?;
    let mut spec = None;
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.starts_with('#') {
            if let Some(s) = parse_grid_line(line, k as u64 + 1)? {
                spec = Some(s);
            }
        } else if !line.is_empty() {
            break;
        }
    }

    let mut rows = Vec::new();
    let mut rdr = csv_reader(text.as_bytes());
    for record in rdr.records() {
        let record =
            record.map_err(|e| parse_error(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        if is_skipped(&record) {
            continue;
        }
        if record.len() != 7 {
            return Err(parse_error(
                line,
                format!("expected 7 columns, found {}", record.len()),
            ));
        }
        let i: usize = field_of(&record, 0, "i", line)?;
        let j: usize = field_of(&record, 1, "j", line)?;
        let cx = finite(field_of(&record, 2, "cx", line)?, "cx", line)?;
        let cy = finite(field_of(&record, 3, "cy", line)?, "cy", line)?;
        let fx = finite(field_of(&record, 4, "fx", line)?, "fx", line)?;
        let fy = finite(field_of(&record, 5, "fy", line)?, "fy", line)?;
        rows.push((line, i, j, Vec2::new(cx, cy), Vec2::new(fx, fy)));
    }

    let spec = match spec {
        Some(s) => s,
        None => infer_spec(&rows)?,
    };
    let mut forces = vec![Vec2::ZERO; spec.cell_count()];
    let mut seen = vec![false; spec.cell_count()];
    for &(line, i, j, _, f) in &rows {
        if i >= spec.width || j >= spec.height {
            return Err(parse_error(
                line,
                format!("cell ({i}, {j}) lies outside the grid"),
            ));
        }
        let idx = spec.index(i, j);
        if std::mem::replace(&mut seen[idx], true) {
            return Err(parse_error(line, format!("cell ({i}, {j}) listed twice")));
        }
        forces[idx] = f;
    }
    FlowField::from_forces(spec, forces)
}

fn infer_spec(rows: &[(u64, usize, usize, Vec2, Vec2)]) -> Result<GridSpec> {
    let width = rows.iter().map(|r| r.1 + 1).max().unwrap_or(0);
    let height = rows.iter().map(|r| r.2 + 1).max().unwrap_or(0);
    let find = |i, j| rows.iter().find(|r| r.1 == i && r.2 == j).map(|r| r.3);
    let (Some(c00), Some(c10), Some(c01)) = (find(0, 0), find(1, 0), find(0, 1)) else {
        return Err(parse_error(1, "cannot infer grid: missing `# grid` line"));
    };
    let cell_size = c10.x - c00.x;
    if (c01.y - c00.y - cell_size).abs() > 1e-9 * cell_size.abs().max(1.0) {
        return Err(parse_error(1, "cannot infer grid: cells are not square"));
    }
    GridSpec::new(
        c00 - Vec2::new(cell_size, cell_size) * 0.5,
        cell_size,
        width,
        height,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flowfield::FlowParams;

    #[test]
    fn track_log_round_trip() {
        let text = "# t,id,x,y,vx,vy\n0,1,0.5,1.5,1,0\n0,2,2.5,1.5,1,0\n0.1,1,0.6,1.5,1,0\n";
        let log = read_track_log(text.as_bytes(), 3.0).unwrap();
        assert_eq!(log.frames.len(), 2);
        assert_eq!(log.frames[0].observations.len(), 2);
        let mut out = Vec::new();
        write_track_log(&mut out, &log).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), text);
    }

    #[test]
    fn malformed_row_reports_line() {
        let text = "# t,id,x,y,vx,vy\n0,1,0.5,1.5,1,0\n0.1,1,abc,1.5,1,0\n";
        match read_track_log(text.as_bytes(), 3.0) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        let text = "# t,id,x,y,vx,vy\n0,1,abc,1,0,0\n";
        match read_track_log(text.as_bytes(), 3.0) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        let text = "# a\n\n0,1,0,0,0,0\n# b\n0.1,1,0,x,0,0\n";
        match read_track_log(text.as_bytes(), 3.0) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 5),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unsorted_duplicate_and_fast_rows_are_rejected() {
        let unsorted = "1,1,0,0,0,0\n0.5,2,0,0,0,0\n";
        assert!(matches!(
            read_track_log(unsorted.as_bytes(), 3.0),
            Err(Error::Parse { line: 2, .. })
        ));
        let dup = "0,1,0,0,0,0\n0,1,1,0,0,0\n";
        assert!(read_track_log(dup.as_bytes(), 3.0).is_err());
        let fast = "0,1,0,0,4,0\n";
        assert!(read_track_log(fast.as_bytes(), 3.0).is_err());
    }

    #[test]
    fn empty_log_has_no_frames() {
        let log = read_track_log("# t,id,x,y,vx,vy\n".as_bytes(), 3.0).unwrap();
        assert!(log.frames.is_empty());
    }

    #[test]
    fn field_round_trip_and_inference() {
        let spec = GridSpec::new(Vec2::new(-1.0, 2.0), 0.5, 3, 2).unwrap();
        let forces: Vec<_> = (0..6).map(|k| Vec2::new(k as f64 * 0.1, -0.3)).collect();
        let field = FlowField::from_forces(spec, forces).unwrap();
        let mut out = Vec::new();
        write_field(&mut out, &field).unwrap();
        let back = read_field(out.as_slice()).unwrap();
        assert_eq!(back.spec, spec);
        for (a, b) in back.cells.iter().zip(&field.cells) {
            assert_eq!(a.force, b.force);
        }
        let text = String::from_utf8(out).unwrap();
        let without_grid: String = text.lines().skip(1).map(|l| format!("{l}\n")).collect();
        let inferred = read_field(without_grid.as_bytes()).unwrap();
        assert_eq!(inferred.spec, spec);
    }

    #[test]
    fn extraction_of_parsed_log() {
        let text = "0,1,0.5,0.5,1,0\n";
        let log = read_track_log(text.as_bytes(), 3.0).unwrap();
        let spec = GridSpec::new(Vec2::ZERO, 1.0, 2, 2).unwrap();
        let (field, dropped) = FlowField::extract(spec, &log, &FlowParams::default()).unwrap();
        assert_eq!(dropped, 0);
        assert_eq!(field.cell(0, 0).force, Vec2::new(0.5, 0.0));
    }
}
