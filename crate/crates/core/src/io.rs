//! Trajectory CSV (`step,state,action`, 1-based) and JSON helpers.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, CmcError, Result};
use crate::simulate::Trajectory;

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    step: usize,
    state: usize,
    action: usize,
}

pub fn write_trajectory<W: Write>(traj: &Trajectory, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for (step, (&s, &a)) in traj.states.iter().zip(&traj.actions).enumerate() {
        w.serialize(Row { step, state: s + 1, action: a + 1 })?;
    }
    w.flush()?;
    Ok(())
}

/// Parses a trajectory; steps must run `0, 1, 2, …` and indices are 1-based.
pub fn read_trajectory<R: Read>(reader: R) -> Result<Trajectory> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = r.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["step", "state", "action"] {
        return Err(invalid(format!("trajectory header must be step,state,action, got {}", headers.iter().collect::<Vec<_>>().join(","))));
    }
    let (mut states, mut actions) = (Vec::new(), Vec::new());
    for (i, row) in r.deserialize::<Row>().enumerate() {
        let row = row?;
        if row.step != i {
            return Err(invalid(format!("row {} has step {}, expected {i}", i + 1, row.step)));
        }
        if row.state == 0 || row.action == 0 {
            return Err(CmcError::Range(format!("step {i}: states and actions are 1-based")));
        }
        states.push(row.state - 1);
        actions.push(row.action - 1);
    }
    Trajectory::new(states, actions, 0)
}

pub fn read_trajectory_file(path: &Path) -> Result<Trajectory> {
    read_trajectory(fs::File::open(path).map_err(|e| io_context(path, e))?)
}

pub fn write_trajectory_file(traj: &Trajectory, path: &Path) -> Result<()> {
    write_trajectory(traj, fs::File::create(path).map_err(|e| io_context(path, e))?)
}

fn io_context(path: &Path, e: std::io::Error) -> CmcError {
    CmcError::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| io_context(path, e))?;
    serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

/// Parses JSON text; any parse or validation failure is invalid input.
pub fn parse_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| invalid(e.to_string()))
}

pub fn to_json_pretty<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Writes pretty JSON to `path`, or to stdout when `path` is `None` or `-`.
pub fn write_json<T: Serialize>(value: &T, path: Option<&Path>) -> Result<()> {
    let text = to_json_pretty(value)?;
    match path {
        Some(p) if p != Path::new("-") => fs::write(p, text).map_err(|e| io_context(p, e))?,
        _ => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

/// A value given inline or as a path to a JSON file; paths are resolved
/// against a base directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum JsonRef<T> {
    Path(String),
    Inline(T),
}

impl<T: DeserializeOwned + Clone> JsonRef<T> {
    pub fn resolve(&self, base: &Path) -> Result<T> {
        match self {
            JsonRef::Inline(v) => Ok(v.clone()),
            JsonRef::Path(p) => read_json(&base.join(p)),
        }
    }
}

/// Serializes a vector as a JSON array.
pub fn ser_vector<S: serde::Serializer>(v: &nalgebra::DVector<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter())
}

/// Serializes a matrix as an array of rows.
pub fn ser_matrix<S: serde::Serializer>(m: &nalgebra::DMatrix<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(m.row_iter().map(|r| r.iter().copied().collect::<Vec<f64>>()))
}

pub fn matrix_rows(m: &nalgebra::DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let t = Trajectory::new(vec![0, 2, 1], vec![1, 0, 0], 7).unwrap();
        let mut buf = Vec::new();
        write_trajectory(&t, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("step,state,action\n0,1,2\n"));
        let back = read_trajectory(&buf[..]).unwrap();
        assert_eq!(back.states, t.states);
        assert_eq!(back.actions, t.actions);
    }

    #[test]
    fn csv_rejects_bad_input() {
        assert!(read_trajectory("a,b,c\n0,1,1\n".as_bytes()).is_err());
        assert!(read_trajectory("step,state,action\n0,1,1\n2,1,1\n".as_bytes()).is_err());
        assert!(matches!(read_trajectory("step,state,action\n0,0,1\n".as_bytes()), Err(CmcError::Range(_))));
        assert!(read_trajectory("step,state,action\n".as_bytes()).is_err());
    }
}
