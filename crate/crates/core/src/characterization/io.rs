//! CSV ingestion of raw characterization data.

use std::io::{Read, Write};

use csv::StringRecord;

use super::ols::SweepRecord;
use super::stats::DelayTableRow;
use crate::error::{Error, Result};

/// One count of the reference clock over a period of the device time base.
#[derive(Debug, Clone, PartialEq)]
pub struct CounterRow {
    pub count: u64,
    pub device: String,
    pub temperature_c: Option<f64>,
}

struct Columns {
    headers: StringRecord,
}

impl Columns {
    fn read<R: Read>(rdr: &mut csv::Reader<R>) -> Result<Self> {
        Ok(Self {
            headers: rdr.headers()?.clone(),
        })
    }

    fn find(&self, name: &str) -> Option<usize> {
        self.headers.iter().position(|h| h.trim() == name)
    }

    fn require(&self, kind: &str, names: &[&str]) -> Result<Vec<usize>> {
        let missing: Vec<String> = names
            .iter()
            .filter(|n| self.find(n).is_none())
            .map(|n| n.to_string())
            .collect();
        if !missing.is_empty() {
            return Err(Error::Schema {
                kind: kind.to_string(),
                missing,
            });
        }
        Ok(names.iter().map(|n| self.find(n).expect("checked")).collect())
    }
}

fn field<T: std::str::FromStr>(rec: &StringRecord, idx: usize, name: &str, line: usize) -> Result<T> {
    let raw = rec.get(idx).unwrap_or("").trim();
    raw.parse().map_err(|_| {
        Error::invalid(name, format!("row {line}: cannot parse `{raw}`"))
    })
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input)
}

/// Reads `v_in,v_out,channel,device` rows and groups them into one sweep per
/// channel, in order of first appearance.
pub fn read_sweep_csv<R: Read>(input: R) -> Result<Vec<SweepRecord>> {
    let mut rdr = reader(input);
    let cols = Columns::read(&mut rdr)?.require("sweep", &["v_in", "v_out", "channel", "device"])?;
    let mut out: Vec<SweepRecord> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let v_in: f64 = field(&rec, cols[0], "v_in", line)?;
        let v_out: f64 = field(&rec, cols[1], "v_out", line)?;
        let channel = rec.get(cols[2]).unwrap_or("").to_string();
        let device = rec.get(cols[3]).unwrap_or("").to_string();
        match out
            .iter_mut()
            .find(|s| s.device == device && s.channel == channel)
        {
            Some(s) => {
                s.v_in.push(v_in);
                s.v_out.push(v_out);
            }
            None => out.push(SweepRecord {
                device,
                channel,
                v_in: vec![v_in],
                v_out: vec![v_out],
            }),
        }
    }
    if out.is_empty() {
        return Err(Error::invalid("sweep", "no data rows"));
    }
    Ok(out)
}

/// Reads `count,device[,temperature_c]` rows.
pub fn read_counter_csv<R: Read>(input: R) -> Result<Vec<CounterRow>> {
    let mut rdr = reader(input);
    let columns = Columns::read(&mut rdr)?;
    let cols = columns.require("counter", &["count", "device"])?;
    let temp = columns.find("temperature_c");
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        out.push(CounterRow {
            count: field(&rec, cols[0], "count", line)?,
            device: rec.get(cols[1]).unwrap_or("").to_string(),
            temperature_c: match temp {
                Some(t) => Some(field(&rec, t, "temperature_c", line)?),
                None => None,
            },
        });
    }
    if out.is_empty() {
        return Err(Error::invalid("counter", "no data rows"));
    }
    Ok(out)
}

/// Reads delays per load profile from `profile` plus either `delay_us` or
/// `count` (ticks of a reference at `known_base` Hz). Returns seconds.
pub fn read_delay_csv<R: Read>(input: R, known_base: Option<f64>) -> Result<Vec<(String, Vec<f64>)>> {
    let mut rdr = reader(input);
    let columns = Columns::read(&mut rdr)?;
    let profile = columns.require("delay", &["profile"])?[0];
    let (value, per_unit) = match (columns.find("delay_us"), columns.find("count")) {
        (Some(i), _) => (i, 1e-6),
        (None, Some(i)) => {
            let base = known_base.ok_or_else(|| {
                Error::invalid("known_base", "count data needs the reference frequency")
            })?;
            if !(base.is_finite() && base > 0.0) {
                return Err(Error::invalid("known_base", "must be finite and > 0"));
            }
            (i, 1.0 / base)
        }
        (None, None) => {
            return Err(Error::Schema {
                kind: "delay".into(),
                missing: vec!["delay_us or count".into()],
            })
        }
    };
    let mut out: Vec<(String, Vec<f64>)> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let name = rec.get(profile).unwrap_or("").to_string();
        let v: f64 = field(&rec, value, "delay", i + 2)?;
        let v = v * per_unit;
        match out.iter_mut().find(|(p, _)| *p == name) {
            Some((_, xs)) => xs.push(v),
            None => out.push((name, vec![v])),
        }
    }
    if out.is_empty() {
        return Err(Error::invalid("delay", "no data rows"));
    }
    Ok(out)
}

const TABLE_COLUMNS: [&str; 7] = [
    "profile",
    "min_us",
    "max_us",
    "mean_us",
    "std_mean_us",
    "mode_us",
    "std_mode_us",
];

pub fn read_delay_table<R: Read>(input: R) -> Result<Vec<DelayTableRow>> {
    let mut rdr = reader(input);
    Columns::read(&mut rdr)?.require("delay table", &TABLE_COLUMNS)?;
    let mut rows = Vec::new();
    for row in rdr.deserialize() {
        rows.push(row?);
    }
    Ok(rows)
}

pub fn write_delay_table<W: Write>(rows: &[DelayTableRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TABLE_COLUMNS)?;
    for r in rows {
        w.write_record([
            r.profile.clone(),
            format!("{:?}", r.min_us),
            format!("{:?}", r.max_us),
            format!("{:?}", r.mean_us),
            format!("{:?}", r.std_mean_us),
            format!("{:?}", r.mode_us),
            format!("{:?}", r.std_mode_us),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_groups_by_channel() {
        let text = "v_in,v_out,channel,device\n1,1.1,0,A\n2,2.1,0,A\n1,0.9,1,A\n";
        let s = read_sweep_csv(text.as_bytes()).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].v_in, vec![1.0, 2.0]);
    }

    #[test]
    fn missing_columns_listed() {
        match read_sweep_csv("v_in,channel\n1,0\n".as_bytes()) {
            Err(Error::Schema { missing, .. }) => assert_eq!(missing, vec!["v_out", "device"]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn counter_and_delay() {
        let c = read_counter_csv("count,device,temperature_c\n20000,A,25\n".as_bytes()).unwrap();
        assert_eq!(c[0].temperature_c, Some(25.0));
        let d = read_delay_csv("profile,count\nIdle,659\nIdle,700\n".as_bytes(), Some(100e6)).unwrap();
        assert_eq!(d[0].1.len(), 2);
        assert!((d[0].1[0] - 6.59e-6).abs() < 1e-18);
        assert!(read_delay_csv("profile,count\nIdle,659\n".as_bytes(), None).is_err());
    }

    #[test]
    fn table_round_trip() {
        let text = "profile,min_us,max_us,mean_us,std_mean_us,mode_us,std_mode_us\n\
                    Idle,4.55,14.65,6.59,1.07,6.31,1.11\n";
        let rows = read_delay_table(text.as_bytes()).unwrap();
        let mut out = Vec::new();
        write_delay_table(&rows, &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), text);
    }
}
