//! CSV formats.
//!
//! * series: `dt,value[,value2,...]`, one row per observation;
//! * ticks: `time,price`, prices on the tick grid, first row the opening price;
//!
//! Reals are written in the shortest form that parses back to the same `f64`.
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use lpe_core::sim::TickSeries;
use lpe_core::ObservationSeries;

use crate::error::{Error, Result};

pub(crate) fn real(x: f64) -> String {
    format!("{x:?}")
}

pub(crate) fn parse_real(record: &csv::StringRecord, idx: usize, column: &str) -> Result<f64> {
    let line = record.position().map_or(0, |p| p.line());
    let field = record.get(idx).ok_or_else(|| Error::Parse {
        line,
        column: column.to_string(),
        message: "missing field".into(),
    })?;
    let x: f64 = field.trim().parse().map_err(|_| Error::Parse {
        line,
        column: column.to_string(),
        message: format!("not a number: {field:?}"),
    })?;
    if !x.is_finite() {
        return Err(Error::Parse {
            line,
            column: column.to_string(),
            message: format!("not finite: {field:?}"),
        });
    }
    Ok(x)
}

pub(crate) fn check_header<R: Read>(reader: &mut csv::Reader<R>, expected: &[String]) -> Result<()> {
    let found: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if found != expected {
        return Err(Error::Header {
            expected: expected.join(","),
            found: found.join(","),
        });
    }
    Ok(())
}

fn series_header(dim: usize) -> Vec<String> {
    let mut h = vec!["dt".to_string(), "value".to_string()];
    h.extend((2..=dim).map(|k| format!("value{k}")));
    h
}

pub fn write_series<W: Write>(out: W, series: &ObservationSeries) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(series_header(series.dim()))?;
    for (i, dt) in series.dts().iter().enumerate() {
        let mut row = vec![real(*dt)];
        row.extend(series.row(i).iter().map(|v| real(*v)));
        w.write_record(row)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Reads a series; the horizon defaults to the sum of the time increments.
pub fn read_series<R: Read>(input: R, horizon: Option<f64>) -> Result<ObservationSeries> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let width = r.headers()?.len();
    if width < 2 {
        return Err(Error::Header {
            expected: "dt,value".into(),
            found: r.headers()?.iter().collect::<Vec<_>>().join(","),
        });
    }
    let header = series_header(width - 1);
    check_header(&mut r, &header)?;
    let mut dts = Vec::new();
    let mut values = Vec::new();
    for record in r.records() {
        let record = record?;
        dts.push(parse_real(&record, 0, "dt")?);
        for (k, name) in header.iter().enumerate().skip(1) {
            values.push(parse_real(&record, k, name)?);
        }
    }
    let horizon = horizon.unwrap_or_else(|| dts.iter().sum());
    Ok(ObservationSeries::new(width - 1, values, dts, horizon)?)
}

/// `tick = units / 10^decimals` when the tick is a short decimal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct DecimalTick {
    units: i128,
    decimals: u32,
}

fn decimal_tick(tick: f64) -> Option<DecimalTick> {
    (0..=12).find_map(|d| {
        let scaled = tick * 10f64.powi(d as i32);
        let units = scaled.round();
        ((scaled - units).abs() <= 1e-13 * units.max(1.0) && units >= 1.0).then_some(DecimalTick {
            units: units as i128,
            decimals: d,
        })
    })
}

/// Exact decimal rendering of `level · tick` for decimal ticks.
fn format_price(level: i64, tick: f64, dec: Option<DecimalTick>) -> String {
    let Some(dec) = dec else {
        return real(level as f64 * tick);
    };
    let v = level as i128 * dec.units;
    let scale = 10i128.pow(dec.decimals);
    let sign = if v < 0 { "-" } else { "" };
    let (int, frac) = (v.abs() / scale, v.abs() % scale);
    if dec.decimals == 0 {
        format!("{sign}{int}")
    } else {
        format!("{sign}{int}.{frac:0width$}", width = dec.decimals as usize)
    }
}

pub fn write_ticks<W: Write>(out: W, ticks: &TickSeries) -> Result<()> {
    let dec = decimal_tick(ticks.tick());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["time", "price"])?;
    for (t, level) in ticks.times().iter().zip(ticks.levels()) {
        w.write_record([real(*t), format_price(*level, ticks.tick(), dec)])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Reads `time,price` rows, checks every price against the tick grid and
/// keeps the first row plus the rows where the price changes.
pub fn read_ticks<R: Read>(input: R, tick: f64) -> Result<TickSeries> {
    if !(tick.is_finite() && tick > 0.0) {
        return Err(Error::Config(format!("tick must be positive, got {tick}")));
    }
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    check_header(&mut r, &["time".to_string(), "price".to_string()])?;
    let mut times = Vec::new();
    let mut prices = Vec::new();
    for record in r.records() {
        let record = record?;
        let t = parse_real(&record, 0, "time")?;
        let p = parse_real(&record, 1, "price")?;
        let q = p / tick;
        if (q - q.round()).abs() > 1e-6 {
            return Err(Error::Parse {
                line: record.position().map_or(0, |p| p.line()),
                column: "price".into(),
                message: format!("{p} is not a multiple of the tick {tick}"),
            });
        }
        if let Some(&last) = times.last() {
            if !(t >= last) {
                return Err(Error::Parse {
                    line: record.position().map_or(0, |p| p.line()),
                    column: "time".into(),
                    message: format!("time {t} before previous time {last}"),
                });
            }
        }
        times.push(t);
        prices.push(p);
    }
    Ok(TickSeries::from_prices(tick, &times, &prices)?)
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

pub fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_prices() {
        let dec = decimal_tick(0.001);
        assert_eq!(dec, Some(DecimalTick { units: 1, decimals: 3 }));
        assert_eq!(format_price(10_004, 0.001, dec), "10.004");
        assert_eq!(format_price(-5, 0.001, dec), "-0.005");
        assert_eq!(format_price(3, 0.25, decimal_tick(0.25)), "0.75");
        assert_eq!(format_price(7, 5.0, decimal_tick(5.0)), "35");
        assert_eq!(decimal_tick(1.0 / 3.0), None);
    }

    #[test]
    fn series_round_trip() {
        let s = ObservationSeries::new(2, vec![0.1, -2.5e-300, 3.0, 1.0 / 3.0], vec![0.5, 0.25], 1.0).unwrap();
        let mut buf = Vec::new();
        write_series(&mut buf, &s).unwrap();
        assert!(buf.starts_with(b"dt,value,value2\n"));
        assert_eq!(read_series(&buf[..], Some(1.0)).unwrap(), s);
    }

    #[test]
    fn parse_errors_name_the_cell() {
        let err = read_series("dt,value\n0.1,0.2\n0.1,abc\n".as_bytes(), None).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 3") && msg.contains("value"), "{msg}");
        assert!(read_series("t,value\n0.1,0.2\n".as_bytes(), None).is_err());
        assert!(read_series("dt,value\n-0.1,0.2\n".as_bytes(), None).is_err());
        let err = read_ticks("time,price\n0,1.000\n1,1.0005\n".as_bytes(), 0.001).unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
    }

    #[test]
    fn ticks_keep_price_changes() {
        let t = read_ticks("time,price\n0,10.000\n0.1,10.000\n0.2,10.002\n0.3,10.001\n".as_bytes(), 0.001).unwrap();
        assert_eq!(t.levels(), &[10_000, 10_002, 10_001]);
        let mut buf = Vec::new();
        write_ticks(&mut buf, &t).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "time,price\n0.0,10.000\n0.2,10.002\n0.3,10.001\n");
        assert_eq!(read_ticks(&buf[..], 0.001).unwrap(), t);
    }
}
