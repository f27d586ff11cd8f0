//! CSV schemas shared by the CLI commands.
//!
//! Fixed columns, mandatory headers:
//!   transfer:  arch,oracle,d_out,t_acc_ns,saturated
//!   linearity: oracle,inl
//!   noise:     trial,error_s
//!   energy:    field,value,unit
//!
//! Floats are written with Rust's shortest round-trip formatting, so writing
//! parsed rows back reproduces the file byte for byte.

use std::io::{self, BufRead, Write};

use crate::metrics::{EnergyReport, LinearityReport, TransferRecord};

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
}

fn malformed(line: usize, message: impl Into<String>) -> ReportError {
    ReportError::Malformed {
        line,
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferRow {
    pub arch: String,
    pub oracle: u64,
    pub d_out: u64,
    pub t_acc_ns: f64,
    pub saturated: bool,
}

impl TransferRow {
    pub fn from_record(r: &TransferRecord) -> Self {
        TransferRow {
            arch: r.arch.to_string(),
            oracle: r.oracle,
            d_out: r.d_out,
            t_acc_ns: r.t_acc * 1e9,
            saturated: r.saturated,
        }
    }
}

pub fn write_transfer<W: Write>(out: &mut W, rows: &[TransferRow]) -> io::Result<()> {
    writeln!(out, "arch,oracle,d_out,t_acc_ns,saturated")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.arch, r.oracle, r.d_out, r.t_acc_ns, r.saturated
        )?;
    }
    Ok(())
}

pub fn read_transfer<R: BufRead>(input: R) -> Result<Vec<TransferRow>, ReportError> {
    let mut rows = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if i == 0 {
            if line != "arch,oracle,d_out,t_acc_ns,saturated" {
                return Err(malformed(1, "bad transfer header"));
            }
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 5 {
            return Err(malformed(i + 1, "expected 5 fields"));
        }
        rows.push(TransferRow {
            arch: f[0].to_string(),
            oracle: f[1]
                .parse()
                .map_err(|e| malformed(i + 1, format!("oracle: {e}")))?,
            d_out: f[2]
                .parse()
                .map_err(|e| malformed(i + 1, format!("d_out: {e}")))?,
            t_acc_ns: f[3]
                .parse()
                .map_err(|e| malformed(i + 1, format!("t_acc_ns: {e}")))?,
            saturated: f[4]
                .parse()
                .map_err(|e| malformed(i + 1, format!("saturated: {e}")))?,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearityRow {
    pub oracle: u64,
    pub inl: f64,
}

pub fn linearity_rows(records: &[TransferRecord], report: &LinearityReport) -> Vec<LinearityRow> {
    records
        .iter()
        .zip(&report.inl)
        .map(|(r, &inl)| LinearityRow {
            oracle: r.oracle,
            inl,
        })
        .collect()
}

pub fn write_linearity<W: Write>(out: &mut W, rows: &[LinearityRow]) -> io::Result<()> {
    writeln!(out, "oracle,inl")?;
    for r in rows {
        writeln!(out, "{},{}", r.oracle, r.inl)?;
    }
    Ok(())
}

pub fn read_linearity<R: BufRead>(input: R) -> Result<Vec<LinearityRow>, ReportError> {
    let mut rows = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if i == 0 {
            if line != "oracle,inl" {
                return Err(malformed(1, "bad linearity header"));
            }
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 2 {
            return Err(malformed(i + 1, "expected 2 fields"));
        }
        rows.push(LinearityRow {
            oracle: f[0]
                .parse()
                .map_err(|e| malformed(i + 1, format!("oracle: {e}")))?,
            inl: f[1]
                .parse()
                .map_err(|e| malformed(i + 1, format!("inl: {e}")))?,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseRow {
    pub trial: u64,
    pub error_s: f64,
}

pub fn write_noise<W: Write>(out: &mut W, rows: &[NoiseRow]) -> io::Result<()> {
    writeln!(out, "trial,error_s")?;
    for r in rows {
        writeln!(out, "{},{}", r.trial, r.error_s)?;
    }
    Ok(())
}

pub fn read_noise<R: BufRead>(input: R) -> Result<Vec<NoiseRow>, ReportError> {
    let mut rows = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if i == 0 {
            if line != "trial,error_s" {
                return Err(malformed(1, "bad noise header"));
            }
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 2 {
            return Err(malformed(i + 1, "expected 2 fields"));
        }
        rows.push(NoiseRow {
            trial: f[0]
                .parse()
                .map_err(|e| malformed(i + 1, format!("trial: {e}")))?,
            error_s: f[1]
                .parse()
                .map_err(|e| malformed(i + 1, format!("error_s: {e}")))?,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyRow {
    pub field: String,
    pub value: f64,
    pub unit: String,
}

pub fn energy_rows(report: &EnergyReport, f_op: f64) -> Vec<EnergyRow> {
    let row = |field: &str, value: f64, unit: &str| EnergyRow {
        field: field.to_string(),
        value,
        unit: unit.to_string(),
    };
    vec![
        row("p_analog", report.p_analog, "W"),
        row("p_digital", report.p_digital, "W"),
        row("p_total", report.p_total, "W"),
        row("energy_per_mac", report.energy_per_mac, "J"),
        row("f_op", f_op, "Hz"),
        row("ops_per_cycle", f64::from(report.ops_per_cycle), "ops"),
        row("tops_per_watt", report.tops_per_watt, "TOPS/W"),
        row("calibrated", f64::from(u8::from(report.calibrated)), "flag"),
    ]
}

pub fn write_energy<W: Write>(out: &mut W, rows: &[EnergyRow]) -> io::Result<()> {
    writeln!(out, "field,value,unit")?;
    for r in rows {
        writeln!(out, "{},{},{}", r.field, r.value, r.unit)?;
    }
    Ok(())
}

pub fn read_energy<R: BufRead>(input: R) -> Result<Vec<EnergyRow>, ReportError> {
    let mut rows = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if i == 0 {
            if line != "field,value,unit" {
                return Err(malformed(1, "bad energy header"));
            }
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 3 {
            return Err(malformed(i + 1, "expected 3 fields"));
        }
        rows.push(EnergyRow {
            field: f[0].to_string(),
            value: f[1]
                .parse()
                .map_err(|e| malformed(i + 1, format!("value: {e}")))?,
            unit: f[2].to_string(),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn transfer_round_trip() {
        let rows = vec![
            TransferRow {
                arch: "cascade".into(),
                oracle: 59,
                d_out: 12,
                t_acc_ns: 12.3456789,
                saturated: false,
            },
            TransferRow {
                arch: "counter".into(),
                oracle: 900,
                d_out: 24,
                t_acc_ns: 8.0 * std::f64::consts::PI,
                saturated: true,
            },
        ];
        let mut buf = Vec::new();
        write_transfer(&mut buf, &rows).unwrap();
        let parsed = read_transfer(&buf[..]).unwrap();
        assert_eq!(parsed, rows);
    }

    #[test]
    fn bad_headers_are_rejected() {
        assert!(read_transfer(&b"arch,oracle\n"[..]).is_err());
        assert!(read_linearity(&b"oracle;inl\n"[..]).is_err());
        assert!(read_noise(&b"error_s,trial\n"[..]).is_err());
        assert!(read_energy(&b"field,value\n"[..]).is_err());
    }

    proptest! {
        // Writing parsed rows back must reproduce the file byte for byte.
        #[test]
        fn transfer_write_is_a_fixed_point(
            oracle in 0u64..1000,
            d_out in 0u64..10_000,
            t in proptest::num::f64::POSITIVE,
            saturated: bool,
        ) {
            let rows = vec![TransferRow {
                arch: "cascade".into(),
                oracle,
                d_out,
                t_acc_ns: t,
                saturated,
            }];
            let mut first = Vec::new();
            write_transfer(&mut first, &rows).unwrap();
            let parsed = read_transfer(&first[..]).unwrap();
            let mut second = Vec::new();
            write_transfer(&mut second, &parsed).unwrap();
            prop_assert_eq!(first, second);
        }

        #[test]
        fn linearity_write_is_a_fixed_point(oracle in 0u64..1000, inl in -100.0f64..100.0) {
            let rows = vec![LinearityRow { oracle, inl }];
            let mut first = Vec::new();
            write_linearity(&mut first, &rows).unwrap();
            let parsed = read_linearity(&first[..]).unwrap();
            let mut second = Vec::new();
            write_linearity(&mut second, &parsed).unwrap();
            prop_assert_eq!(first, second);
        }
    }
}
