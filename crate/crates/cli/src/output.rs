//! Tab-separated tables with a manifest header.

use std::fmt::Write as _;
use std::time::{SystemTime, UNIX_EPOCH};

use sha2::{Digest, Sha256};

pub const VERSION: &str = concat!("covtest ", env!("CARGO_PKG_VERSION"));

/// Six significant digits: fixed notation for exponents in [-5, 6),
/// scientific otherwise; trailing zeros dropped.
pub fn sig6(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf" } else { "-inf" }.into();
    }
    let sci = format!("{v:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if (-5..6).contains(&exp) {
        trim_zeros(format!("{:.*}", (5 - exp) as usize, v))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

pub fn sha256_hex(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    h.finalize().iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Command line as typed, minus options that must not influence result
/// files (worker count and output location).
pub fn echoed_command(args: &[String]) -> String {
    const DROP_WITH_VALUE: [&str; 3] = ["--jobs", "-j", "--out"];
    let mut out = vec!["covtest".to_string()];
    let mut skip = false;
    for a in args.iter().skip(1) {
        if skip {
            skip = false;
            continue;
        }
        if DROP_WITH_VALUE.contains(&a.as_str()) {
            skip = true;
            continue;
        }
        if DROP_WITH_VALUE
            .iter()
            .any(|f| f.starts_with("--") && a.starts_with(&format!("{f}=")))
        {
            continue;
        }
        out.push(a.clone());
    }
    out.join(" ")
}

pub fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

/// Header lines and rows of one output table.
#[derive(Debug, Default)]
pub struct Table {
    meta: Vec<(String, String)>,
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
    trailer: Vec<(String, String)>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            ..Default::default()
        }
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.meta.push((key.into(), value.to_string()));
        self
    }

    pub fn trailer(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.trailer.push((key.into(), value.to_string()));
        self
    }

    pub fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.columns.len());
        self.rows.push(cells);
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.meta {
            for (i, line) in v.lines().enumerate() {
                if i == 0 {
                    let _ = writeln!(s, "# {k}: {line}");
                } else {
                    let _ = writeln!(s, "#   {line}");
                }
            }
        }
        let _ = writeln!(s, "{}", self.columns.join("\t"));
        for r in &self.rows {
            let _ = writeln!(s, "{}", r.join("\t"));
        }
        for (k, v) in &self.trailer {
            let _ = writeln!(s, "# {k}: {v}");
        }
        s
    }
}

pub fn join_indices(v: &[usize]) -> String {
    if v.is_empty() {
        "-".into()
    } else {
        v.iter()
            .map(|j| j.to_string())
            .collect::<Vec<_>>()
            .join(",")
    }
}
