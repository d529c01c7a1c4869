//! Text matrices, network configs, PGM images, bank directories and CSV traces.
//!
//! Matrix files hold a `rows cols` header followed by row-major values
//! separated by whitespace. Values are written with 17 significant digits so
//! that reading back reproduces them exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::basis::NonlocalKind;
use crate::error::{param, Error, Result};
use crate::layer::FilterBank;
use crate::mra::MraBank;
use crate::network::{LayerSpec, NetworkSpec};
use crate::restore::TraceRow;

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

pub fn format_matrix(m: &DMatrix<f64>) -> String {
    let mut out = format!("{} {}\n", m.nrows(), m.ncols());
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:.16e}", m[(i, j)])).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

pub fn parse_matrix(text: &str) -> Result<DMatrix<f64>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (hline, header) = lines.next().ok_or_else(|| parse_err(1, "missing `rows cols` header"))?;
    let dims: Vec<&str> = header.split_whitespace().collect();
    let [rows, cols] = dims[..] else {
        return Err(parse_err(hline + 1, format!("expected `rows cols`, got '{}'", header.trim())));
    };
    let rows: usize = rows.parse().map_err(|_| parse_err(hline + 1, format!("bad row count '{rows}'")))?;
    let cols: usize = cols.parse().map_err(|_| parse_err(hline + 1, format!("bad column count '{cols}'")))?;
    let mut values = Vec::with_capacity(rows * cols);
    let mut last = hline + 1;
    for (i, line) in lines {
        last = i + 1;
        for tok in line.split_whitespace() {
            let v: f64 = tok.parse().map_err(|_| parse_err(i + 1, format!("bad number '{tok}'")))?;
            values.push(v);
        }
    }
    if values.len() != rows * cols {
        return Err(parse_err(last, format!("expected {} values for {rows}x{cols}, found {}", rows * cols, values.len())));
    }
    Ok(DMatrix::from_row_slice(rows, cols, &values))
}

pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    parse_matrix(&fs::read_to_string(path)?)
}

pub fn write_matrix(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    Ok(fs::write(path, format_matrix(m))?)
}

/// A signal file is an `n x 1` matrix file.
pub fn read_signal(path: &Path) -> Result<DVector<f64>> {
    let m = read_matrix(path)?;
    if m.ncols() != 1 {
        return Err(param(format!("{}: expected one column, found {}", path.display(), m.ncols())));
    }
    Ok(m.column(0).into_owned())
}

pub fn write_signal(path: &Path, f: &DVector<f64>) -> Result<()> {
    write_matrix(path, &DMatrix::from_column_slice(f.len(), 1, f.as_slice()))
}

fn parse_flag(v: &str, line: usize, key: &str) -> Result<bool> {
    match v {
        "0" => Ok(false),
        "1" => Ok(true),
        _ => Err(parse_err(line, format!("{key} must be 0 or 1, got '{v}'"))),
    }
}

/// Parse `layer <l> d=<int> q=<int> nonlocal=<kind> relu=<0|1> bypass=<0|1>`
/// lines; blank lines and `#` comments are skipped.
pub fn parse_network(text: &str) -> Result<NetworkSpec> {
    let mut layers = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut toks = line.split_whitespace();
        if toks.next() != Some("layer") {
            return Err(parse_err(line_no, "expected `layer <l> ...`"));
        }
        let idx: usize = toks
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| parse_err(line_no, "missing layer index"))?;
        if idx != layers.len() + 1 {
            return Err(parse_err(line_no, format!("layer {idx} out of order; expected {}", layers.len() + 1)));
        }
        let (mut d, mut q, mut nonlocal, mut relu, mut bypass) = (None, None, NonlocalKind::Identity, false, false);
        for tok in toks {
            let (key, value) = tok.split_once('=').ok_or_else(|| parse_err(line_no, format!("expected key=value, got '{tok}'")))?;
            match key {
                "d" => d = Some(value.parse().map_err(|_| parse_err(line_no, format!("bad d '{value}'")))?),
                "q" => q = Some(value.parse().map_err(|_| parse_err(line_no, format!("bad q '{value}'")))?),
                "nonlocal" => nonlocal = value.parse().map_err(|e: Error| parse_err(line_no, e.to_string()))?,
                "relu" => relu = parse_flag(value, line_no, key)?,
                "bypass" => bypass = parse_flag(value, line_no, key)?,
                _ => return Err(parse_err(line_no, format!("unknown key '{key}'"))),
            }
        }
        let d = d.ok_or_else(|| parse_err(line_no, "missing d="))?;
        let q = q.ok_or_else(|| parse_err(line_no, "missing q="))?;
        layers.push(LayerSpec { d, q, nonlocal, relu, bypass });
    }
    if layers.is_empty() {
        return Err(parse_err(1, "no layers"));
    }
    NetworkSpec::new(layers)
}

pub fn format_network(net: &NetworkSpec) -> String {
    let mut out = String::new();
    for (l, s) in net.layers.iter().enumerate() {
        let _ = writeln!(
            out,
            "layer {} d={} q={} nonlocal={} relu={} bypass={}",
            l + 1,
            s.d,
            s.q,
            s.nonlocal,
            u8::from(s.relu),
            u8::from(s.bypass)
        );
    }
    out
}

pub fn read_network(path: &Path) -> Result<NetworkSpec> {
    parse_network(&fs::read_to_string(path)?)
}

/// Decode a binary 8-bit PGM into values in `[0, 1]`.
pub fn parse_pgm(bytes: &[u8]) -> Result<DMatrix<f64>> {
    let mut pos = 0;
    let mut fields = Vec::new();
    while fields.len() < 4 {
        while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(parse_err(1, "truncated PGM header"));
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    if fields[0] != "P5" {
        return Err(parse_err(1, format!("expected P5 magic, got '{}'", fields[0])));
    }
    let num = |s: &str, what: &str| s.parse::<usize>().map_err(|_| parse_err(1, format!("bad {what} '{s}'")));
    let (w, h, maxval) = (num(&fields[1], "width")?, num(&fields[2], "height")?, num(&fields[3], "maxval")?);
    if maxval == 0 || maxval > 255 {
        return Err(parse_err(1, format!("only 8-bit PGM is supported (maxval {maxval})")));
    }
    // exactly one whitespace byte separates the header from the pixels
    pos += 1;
    let data = bytes.get(pos..pos + w * h).ok_or_else(|| parse_err(1, "truncated pixel data"))?;
    Ok(DMatrix::from_fn(h, w, |r, c| data[r * w + c] as f64 / maxval as f64))
}

/// Encode values in `[0, 1]` (clamped, rounded) as a binary 8-bit PGM.
pub fn format_pgm(img: &DMatrix<f64>) -> Vec<u8> {
    let (h, w) = img.shape();
    let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
    for r in 0..h {
        for c in 0..w {
            out.push((img[(r, c)].clamp(0.0, 1.0) * 255.0).round() as u8);
        }
    }
    out
}

pub fn read_pgm(path: &Path) -> Result<DMatrix<f64>> {
    parse_pgm(&fs::read(path)?)
}

pub fn write_pgm(path: &Path, img: &DMatrix<f64>) -> Result<()> {
    Ok(fs::write(path, format_pgm(img))?)
}

/// Banks together with the network they belong to, as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct BankSet {
    pub net: NetworkSpec,
    pub banks: Vec<FilterBank>,
    /// Optional high-band duals for multi-resolution use.
    pub high_duals: Vec<Option<DMatrix<f64>>>,
}

impl BankSet {
    pub fn new(net: NetworkSpec, banks: Vec<FilterBank>) -> Self {
        let high_duals = vec![None; banks.len()];
        Self { net, banks, high_duals }
    }

    pub fn mra_banks(&self) -> Vec<MraBank> {
        self.banks
            .iter()
            .zip(&self.high_duals)
            .map(|(b, h)| MraBank { bank: b.clone(), high_dual: h.clone() })
            .collect()
    }
}

fn vector_matrix(v: &DVector<f64>) -> DMatrix<f64> {
    DMatrix::from_column_slice(v.len(), 1, v.as_slice())
}

/// Write `network.cfg` and `layer<l>_{psi,psi_dual,b_enc,b_dec}.txt` files.
pub fn save_banks(dir: &Path, set: &BankSet) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("network.cfg"), format_network(&set.net))?;
    for (l, (b, h)) in set.banks.iter().zip(&set.high_duals).enumerate() {
        let name = |part: &str| dir.join(format!("layer{}_{part}.txt", l + 1));
        write_matrix(&name("psi"), &b.psi)?;
        write_matrix(&name("psi_dual"), &b.psi_dual)?;
        write_matrix(&name("b_enc"), &vector_matrix(&b.b_enc))?;
        write_matrix(&name("b_dec"), &vector_matrix(&b.b_dec))?;
        if let Some(h) = h {
            write_matrix(&name("psi_dual_high"), h)?;
        }
    }
    Ok(())
}

fn read_vector(path: &Path) -> Result<DVector<f64>> {
    let m = read_matrix(path)?;
    Ok(DVector::from_column_slice(m.as_slice()))
}

pub fn load_banks(dir: &Path) -> Result<BankSet> {
    let net = read_network(&dir.join("network.cfg"))?;
    let mut banks = Vec::new();
    let mut high_duals = Vec::new();
    for (l, p) in net.input_channels().into_iter().enumerate() {
        let name = |part: &str| dir.join(format!("layer{}_{part}.txt", l + 1));
        let mut bank = FilterBank::new(read_matrix(&name("psi"))?, read_matrix(&name("psi_dual"))?, p)?;
        let spec = &net.layers[l];
        // 2-D multi-resolution banks hold d x d patches
        if bank.q() != spec.q || (bank.d() != spec.d && bank.d() != spec.d * spec.d) {
            return Err(param(format!("layer {}: stored bank does not match d={} q={}", l + 1, spec.d, spec.q)));
        }
        bank.b_enc = read_vector(&name("b_enc"))?;
        bank.b_dec = read_vector(&name("b_dec"))?;
        bank.check_consistent()?;
        let high = name("psi_dual_high");
        high_duals.push(if high.exists() { Some(read_matrix(&high)?) } else { None });
        banks.push(bank);
    }
    Ok(BankSet { net, banks, high_duals })
}

fn sci(v: f64) -> String {
    format!("{v:.16e}")
}

/// `iteration,residual,error` rows; the error column is empty without ground truth.
pub fn format_inpaint_trace(trace: &[TraceRow]) -> String {
    let mut out = String::from("iteration,residual,error\n");
    for row in trace {
        let _ = writeln!(out, "{},{},{}", row.iteration, sci(row.residual), row.error.map(sci).unwrap_or_default());
    }
    out
}

/// `step,loss` rows.
pub fn format_loss_trace(trace: &[f64]) -> String {
    let mut out = String::from("step,loss\n");
    for (i, v) in trace.iter().enumerate() {
        let _ = writeln!(out, "{i},{}", sci(*v));
    }
    out
}
