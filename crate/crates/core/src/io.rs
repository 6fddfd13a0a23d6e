//! File formats.
//!
//! Text tensor: line 1 is `N`, line 2 the dimensions, then one value per
//! line in flat order. Binary tensor: `TLT1`, `N` as a little-endian `u64`,
//! the dimensions as `u64`, then the values as `f64`. Observations: a header
//! `N p_1 ... p_N`, then rows `i_1,...,i_N,value` with 1-based indices.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::admm::ObservationSet;
use crate::error::{Error, Result};
use crate::scalar::{to_f64, Real};
use crate::tensor::{DenseTensor, Shape};

const MAGIC: &[u8; 4] = b"TLT1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TensorFormat {
    Text,
    Binary,
}

impl TensorFormat {
    /// `.tlt` and `.bin` are binary; anything else is text.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("tlt" | "bin") => TensorFormat::Binary,
            _ => TensorFormat::Text,
        }
    }
}

fn parse_field<V: std::str::FromStr>(token: &str, line: usize, what: &str) -> Result<V> {
    token
        .trim()
        .parse()
        .map_err(|_| Error::parse(line, format!("bad {what} {token:?}")))
}

fn shape_from_header(tokens: &[&str], line: usize) -> Result<Shape> {
    let n: usize = parse_field(tokens.first().copied().unwrap_or(""), line, "order")?;
    let dims = tokens[1..]
        .iter()
        .map(|t| parse_field(t, line, "dimension"))
        .collect::<Result<Vec<usize>>>()?;
    if dims.len() != n {
        return Err(Error::parse(line, format!("order {n} but {} dimensions", dims.len())));
    }
    Shape::new(dims).map_err(|e| Error::parse(line, e.to_string()))
}

pub fn write_tensor_text<T: Real, W: Write>(t: &DenseTensor<T>, mut out: W) -> Result<()> {
    let dims = t.shape().dims();
    writeln!(out, "{}", dims.len())?;
    let dims: Vec<String> = dims.iter().map(|d| d.to_string()).collect();
    writeln!(out, "{}", dims.join(" "))?;
    for v in t.as_slice() {
        writeln!(out, "{v}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_tensor_text<T: Real, R: BufRead>(input: R) -> Result<DenseTensor<T>> {
    let mut lines = input.lines().enumerate().map(|(i, l)| (i + 1, l));
    let mut next = |what: &str| -> Result<(usize, String)> {
        match lines.next() {
            Some((no, l)) => Ok((no, l?)),
            None => Err(Error::parse(0, format!("missing {what}"))),
        }
    };
    let (_, order) = next("order")?;
    let (no, dims) = next("dimensions")?;
    let mut header = vec![order.trim()];
    header.extend(dims.split_whitespace());
    let shape = shape_from_header(&header, no)?;
    let mut data = Vec::with_capacity(shape.len());
    for (no, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        data.push(parse_field::<T>(&line, no, "value")?);
    }
    if data.len() != shape.len() {
        return Err(Error::parse(
            0,
            format!("expected {} values, found {}", shape.len(), data.len()),
        ));
    }
    DenseTensor::from_vec(shape, data)
}

pub fn write_tensor_binary<T: Real, W: Write>(t: &DenseTensor<T>, mut out: W) -> Result<()> {
    out.write_all(MAGIC)?;
    let dims = t.shape().dims();
    out.write_all(&(dims.len() as u64).to_le_bytes())?;
    for &d in dims {
        out.write_all(&(d as u64).to_le_bytes())?;
    }
    for &v in t.as_slice() {
        out.write_all(&to_f64(v).to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_tensor_binary<T: Real, R: Read>(mut input: R) -> Result<DenseTensor<T>> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::parse(0, "missing TLT1 magic"));
    }
    let mut word = [0u8; 8];
    let mut read_u64 = |input: &mut R| -> Result<u64> {
        input.read_exact(&mut word)?;
        Ok(u64::from_le_bytes(word))
    };
    let n = read_u64(&mut input)?;
    let dims = (0..n)
        .map(|_| Ok(read_u64(&mut input)? as usize))
        .collect::<Result<Vec<_>>>()?;
    let shape = Shape::new(dims)?;
    let mut data = Vec::with_capacity(shape.len());
    let mut buf = [0u8; 8];
    for _ in 0..shape.len() {
        input.read_exact(&mut buf)?;
        data.push(T::of(f64::from_le_bytes(buf)));
    }
    DenseTensor::from_vec(shape, data)
}

pub fn save_tensor<T: Real>(t: &DenseTensor<T>, path: &Path) -> Result<()> {
    let out = BufWriter::new(File::create(path)?);
    match TensorFormat::from_path(path) {
        TensorFormat::Text => write_tensor_text(t, out),
        TensorFormat::Binary => write_tensor_binary(t, out),
    }
}

pub fn load_tensor<T: Real>(path: &Path) -> Result<DenseTensor<T>> {
    let input = BufReader::new(File::open(path)?);
    match TensorFormat::from_path(path) {
        TensorFormat::Text => read_tensor_text(input),
        TensorFormat::Binary => read_tensor_binary(input),
    }
}

pub fn write_observations<T: Real, W: Write>(obs: &ObservationSet<T>, mut out: W) -> Result<()> {
    let dims = obs.shape().dims();
    let header: Vec<String> = dims.iter().map(|d| d.to_string()).collect();
    writeln!(out, "{} {}", dims.len(), header.join(" "))?;
    for (idx, v) in obs.entries() {
        for i in idx {
            write!(out, "{i},")?;
        }
        writeln!(out, "{v}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_observations<T: Real, R: BufRead>(input: R) -> Result<ObservationSet<T>> {
    let mut lines = input.lines();
    let header = lines.next().ok_or_else(|| Error::parse(1, "missing header"))??;
    let tokens: Vec<&str> = header.split_whitespace().collect();
    let shape = shape_from_header(&tokens, 1)?;
    let n = shape.order();
    let mut entries = Vec::new();
    for (i, line) in lines.enumerate() {
        let no = i + 2;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != n + 1 {
            return Err(Error::parse(no, format!("expected {} fields, found {}", n + 1, fields.len())));
        }
        let idx = fields[..n]
            .iter()
            .map(|f| parse_field(f, no, "index"))
            .collect::<Result<Vec<usize>>>()?;
        let value: T = parse_field(fields[n], no, "value")?;
        let offset = shape.linear_index(&idx).map_err(|e| Error::parse(no, e.to_string()))?;
        entries.push((offset, value));
    }
    ObservationSet::from_offsets(shape, entries)
}

pub fn save_observations<T: Real>(obs: &ObservationSet<T>, path: &Path) -> Result<()> {
    write_observations(obs, BufWriter::new(File::create(path)?))
}

pub fn load_observations<T: Real>(path: &Path) -> Result<ObservationSet<T>> {
    read_observations(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> DenseTensor<f64> {
        let shape = Shape::new(vec![2, 3, 2]).unwrap();
        DenseTensor::from_fn(shape, |i| (i[0] as f64 - 1.3) * (i[1] * i[2]) as f64 / 7.0)
    }

    #[test]
    fn text_round_trip() {
        let t = sample();
        let mut buf = Vec::new();
        write_tensor_text(&t, &mut buf).unwrap();
        assert!(buf.starts_with(b"3\n2 3 2\n"));
        assert_eq!(read_tensor_text::<f64, _>(&buf[..]).unwrap(), t);
    }

    #[test]
    fn binary_round_trip() {
        let t = sample();
        let mut buf = Vec::new();
        write_tensor_binary(&t, &mut buf).unwrap();
        assert_eq!(buf.len(), 4 + 8 * 4 + 8 * 12);
        assert_eq!(read_tensor_binary::<f64, _>(&buf[..]).unwrap(), t);
        buf[0] = b'X';
        assert!(read_tensor_binary::<f64, _>(&buf[..]).is_err());
    }

    #[test]
    fn observation_round_trip() {
        let t = sample();
        let obs = ObservationSet::sample(&t, &[7, 0, 11]).unwrap();
        let mut buf = Vec::new();
        write_observations(&obs, &mut buf).unwrap();
        assert_eq!(read_observations::<f64, _>(&buf[..]).unwrap(), obs);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let bad = "2 2 2\n1,1,0.5\n1,x,2\n";
        match read_observations::<f64, _>(bad.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let out_of_range = "2 2 2\n3,1,0.5\n";
        assert!(matches!(
            read_observations::<f64, _>(out_of_range.as_bytes()),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(read_tensor_text::<f64, _>("2\n2 2\n1\n2\n3\n".as_bytes()).is_err());
    }
}
