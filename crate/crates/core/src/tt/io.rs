//! Little-endian binary format for trains (`TTV1`) and operators (`TTO1`).
//!
//! Layout: 4-byte magic, `d` as `u64`, the mode sizes (`u64` each; operators
//! store row sizes then column sizes), the rank chain `r_0..r_d` (`u64`), then
//! every core's entries as `f64` in storage order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::dense::DenseTensor;
use crate::error::{Error, Result};

use super::operator::TtOperator;
use super::train::TensorTrain;

const TRAIN_MAGIC: &[u8; 4] = b"TTV1";
const OPERATOR_MAGIC: &[u8; 4] = b"TTO1";
const MAX_CORE_ENTRIES: u64 = 1 << 32;

pub fn write_train<W: Write>(mut w: W, x: &TensorTrain) -> Result<()> {
    w.write_all(TRAIN_MAGIC)?;
    put_u64(&mut w, x.d() as u64)?;
    for n in x.dims() {
        put_u64(&mut w, n as u64)?;
    }
    for r in x.ranks() {
        put_u64(&mut w, r as u64)?;
    }
    for c in x.cores() {
        put_values(&mut w, c.data())?;
    }
    Ok(())
}

pub fn read_train<R: Read>(mut r: R) -> Result<TensorTrain> {
    expect_magic(&mut r, TRAIN_MAGIC)?;
    let d = get_len(&mut r)?;
    let dims = get_list(&mut r, d)?;
    let ranks = get_list(&mut r, d + 1)?;
    let mut cores = Vec::with_capacity(d);
    for k in 0..d {
        let shape = [ranks[k], dims[k], ranks[k + 1]];
        cores.push(get_core(&mut r, &shape)?);
    }
    TensorTrain::from_cores(cores)
}

pub fn write_operator<W: Write>(mut w: W, a: &TtOperator) -> Result<()> {
    w.write_all(OPERATOR_MAGIC)?;
    put_u64(&mut w, a.d() as u64)?;
    for n in a.row_dims().into_iter().chain(a.col_dims()) {
        put_u64(&mut w, n as u64)?;
    }
    for r in a.ranks() {
        put_u64(&mut w, r as u64)?;
    }
    for c in a.cores() {
        put_values(&mut w, c.data())?;
    }
    Ok(())
}

pub fn read_operator<R: Read>(mut r: R) -> Result<TtOperator> {
    expect_magic(&mut r, OPERATOR_MAGIC)?;
    let d = get_len(&mut r)?;
    let rows = get_list(&mut r, d)?;
    let cols = get_list(&mut r, d)?;
    let ranks = get_list(&mut r, d + 1)?;
    let mut cores = Vec::with_capacity(d);
    for k in 0..d {
        let shape = [ranks[k], rows[k], cols[k], ranks[k + 1]];
        cores.push(get_core(&mut r, &shape)?);
    }
    TtOperator::from_cores(cores)
}

pub fn save_train(path: impl AsRef<Path>, x: &TensorTrain) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_train(&mut w, x)?;
    w.flush()?;
    Ok(())
}

pub fn load_train(path: impl AsRef<Path>) -> Result<TensorTrain> {
    read_train(BufReader::new(File::open(path)?))
}

pub fn save_operator(path: impl AsRef<Path>, a: &TtOperator) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_operator(&mut w, a)?;
    w.flush()?;
    Ok(())
}

pub fn load_operator(path: impl AsRef<Path>) -> Result<TtOperator> {
    read_operator(BufReader::new(File::open(path)?))
}

fn put_u64<W: Write>(w: &mut W, v: u64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn put_values<W: Write>(w: &mut W, vals: &[f64]) -> Result<()> {
    for v in vals {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Format("unexpected end of data".into()),
        _ => Error::Io(e),
    })
}

fn expect_magic<R: Read>(r: &mut R, magic: &[u8; 4]) -> Result<()> {
    let mut m = [0u8; 4];
    read_exact(r, &mut m)?;
    if &m != magic {
        return Err(Error::Format(format!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(&m),
            String::from_utf8_lossy(magic)
        )));
    }
    Ok(())
}

fn get_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    read_exact(r, &mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn get_len<R: Read>(r: &mut R) -> Result<usize> {
    let d = get_u64(r)?;
    if d == 0 || d > 4096 {
        return Err(Error::Format(format!("implausible number of cores {d}")));
    }
    Ok(d as usize)
}

fn get_list<R: Read>(r: &mut R, len: usize) -> Result<Vec<usize>> {
    (0..len)
        .map(|_| {
            let v = get_u64(r)?;
            if v == 0 || v > MAX_CORE_ENTRIES {
                return Err(Error::Format(format!("implausible size {v}")));
            }
            Ok(v as usize)
        })
        .collect()
}

fn get_core<R: Read>(r: &mut R, shape: &[usize]) -> Result<DenseTensor> {
    let n = shape.iter().try_fold(1u64, |a, &s| a.checked_mul(s as u64));
    let n = match n {
        Some(n) if n <= MAX_CORE_ENTRIES => n as usize,
        _ => return Err(Error::Format(format!("core {shape:?} too large"))),
    };
    let mut bytes = vec![0u8; n * 8];
    read_exact(r, &mut bytes)?;
    let data = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    DenseTensor::from_vec(shape, data)
}
