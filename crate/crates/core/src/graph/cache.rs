//! Binary cache for fast reloads. Little-endian, native-layout agnostic but
//! not promised stable across versions; the header carries a version word.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{BipartiteGraph, Csr};
use crate::error::{Error, Result};

pub const CACHE_MAGIC: &[u8; 8] = b"BFLYCSR\0";
const VERSION: u32 = 1;

fn put_u64(w: &mut impl Write, v: u64) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn get_u64(r: &mut impl Read) -> std::io::Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

pub fn write_cache(g: &BipartiteGraph, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let io = |e| Error::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    let inner = |w: &mut BufWriter<File>| -> std::io::Result<()> {
        w.write_all(CACHE_MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        put_u64(w, g.upper_count() as u64)?;
        put_u64(w, g.lower_count() as u64)?;
        put_u64(w, g.edge_count() as u64)?;
        for &l in g.upper_labels.iter().chain(&g.lower_labels) {
            put_u64(w, l)?;
        }
        for &o in &g.upper.offsets {
            put_u64(w, o as u64)?;
        }
        for &t in &g.upper.targets {
            w.write_all(&t.to_le_bytes())?;
        }
        w.flush()
    };
    inner(&mut w).map_err(io)
}

pub fn read_cache(path: impl AsRef<Path>) -> Result<BipartiteGraph> {
    let path = path.as_ref();
    let io = |e| Error::io(path, e);
    let mut r = BufReader::new(File::open(path).map_err(io)?);

    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(io)?;
    if &magic != CACHE_MAGIC {
        return Err(Error::BadCache("bad magic".into()));
    }
    let mut ver = [0u8; 4];
    r.read_exact(&mut ver).map_err(io)?;
    let ver = u32::from_le_bytes(ver);
    if ver != VERSION {
        return Err(Error::BadCache(format!("unsupported version {ver}")));
    }
    let nu = get_u64(&mut r).map_err(io)? as usize;
    let nl = get_u64(&mut r).map_err(io)? as usize;
    let m = get_u64(&mut r).map_err(io)? as usize;

    let read_labels = |r: &mut BufReader<File>, n: usize| -> std::io::Result<Vec<u64>> {
        (0..n).map(|_| get_u64(r)).collect()
    };
    let upper_labels = read_labels(&mut r, nu).map_err(io)?;
    let lower_labels = read_labels(&mut r, nl).map_err(io)?;
    let offsets = (0..=nu)
        .map(|_| get_u64(&mut r).map(|o| o as usize))
        .collect::<std::io::Result<Vec<_>>>()
        .map_err(io)?;
    if offsets.first() != Some(&0) || offsets.last() != Some(&m) || offsets.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::BadCache("corrupt offsets".into()));
    }
    let mut targets = Vec::with_capacity(m);
    let mut buf = [0u8; 4];
    for _ in 0..m {
        r.read_exact(&mut buf).map_err(io)?;
        let t = u32::from_le_bytes(buf);
        if t as usize >= nl {
            return Err(Error::BadCache(format!("neighbor {t} out of range")));
        }
        targets.push(t);
    }
    let upper = Csr { offsets, targets };
    let lower = upper.transpose(nl);
    let g = BipartiteGraph {
        upper,
        lower,
        upper_labels,
        lower_labels,
    };
    g.validate()?;
    Ok(g)
}
