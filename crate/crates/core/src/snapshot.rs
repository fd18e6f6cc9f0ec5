//! Binary MPS snapshots for checkpoint and resume.
//!
//! Layout, all little-endian:
//!
//! ```text
//! magic  b"XXZMPS\0\0"
//! u32    format version
//! u32    flags (bit 0: sector labels present)
//! u64    n_sites, u64 step, f64 time, f64 cumulative discarded weight
//! per site:  u64 left, u64 right, then (re, im) f64 pairs for spin 0 then
//!            spin 1, row-major over (left, right)
//! per bond:  u64 len, len × f64 Schmidt weights
//! per cut 0..=n_sites (if flagged): u64 len, len × i32 labels
//! ```

use std::io::{self, Read, Write};

use faer::Mat;
use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::mps::{MpsState, SiteTensor};

pub const MAGIC: [u8; 8] = *b"XXZMPS\0\0";
pub const FORMAT_VERSION: u32 = 1;

const FLAG_SECTORS: u32 = 1;
// guards allocation on corrupt input
const MAX_DIM: u64 = 1 << 16;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("not a snapshot file")]
    BadMagic,
    #[error("unsupported snapshot version {0}")]
    UnsupportedVersion(u32),
    #[error("malformed snapshot: {0}")]
    Malformed(String),
}

/// An MPS together with the evolution clock it was taken at.
#[derive(Clone, Debug)]
pub struct Snapshot {
    pub step: u64,
    pub time: f64,
    pub cumulative_discarded_weight: f64,
    pub state: MpsState,
}

pub fn write_snapshot<W: Write>(mut w: W, snap: &Snapshot) -> Result<(), SnapshotError> {
    let state = &snap.state;
    let labels = state.sector_labels();
    w.write_all(&MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&(if labels.is_some() { FLAG_SECTORS } else { 0 }).to_le_bytes())?;
    put_u64(&mut w, state.n_sites() as u64)?;
    put_u64(&mut w, snap.step)?;
    put_f64(&mut w, snap.time)?;
    put_f64(&mut w, snap.cumulative_discarded_weight)?;
    for site in state.site_tensors() {
        let (l, r) = (site.left_dim(), site.right_dim());
        put_u64(&mut w, l as u64)?;
        put_u64(&mut w, r as u64)?;
        for s in 0..2 {
            for a in 0..l {
                for g in 0..r {
                    let z = site.get(a, s, g);
                    put_f64(&mut w, z.re)?;
                    put_f64(&mut w, z.im)?;
                }
            }
        }
    }
    for bond in state.bond_weights() {
        put_u64(&mut w, bond.len() as u64)?;
        for &x in bond {
            put_f64(&mut w, x)?;
        }
    }
    if let Some(labels) = labels {
        for cut in labels {
            put_u64(&mut w, cut.len() as u64)?;
            for &q in cut {
                w.write_all(&q.to_le_bytes())?;
            }
        }
    }
    Ok(())
}

pub fn read_snapshot<R: Read>(mut r: R) -> Result<Snapshot, SnapshotError> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if magic != MAGIC {
        return Err(SnapshotError::BadMagic);
    }
    let version = get_u32(&mut r)?;
    if version != FORMAT_VERSION {
        return Err(SnapshotError::UnsupportedVersion(version));
    }
    let flags = get_u32(&mut r)?;
    let n = get_dim(&mut r, "n_sites")?;
    if n < 2 {
        return Err(SnapshotError::Malformed(format!("{n} sites")));
    }
    let step = get_u64(&mut r)?;
    let time = get_f64(&mut r)?;
    let cumulative_discarded_weight = get_f64(&mut r)?;

    let mut sites = Vec::with_capacity(n);
    let mut prev_right = 1;
    for i in 0..n {
        let l = get_dim(&mut r, "left dimension")?;
        let rd = get_dim(&mut r, "right dimension")?;
        if l != prev_right || l == 0 || rd == 0 {
            return Err(SnapshotError::Malformed(format!("site {i} has shape {l}x{rd} after right dimension {prev_right}")));
        }
        let mut phys = [Mat::<C64>::zeros(l, rd), Mat::<C64>::zeros(l, rd)];
        for m in &mut phys {
            for a in 0..l {
                for g in 0..rd {
                    let re = get_f64(&mut r)?;
                    let im = get_f64(&mut r)?;
                    m[(a, g)] = C64::new(re, im);
                }
            }
        }
        sites.push(SiteTensor { phys });
        prev_right = rd;
    }
    if prev_right != 1 {
        return Err(SnapshotError::Malformed("last site must close with dimension 1".into()));
    }

    let mut weights = Vec::with_capacity(n - 1);
    for b in 0..n - 1 {
        let len = get_dim(&mut r, "weight count")?;
        if len != sites[b].right_dim() {
            return Err(SnapshotError::Malformed(format!("bond {b} has {len} weights for dimension {}", sites[b].right_dim())));
        }
        weights.push((0..len).map(|_| get_f64(&mut r)).collect::<Result<Vec<_>, _>>()?);
    }

    let charges = if flags & FLAG_SECTORS != 0 {
        let mut cuts = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let len = get_dim(&mut r, "label count")?;
            let expected = if k == 0 { 1 } else { sites[k - 1].right_dim() };
            if len != expected {
                return Err(SnapshotError::Malformed(format!("cut {k} has {len} labels, expected {expected}")));
            }
            let mut cut = Vec::with_capacity(len);
            for _ in 0..len {
                let mut b = [0u8; 4];
                r.read_exact(&mut b)?;
                cut.push(i32::from_le_bytes(b));
            }
            cuts.push(cut);
        }
        Some(cuts)
    } else {
        None
    };

    Ok(Snapshot { step, time, cumulative_discarded_weight, state: MpsState::from_parts(sites, weights, charges) })
}

fn put_u64<W: Write>(w: &mut W, x: u64) -> io::Result<()> {
    w.write_all(&x.to_le_bytes())
}

fn put_f64<W: Write>(w: &mut W, x: f64) -> io::Result<()> {
    w.write_all(&x.to_le_bytes())
}

fn get_u32<R: Read>(r: &mut R) -> io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn get_u64<R: Read>(r: &mut R) -> io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn get_f64<R: Read>(r: &mut R) -> io::Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

fn get_dim<R: Read>(r: &mut R, what: &str) -> Result<usize, SnapshotError> {
    let x = get_u64(r)?;
    if x > MAX_DIM {
        return Err(SnapshotError::Malformed(format!("{what} {x} is implausibly large")));
    }
    Ok(x as usize)
}
