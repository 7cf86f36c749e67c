//! Binary network checkpoints.
//!
//! Layout, all integers and floats little-endian:
//!
//! | bytes            | content                                        |
//! |------------------|------------------------------------------------|
//! | 8                | magic `b"MYVTMLP\0"`                           |
//! | 4 (u32)          | format version (1)                             |
//! | 4 (u32)          | layer count `L`                                |
//! | 4 * (L + 1)      | layer widths, input first (u32 each)           |
//! | L                | activation codes (0 relu, 1 tanh, 2 sigmoid, 3 identity) |
//! | 8 (u64)          | parameter count `P`                            |
//! | 8 * P            | parameters as f64, layer by layer: weights row-major `out x in`, then bias |

use std::io::{Read, Write};

use super::{Activation, Mlp};
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: [u8; 8] = *b"MYVTMLP\0";
pub const CHECKPOINT_VERSION: u32 = 1;

pub fn write_checkpoint<W: Write>(net: &Mlp, mut out: W) -> Result<()> {
    let dims = net.dims();
    let mut buf = Vec::with_capacity(32 + 8 * net.n_params());
    buf.extend_from_slice(&CHECKPOINT_MAGIC);
    buf.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(net.n_layers() as u32).to_le_bytes());
    for d in &dims {
        buf.extend_from_slice(&(*d as u32).to_le_bytes());
    }
    buf.extend(net.activations().iter().map(|a| a.code()));
    buf.extend_from_slice(&(net.n_params() as u64).to_le_bytes());
    for p in net.params() {
        buf.extend_from_slice(&p.to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

fn take<'a>(bytes: &mut &'a [u8], n: usize) -> Result<&'a [u8]> {
    if bytes.len() < n {
        return Err(Error::Checkpoint("truncated file".into()));
    }
    let (head, tail) = bytes.split_at(n);
    *bytes = tail;
    Ok(head)
}

fn take_u32(bytes: &mut &[u8]) -> Result<u32> {
    Ok(u32::from_le_bytes(take(bytes, 4)?.try_into().unwrap()))
}

pub fn read_checkpoint<R: Read>(mut input: R) -> Result<Mlp> {
    let mut raw = Vec::new();
    input.read_to_end(&mut raw)?;
    let mut bytes = raw.as_slice();
    if take(&mut bytes, 8)? != CHECKPOINT_MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let version = take_u32(&mut bytes)?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let n_layers = take_u32(&mut bytes)? as usize;
    let dims = (0..=n_layers)
        .map(|_| take_u32(&mut bytes).map(|d| d as usize))
        .collect::<Result<Vec<_>>>()?;
    let acts = take(&mut bytes, n_layers)?
        .iter()
        .map(|&c| Activation::from_code(c).ok_or_else(|| Error::Checkpoint(format!("unknown activation code {c}"))))
        .collect::<Result<Vec<_>>>()?;
    let n_params = u64::from_le_bytes(take(&mut bytes, 8)?.try_into().unwrap()) as usize;
    let params = take(&mut bytes, 8 * n_params)?
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    if !bytes.is_empty() {
        return Err(Error::Checkpoint(format!("{} trailing bytes", bytes.len())));
    }
    Mlp::from_params(&dims, &acts, params).map_err(|e| Error::Checkpoint(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    #[test]
    fn header_layout() {
        let net = Mlp::from_params(&[1, 1], &[Activation::Sigmoid], vec![2.0, -1.0]).unwrap();
        let mut buf = Vec::new();
        write_checkpoint(&net, &mut buf).unwrap();
        assert_eq!(&buf[..8], b"MYVTMLP\0");
        assert_eq!(&buf[8..12], &1u32.to_le_bytes());
        assert_eq!(&buf[12..16], &1u32.to_le_bytes());
        assert_eq!(&buf[16..24], &[1, 0, 0, 0, 1, 0, 0, 0]);
        assert_eq!(buf[24], 2);
        assert_eq!(&buf[25..33], &2u64.to_le_bytes());
        assert_eq!(&buf[33..41], &2.0f64.to_le_bytes());
        assert_eq!(buf.len(), 49);
    }

    #[test]
    fn round_trip_and_corruption() {
        let mut rng = Rng::new(2);
        let net = Mlp::new(&[4, 6, 1], &[Activation::Tanh, Activation::Identity], &mut rng, 1.0).unwrap();
        let mut buf = Vec::new();
        write_checkpoint(&net, &mut buf).unwrap();
        assert_eq!(read_checkpoint(buf.as_slice()).unwrap(), net);

        assert!(read_checkpoint(&buf[..buf.len() - 1]).is_err());
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(read_checkpoint(bad.as_slice()).is_err());
        let mut extra = buf;
        extra.push(0);
        assert!(read_checkpoint(extra.as_slice()).is_err());
    }
}
