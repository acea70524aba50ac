//! FPHI binary snapshots.
//!
//! Layout, all little-endian:
//!   magic "FPHI" | u32 version = 1 | u64 vertex_count | u64 frame_count |
//!   f64 times[frame_count] | f64 values[frame_count * vertex_count].

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::field::Field;

pub const MAGIC: [u8; 4] = *b"FPHI";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub times: Vec<f64>,
    /// frames[i] has one value per vertex at times[i].
    pub frames: Vec<Vec<f64>>,
}

impl Snapshot {
    pub fn from_field(field: &Field) -> Snapshot {
        Snapshot {
            times: vec![0.0],
            frames: vec![field.values.clone()],
        }
    }

    pub fn from_trajectory(times: &[f64], fields: &[Field]) -> Result<Snapshot> {
        if times.len() != fields.len() {
            return Err(Error::Domain("times and fields lengths differ".into()));
        }
        if fields.is_empty() {
            return Err(Error::Domain("empty trajectory".into()));
        }
        Ok(Snapshot {
            times: times.to_vec(),
            frames: fields.iter().map(|f| f.values.clone()).collect(),
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.frames.first().map_or(0, Vec::len)
    }
}

pub fn write(path: &Path, snap: &Snapshot) -> Result<()> {
    let vertex_count = snap.vertex_count() as u64;
    if snap.frames.iter().any(|f| f.len() as u64 != vertex_count) {
        return Err(Error::Domain("ragged frames".into()));
    }
    let mut buf = Vec::with_capacity(
        24 + 8 * snap.times.len() + 8 * snap.frames.len() * vertex_count as usize,
    );
    buf.extend_from_slice(&MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&vertex_count.to_le_bytes());
    buf.extend_from_slice(&(snap.frames.len() as u64).to_le_bytes());
    for t in &snap.times {
        buf.extend_from_slice(&t.to_le_bytes());
    }
    for frame in &snap.frames {
        for v in frame {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    let mut file = std::fs::File::create(path)?;
    file.write_all(&buf)?;
    Ok(())
}

pub fn read(path: &Path) -> Result<Snapshot> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() < 24 {
        return Err(Error::Corruption("file shorter than the FPHI header".into()));
    }
    if bytes[0..4] != MAGIC {
        return Err(Error::Format("bad magic; not an FPHI snapshot".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(Error::Format(format!(
            "unsupported FPHI version {version}, expected {VERSION}"
        )));
    }
    let vertex_count = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let frame_count = u64::from_le_bytes(bytes[16..24].try_into().unwrap()) as usize;
    let need = 24usize
        .checked_add(8 * frame_count)
        .and_then(|x| x.checked_add(8 * frame_count * vertex_count))
        .ok_or_else(|| Error::Corruption("header sizes overflow".into()))?;
    if bytes.len() < need {
        return Err(Error::Corruption(format!(
            "truncated payload: {} bytes, header promises {need}",
            bytes.len()
        )));
    }
    let f64_at = |off: usize| f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
    let times: Vec<f64> = (0..frame_count).map(|i| f64_at(24 + 8 * i)).collect();
    let base = 24 + 8 * frame_count;
    let frames: Vec<Vec<f64>> = (0..frame_count)
        .map(|i| {
            (0..vertex_count)
                .map(|j| f64_at(base + 8 * (i * vertex_count + j)))
                .collect()
        })
        .collect();
    Ok(Snapshot { times, frames })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmpdir() -> std::path::PathBuf {
        let dir = std::env::temp_dir().join(format!("fphi-snap-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        dir
    }

    #[test]
    fn roundtrip_bit_exact() {
        let path = tmpdir().join("roundtrip.fphi");
        let field = Field::new(vec![1.5, -2.25, 1e-300, f64::MIN_POSITIVE, 0.0]);
        let snap = Snapshot::from_field(&field);
        write(&path, &snap).unwrap();
        let back = read(&path).unwrap();
        assert_eq!(snap, back);
        // Writing the read value reproduces identical bytes.
        let path2 = tmpdir().join("roundtrip2.fphi");
        write(&path2, &back).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&path2).unwrap());
    }

    #[test]
    fn version_mismatch_rejected() {
        let path = tmpdir().join("badversion.fphi");
        let snap = Snapshot::from_field(&Field::new(vec![1.0]));
        write(&path, &snap).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[4] = 2;
        std::fs::write(&path, &bytes).unwrap();
        match read(&path) {
            Err(Error::Format(msg)) => assert!(msg.contains("version 2")),
            other => panic!("expected a version error, got {other:?}"),
        }
    }

    #[test]
    fn truncation_rejected_without_partial_data() {
        let path = tmpdir().join("truncated.fphi");
        let snap =
            Snapshot::from_trajectory(&[0.0, 1.0], &[Field::new(vec![1.0, 2.0]), Field::new(vec![3.0, 4.0])])
                .unwrap();
        write(&path, &snap).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 4]).unwrap();
        assert!(matches!(read(&path), Err(Error::Corruption(_))));
    }

    #[test]
    fn bad_magic_rejected() {
        let path = tmpdir().join("badmagic.fphi");
        std::fs::write(&path, b"NOPEnope_nope_nope_nope_").unwrap();
        assert!(matches!(read(&path), Err(Error::Format(_))));
    }
}
