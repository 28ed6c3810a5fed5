//! VVOL1 container.
//!
//! Layout: the six bytes `VVOL1\n`, a little-endian `u64` header length `H`,
//! `H` bytes of UTF-8 JSON
//! (`{"dims":[nx,ny,nz],"spacing_mm":[sx,sy,sz],"dtype":"u8"|"i16"|"f32","order":"x-fastest"}`),
//! then exactly `nx * ny * nz * width` bytes of little-endian voxel data.

use serde::{Deserialize, Serialize};

use super::{Dims, Dtype, Result, VolumeData, VolumeError, VoxelVolume};

pub const MAGIC: &[u8; 6] = b"VVOL1\n";
const ORDER: &str = "x-fastest";

#[derive(Serialize, Deserialize)]
struct Header {
    dims: [usize; 3],
    spacing_mm: [f64; 3],
    dtype: String,
    order: String,
}

pub fn write_volume(vol: &VoxelVolume) -> Vec<u8> {
    let dims = vol.dims();
    let header = Header {
        dims: dims.as_array(),
        spacing_mm: vol.spacing(),
        dtype: vol.dtype().name().to_string(),
        order: ORDER.to_string(),
    };
    let header = serde_json::to_vec(&header).expect("header serializes");

    let payload_len = vol.len() * vol.dtype().width();
    let mut out = Vec::with_capacity(MAGIC.len() + 8 + header.len() + payload_len);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(header.len() as u64).to_le_bytes());
    out.extend_from_slice(&header);
    match vol.data() {
        VolumeData::U8(v) => out.extend_from_slice(v),
        VolumeData::I16(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
        VolumeData::F32(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
    }
    out
}

pub fn read_volume(bytes: &[u8]) -> Result<VoxelVolume> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(VolumeError::BadMagic);
    }
    let rest = &bytes[MAGIC.len()..];
    if rest.len() < 8 {
        return Err(VolumeError::HeaderParseError("truncated header length".into()));
    }
    let header_len = u64::from_le_bytes(rest[..8].try_into().unwrap());
    let rest = &rest[8..];
    let header_len = usize::try_from(header_len).ok().filter(|&h| h <= rest.len()).ok_or_else(|| {
        VolumeError::HeaderParseError(format!("header length {header_len} exceeds remaining {} bytes", rest.len()))
    })?;
    let (header_bytes, payload) = rest.split_at(header_len);
    let header: Header =
        serde_json::from_slice(header_bytes).map_err(|e| VolumeError::HeaderParseError(e.to_string()))?;
    let dtype = Dtype::from_name(&header.dtype)?;
    if header.order != ORDER {
        return Err(VolumeError::HeaderParseError(format!("unsupported order {:?}", header.order)));
    }
    let [nx, ny, nz] = header.dims;
    let dims = Dims::new(nx, ny, nz);
    let expected = nx
        .checked_mul(ny)
        .and_then(|n| n.checked_mul(nz))
        .and_then(|n| n.checked_mul(dtype.width()))
        .ok_or_else(|| VolumeError::HeaderParseError("dims overflow".into()))?;
    if payload.len() != expected {
        return Err(VolumeError::PayloadSizeMismatch { expected, actual: payload.len() });
    }

    let data = match dtype {
        Dtype::U8 => VolumeData::U8(payload.to_vec()),
        Dtype::I16 => VolumeData::I16(payload.chunks_exact(2).map(|c| i16::from_le_bytes([c[0], c[1]])).collect()),
        Dtype::F32 => {
            VolumeData::F32(payload.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect())
        }
    };
    VoxelVolume::new(dims, header.spacing_mm, data).map_err(|e| match e {
        VolumeError::InvalidDims(_) | VolumeError::InvalidSpacing(_) => VolumeError::HeaderParseError(e.to_string()),
        other => other,
    })
}
