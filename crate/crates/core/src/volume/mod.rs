//! Voxel volumes, label maps and binary masks.
//!
//! All grids are linearized x-fastest: `index = x + nx * (y + ny * z)`.
//! Voxel `i` along an axis with spacing `s` covers the physical interval
//! `[i * s, (i + 1) * s)` and has its center at `(i + 0.5) * s`.

mod components;
mod io;
mod resample;

pub use components::{flood_fill, label_components, largest_component, Component};
pub use io::{read_volume, write_volume, MAGIC};
pub use resample::{resample_isotropic, Interpolation};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VolumeError {
    #[error("BadMagic: file does not start with the VVOL1 magic")]
    BadMagic,
    #[error("HeaderParseError: {0}")]
    HeaderParseError(String),
    #[error("PayloadSizeMismatch: expected {expected} payload bytes, found {actual}")]
    PayloadSizeMismatch { expected: usize, actual: usize },
    #[error("UnknownDtype: {0:?}")]
    UnknownDtype(String),
    #[error("NonPositiveTarget: target spacing {0} must be finite and > 0")]
    NonPositiveTarget(f64),
    #[error("EmptyMask: mask has no foreground voxel")]
    EmptyMask,
    #[error("InvalidDims: every dimension must be positive, got {0:?}")]
    InvalidDims([usize; 3]),
    #[error("InvalidSpacing: spacing must be finite and > 0, got {0:?}")]
    InvalidSpacing([f64; 3]),
    #[error("DataLengthMismatch: dims require {expected} voxels, data has {actual}")]
    DataLengthMismatch { expected: usize, actual: usize },
    #[error("InvalidLabel: voxel {index} has value {value}, labels must be 0, 1 or 2")]
    InvalidLabel { index: usize, value: f64 },
    #[error("NotBinary: voxel {index} has value {value}, masks must be 0 or 1")]
    NotBinary { index: usize, value: f64 },
    #[error("InvalidConnectivity: {0} (expected 6 or 26)")]
    InvalidConnectivity(u32),
}

pub type Result<T> = std::result::Result<T, VolumeError>;

/// Grid size in voxels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dims {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
}

impl Dims {
    pub fn new(nx: usize, ny: usize, nz: usize) -> Self {
        Dims { nx, ny, nz }
    }

    pub fn as_array(&self) -> [usize; 3] {
        [self.nx, self.ny, self.nz]
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.nx * (y + self.ny * z)
    }

    #[inline]
    pub fn coords(&self, index: usize) -> (usize, usize, usize) {
        let x = index % self.nx;
        let yz = index / self.nx;
        (x, yz % self.ny, yz / self.ny)
    }

    /// Linear index of a signed coordinate, or `None` when it lies outside the grid.
    #[inline]
    pub fn checked_index(&self, x: i64, y: i64, z: i64) -> Option<usize> {
        if x < 0 || y < 0 || z < 0 {
            return None;
        }
        let (x, y, z) = (x as usize, y as usize, z as usize);
        if x >= self.nx || y >= self.ny || z >= self.nz {
            return None;
        }
        Some(self.index(x, y, z))
    }

    pub fn on_border(&self, index: usize) -> bool {
        let (x, y, z) = self.coords(index);
        x == 0 || y == 0 || z == 0 || x + 1 == self.nx || y + 1 == self.ny || z + 1 == self.nz
    }

    /// In-grid neighbors of `index` under the given connectivity.
    pub fn neighbors(&self, index: usize, connectivity: Connectivity) -> impl Iterator<Item = usize> + '_ {
        let (x, y, z) = self.coords(index);
        connectivity
            .offsets()
            .iter()
            .filter_map(move |&(dx, dy, dz)| self.checked_index(x as i64 + dx, y as i64 + dy, z as i64 + dz))
    }
}

const OFFSETS_6: [(i64, i64, i64); 6] = [(-1, 0, 0), (1, 0, 0), (0, -1, 0), (0, 1, 0), (0, 0, -1), (0, 0, 1)];

const OFFSETS_26: [(i64, i64, i64); 26] = {
    let mut out = [(0, 0, 0); 26];
    let mut n = 0;
    let mut dz = -1;
    while dz <= 1 {
        let mut dy = -1;
        while dy <= 1 {
            let mut dx = -1;
            while dx <= 1 {
                if !(dx == 0 && dy == 0 && dz == 0) {
                    out[n] = (dx, dy, dz);
                    n += 1;
                }
                dx += 1;
            }
            dy += 1;
        }
        dz += 1;
    }
    out
};

/// Voxel adjacency: face neighbors only, or faces, edges and corners.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Connectivity {
    #[default]
    Six,
    TwentySix,
}

impl Connectivity {
    pub fn offsets(&self) -> &'static [(i64, i64, i64)] {
        match self {
            Connectivity::Six => &OFFSETS_6,
            Connectivity::TwentySix => &OFFSETS_26,
        }
    }

    pub fn count(&self) -> u32 {
        match self {
            Connectivity::Six => 6,
            Connectivity::TwentySix => 26,
        }
    }
}

impl TryFrom<u32> for Connectivity {
    type Error = VolumeError;

    fn try_from(n: u32) -> Result<Self> {
        match n {
            6 => Ok(Connectivity::Six),
            26 => Ok(Connectivity::TwentySix),
            other => Err(VolumeError::InvalidConnectivity(other)),
        }
    }
}

/// Scalar type of a voxel payload.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dtype {
    U8,
    I16,
    F32,
}

impl Dtype {
    pub fn width(&self) -> usize {
        match self {
            Dtype::U8 => 1,
            Dtype::I16 => 2,
            Dtype::F32 => 4,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Dtype::U8 => "u8",
            Dtype::I16 => "i16",
            Dtype::F32 => "f32",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "u8" => Ok(Dtype::U8),
            "i16" => Ok(Dtype::I16),
            "f32" => Ok(Dtype::F32),
            other => Err(VolumeError::UnknownDtype(other.to_string())),
        }
    }
}

#[derive(Debug, Clone)]
pub enum VolumeData {
    U8(Vec<u8>),
    I16(Vec<i16>),
    F32(Vec<f32>),
}

impl VolumeData {
    pub fn dtype(&self) -> Dtype {
        match self {
            VolumeData::U8(_) => Dtype::U8,
            VolumeData::I16(_) => Dtype::I16,
            VolumeData::F32(_) => Dtype::F32,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            VolumeData::U8(v) => v.len(),
            VolumeData::I16(v) => v.len(),
            VolumeData::F32(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn get_f64(&self, index: usize) -> f64 {
        match self {
            VolumeData::U8(v) => v[index] as f64,
            VolumeData::I16(v) => v[index] as f64,
            VolumeData::F32(v) => v[index] as f64,
        }
    }
}

// f32 payloads compare by bit pattern so that NaNs survive equality checks.
impl PartialEq for VolumeData {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (VolumeData::U8(a), VolumeData::U8(b)) => a == b,
            (VolumeData::I16(a), VolumeData::I16(b)) => a == b,
            (VolumeData::F32(a), VolumeData::F32(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
            }
            _ => false,
        }
    }
}

fn validate_geometry(dims: Dims, spacing: [f64; 3]) -> Result<()> {
    if dims.nx == 0 || dims.ny == 0 || dims.nz == 0 {
        return Err(VolumeError::InvalidDims(dims.as_array()));
    }
    if spacing.iter().any(|s| !s.is_finite() || *s <= 0.0) {
        return Err(VolumeError::InvalidSpacing(spacing));
    }
    Ok(())
}

fn check_len(dims: Dims, actual: usize) -> Result<()> {
    let expected = dims.len();
    if expected != actual {
        return Err(VolumeError::DataLengthMismatch { expected, actual });
    }
    Ok(())
}

/// A 3D scalar grid with physical spacing in millimeters.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelVolume {
    dims: Dims,
    spacing: [f64; 3],
    data: VolumeData,
}

impl VoxelVolume {
    pub fn new(dims: Dims, spacing: [f64; 3], data: VolumeData) -> Result<Self> {
        validate_geometry(dims, spacing)?;
        check_len(dims, data.len())?;
        Ok(VoxelVolume { dims, spacing, data })
    }

    pub fn zeros(dims: Dims, spacing: [f64; 3], dtype: Dtype) -> Result<Self> {
        let n = dims.len();
        let data = match dtype {
            Dtype::U8 => VolumeData::U8(vec![0; n]),
            Dtype::I16 => VolumeData::I16(vec![0; n]),
            Dtype::F32 => VolumeData::F32(vec![0.0; n]),
        };
        VoxelVolume::new(dims, spacing, data)
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn dtype(&self) -> Dtype {
        self.data.dtype()
    }

    pub fn data(&self) -> &VolumeData {
        &self.data
    }

    pub fn into_data(self) -> VolumeData {
        self.data
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Physical extent along the longest axis, in mm.
    pub fn max_extent_mm(&self) -> f64 {
        max_extent(self.dims, self.spacing)
    }
}

pub(crate) fn max_extent(dims: Dims, spacing: [f64; 3]) -> f64 {
    let d = dims.as_array();
    (0..3).map(|a| d[a] as f64 * spacing[a]).fold(0.0, f64::max)
}

/// Segmentation label: 0 background, 1 blood pool, 2 myocardium.
pub const BACKGROUND: u8 = 0;
pub const BLOOD_POOL: u8 = 1;
pub const MYOCARDIUM: u8 = 2;

/// A `u8` volume whose voxels are all in {0, 1, 2}.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelVolume {
    dims: Dims,
    spacing: [f64; 3],
    data: Vec<u8>,
}

impl LabelVolume {
    pub fn new(dims: Dims, spacing: [f64; 3], data: Vec<u8>) -> Result<Self> {
        validate_geometry(dims, spacing)?;
        check_len(dims, data.len())?;
        if let Some((index, &v)) = data.iter().enumerate().find(|(_, &v)| v > MYOCARDIUM) {
            return Err(VolumeError::InvalidLabel { index, value: v as f64 });
        }
        Ok(LabelVolume { dims, spacing, data })
    }

    pub fn background(dims: Dims, spacing: [f64; 3]) -> Result<Self> {
        LabelVolume::new(dims, spacing, vec![BACKGROUND; dims.len()])
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, index: usize) -> u8 {
        self.data[index]
    }

    pub fn count(&self, label: u8) -> usize {
        self.data.iter().filter(|&&v| v == label).count()
    }

    pub fn is_all_background(&self) -> bool {
        self.data.iter().all(|&v| v == BACKGROUND)
    }

    /// Binary mask of voxels carrying `label`.
    pub fn mask_of(&self, label: u8) -> Mask {
        self.mask_where(|v| v == label)
    }

    pub fn mask_where(&self, pred: impl Fn(u8) -> bool) -> Mask {
        Mask { dims: self.dims, spacing: self.spacing, data: self.data.iter().map(|&v| pred(v)).collect() }
    }

    pub fn into_volume(self) -> VoxelVolume {
        VoxelVolume { dims: self.dims, spacing: self.spacing, data: VolumeData::U8(self.data) }
    }

    pub fn to_volume(&self) -> VoxelVolume {
        self.clone().into_volume()
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    /// Nearest-neighbor resampling onto an isotropic grid; never invents labels.
    pub fn resample_isotropic(&self, target_mm: f64) -> Result<LabelVolume> {
        let out = resample_isotropic(&self.to_volume(), target_mm, Interpolation::Nearest)?;
        LabelVolume::try_from(out)
    }
}

impl TryFrom<VoxelVolume> for LabelVolume {
    type Error = VolumeError;

    fn try_from(vol: VoxelVolume) -> Result<Self> {
        let VoxelVolume { dims, spacing, data } = vol;
        let labels = match data {
            VolumeData::U8(v) => v,
            other => {
                // Accept integral {0,1,2} values stored in a wider type.
                let mut out = Vec::with_capacity(other.len());
                for index in 0..other.len() {
                    let value = other.get_f64(index);
                    if value != 0.0 && value != 1.0 && value != 2.0 {
                        return Err(VolumeError::InvalidLabel { index, value });
                    }
                    out.push(value as u8);
                }
                out
            }
        };
        LabelVolume::new(dims, spacing, labels)
    }
}

/// A binary volume.
#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    dims: Dims,
    spacing: [f64; 3],
    data: Vec<bool>,
}

impl Mask {
    pub fn new(dims: Dims, spacing: [f64; 3], data: Vec<bool>) -> Result<Self> {
        validate_geometry(dims, spacing)?;
        check_len(dims, data.len())?;
        Ok(Mask { dims, spacing, data })
    }

    pub fn empty(dims: Dims, spacing: [f64; 3]) -> Result<Self> {
        Mask::new(dims, spacing, vec![false; dims.len()])
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [bool] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, index: usize) -> bool {
        self.data[index]
    }

    #[inline]
    pub fn set(&mut self, index: usize, value: bool) {
        self.data[index] = value;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn complement(&self) -> Mask {
        Mask { dims: self.dims, spacing: self.spacing, data: self.data.iter().map(|b| !b).collect() }
    }

    pub fn union(&self, other: &Mask) -> Mask {
        self.zip_with(other, |a, b| a || b)
    }

    pub fn intersection(&self, other: &Mask) -> Mask {
        self.zip_with(other, |a, b| a && b)
    }

    fn zip_with(&self, other: &Mask, f: impl Fn(bool, bool) -> bool) -> Mask {
        assert_eq!(self.dims, other.dims, "mask dims differ");
        Mask {
            dims: self.dims,
            spacing: self.spacing,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    /// True when every foreground voxel of `self` is foreground in `other`.
    pub fn is_subset_of(&self, other: &Mask) -> bool {
        self.dims == other.dims && self.data.iter().zip(&other.data).all(|(&a, &b)| !a || b)
    }

    pub fn to_volume(&self) -> VoxelVolume {
        VoxelVolume {
            dims: self.dims,
            spacing: self.spacing,
            data: VolumeData::U8(self.data.iter().map(|&b| b as u8).collect()),
        }
    }
}

impl TryFrom<&VoxelVolume> for Mask {
    type Error = VolumeError;

    fn try_from(vol: &VoxelVolume) -> Result<Self> {
        let mut data = Vec::with_capacity(vol.len());
        for index in 0..vol.len() {
            let value = vol.data().get_f64(index);
            if value != 0.0 && value != 1.0 {
                return Err(VolumeError::NotBinary { index, value });
            }
            data.push(value == 1.0);
        }
        Mask::new(vol.dims(), vol.spacing(), data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_and_coords_agree() {
        let d = Dims::new(4, 3, 2);
        for i in 0..d.len() {
            let (x, y, z) = d.coords(i);
            assert_eq!(d.index(x, y, z), i);
        }
        assert_eq!(d.index(1, 2, 1), 1 + 4 * (2 + 3));
    }

    #[test]
    fn neighbor_counts() {
        let d = Dims::new(3, 3, 3);
        let center = d.index(1, 1, 1);
        assert_eq!(d.neighbors(center, Connectivity::Six).count(), 6);
        assert_eq!(d.neighbors(center, Connectivity::TwentySix).count(), 26);
        assert_eq!(d.neighbors(0, Connectivity::Six).count(), 3);
        assert_eq!(d.neighbors(0, Connectivity::TwentySix).count(), 7);
    }

    #[test]
    fn rejects_bad_geometry() {
        assert!(matches!(
            VoxelVolume::zeros(Dims::new(0, 1, 1), [1.0; 3], Dtype::U8),
            Err(VolumeError::InvalidDims(_))
        ));
        assert!(matches!(
            VoxelVolume::zeros(Dims::new(1, 1, 1), [1.0, f64::NAN, 1.0], Dtype::U8),
            Err(VolumeError::InvalidSpacing(_))
        ));
        assert!(matches!(
            VoxelVolume::new(Dims::new(2, 1, 1), [1.0; 3], VolumeData::U8(vec![0])),
            Err(VolumeError::DataLengthMismatch { expected: 2, actual: 1 })
        ));
    }

    #[test]
    fn label_volume_rejects_out_of_range() {
        let err = LabelVolume::new(Dims::new(2, 1, 1), [1.0; 3], vec![0, 3]).unwrap_err();
        assert_eq!(err, VolumeError::InvalidLabel { index: 1, value: 3.0 });
        let vol = VoxelVolume::new(Dims::new(2, 1, 1), [1.0; 3], VolumeData::I16(vec![2, 1])).unwrap();
        assert_eq!(LabelVolume::try_from(vol).unwrap().data(), &[2, 1]);
    }

    #[test]
    fn f32_equality_is_bitwise() {
        let a = VolumeData::F32(vec![f32::NAN, 0.0]);
        let b = VolumeData::F32(vec![f32::NAN, -0.0]);
        assert_eq!(a, a.clone());
        assert_ne!(a, b);
    }
}
