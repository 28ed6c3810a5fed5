use super::{Dims, Result, VolumeData, VolumeError, VoxelVolume};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interpolation {
    Trilinear,
    Nearest,
}

/// Per-axis sampling taps: up to two source indices with weights summing to 1.
#[derive(Debug, Clone, Copy)]
struct Taps {
    idx: [usize; 2],
    w: [f64; 2],
}

fn axis_taps(n_in: usize, n_out: usize, ratio: f64, mode: Interpolation) -> Vec<Taps> {
    let last = n_in - 1;
    (0..n_out)
        .map(|j| {
            // Output center (j + 0.5) * target, expressed in input voxel units.
            let pos = (j as f64 + 0.5) * ratio;
            match mode {
                Interpolation::Nearest => {
                    let i = (pos.floor().max(0.0) as usize).min(last);
                    Taps { idx: [i, i], w: [1.0, 0.0] }
                }
                Interpolation::Trilinear => {
                    let u = pos - 0.5;
                    if u <= 0.0 {
                        Taps { idx: [0, 0], w: [1.0, 0.0] }
                    } else if u >= last as f64 {
                        Taps { idx: [last, last], w: [1.0, 0.0] }
                    } else {
                        let i0 = u.floor() as usize;
                        let f = u - i0 as f64;
                        Taps { idx: [i0, (i0 + 1).min(last)], w: [1.0 - f, f] }
                    }
                }
            }
        })
        .collect()
}

/// Resamples onto an isotropic grid of `target_mm` spacing.
///
/// Output dims are `max(1, round(n * s / target_mm))` per axis. Output sample
/// `j` reads the input at physical position `(j + 0.5) * target_mm`; reads
/// beyond the outermost input centers clamp to the edge voxel. Integer
/// dtypes round to nearest and saturate.
pub fn resample_isotropic(vol: &VoxelVolume, target_mm: f64, mode: Interpolation) -> Result<VoxelVolume> {
    if !target_mm.is_finite() || target_mm <= 0.0 {
        return Err(VolumeError::NonPositiveTarget(target_mm));
    }
    let dims_in = vol.dims().as_array();
    let spacing = vol.spacing();
    let mut dims_out = [0usize; 3];
    let mut taps: Vec<Vec<Taps>> = Vec::with_capacity(3);
    for a in 0..3 {
        let n = ((dims_in[a] as f64 * spacing[a]) / target_mm).round().max(1.0) as usize;
        dims_out[a] = n;
        taps.push(axis_taps(dims_in[a], n, target_mm / spacing[a], mode));
    }
    let out_dims = Dims::new(dims_out[0], dims_out[1], dims_out[2]);
    let in_dims = vol.dims();
    let src = vol.data();

    let sample = |x: usize, y: usize, z: usize| -> f64 {
        let (tx, ty, tz) = (taps[0][x], taps[1][y], taps[2][z]);
        let mut acc = 0.0;
        for c in 0..2 {
            if tz.w[c] == 0.0 {
                continue;
            }
            for b in 0..2 {
                if ty.w[b] == 0.0 {
                    continue;
                }
                for a in 0..2 {
                    let w = tx.w[a] * ty.w[b] * tz.w[c];
                    if w == 0.0 {
                        continue;
                    }
                    acc += w * src.get_f64(in_dims.index(tx.idx[a], ty.idx[b], tz.idx[c]));
                }
            }
        }
        acc
    };

    let n = out_dims.len();
    let mut values = Vec::with_capacity(n);
    for z in 0..out_dims.nz {
        for y in 0..out_dims.ny {
            for x in 0..out_dims.nx {
                values.push(sample(x, y, z));
            }
        }
    }
    let data = match src {
        VolumeData::U8(_) => VolumeData::U8(values.iter().map(|v| v.round().clamp(0.0, 255.0) as u8).collect()),
        VolumeData::I16(_) => {
            VolumeData::I16(values.iter().map(|v| v.round().clamp(i16::MIN as f64, i16::MAX as f64) as i16).collect())
        }
        VolumeData::F32(_) => VolumeData::F32(values.iter().map(|&v| v as f32).collect()),
    };
    VoxelVolume::new(out_dims, [target_mm; 3], data)
}
