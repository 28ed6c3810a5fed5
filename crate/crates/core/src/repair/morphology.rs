//! Binary dilation and erosion with a discrete Euclidean ball.
//!
//! The structuring element of radius `r` is every integer offset with
//! `dx² + dy² + dz² <= r²`, in voxel units. Both operators are evaluated
//! through an exact squared Euclidean distance transform, so their cost does
//! not grow with the ball volume.

use rayon::prelude::*;

use crate::volume::{Dims, Mask};

const FAR: i64 = i64::MAX / 4;

/// Exact squared distance (voxel units) from every voxel to the nearest `true`
/// entry of `sites`; `i64::MAX / 4` when there is none.
pub fn squared_distance_to(sites: &[bool], dims: Dims) -> Vec<i64> {
    assert_eq!(sites.len(), dims.len());
    let (nx, ny, nz) = (dims.nx, dims.ny, dims.nz);
    let mut d: Vec<i64> = sites.iter().map(|&s| if s { 0 } else { FAR }).collect();

    // x lines are contiguous.
    d.par_chunks_mut(nx).for_each(|line| {
        let input = line.to_vec();
        lower_envelope(&input, line);
    });

    // y lines: work slice by slice.
    d.par_chunks_mut(nx * ny).for_each(|slice| {
        let mut input = vec![0; ny];
        let mut output = vec![0; ny];
        for x in 0..nx {
            for y in 0..ny {
                input[y] = slice[x + nx * y];
            }
            lower_envelope(&input, &mut output);
            for y in 0..ny {
                slice[x + nx * y] = output[y];
            }
        }
    });

    // z lines: gather columns, transform, scatter.
    if nz > 1 {
        let plane = nx * ny;
        let columns: Vec<Vec<i64>> = (0..plane)
            .into_par_iter()
            .map(|xy| {
                let input: Vec<i64> = (0..nz).map(|z| d[xy + plane * z]).collect();
                let mut output = vec![0; nz];
                lower_envelope(&input, &mut output);
                output
            })
            .collect();
        for (xy, col) in columns.into_iter().enumerate() {
            for (z, v) in col.into_iter().enumerate() {
                d[xy + plane * z] = v;
            }
        }
    }
    d
}

/// One-dimensional squared distance transform of a sampled function
/// (lower envelope of parabolas rooted at the finite samples).
fn lower_envelope(f: &[i64], out: &mut [i64]) {
    let n = f.len();
    let mut roots: Vec<usize> = Vec::with_capacity(n);
    let mut bounds: Vec<f64> = Vec::with_capacity(n + 1);
    for q in 0..n {
        if f[q] >= FAR {
            continue;
        }
        let fq = (f[q] + (q * q) as i64) as f64;
        loop {
            let Some(&v) = roots.last() else {
                roots.push(q);
                bounds.clear();
                bounds.push(f64::NEG_INFINITY);
                break;
            };
            let fv = (f[v] + (v * v) as i64) as f64;
            let s = (fq - fv) / (2.0 * (q as f64 - v as f64));
            if s <= *bounds.last().unwrap() {
                roots.pop();
                bounds.pop();
                continue;
            }
            roots.push(q);
            bounds.push(s);
            break;
        }
    }
    if roots.is_empty() {
        out.fill(FAR);
        return;
    }
    let mut k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while k + 1 < roots.len() && bounds[k + 1] < q as f64 {
            k += 1;
        }
        let v = roots[k];
        let dq = q as i64 - v as i64;
        *o = dq * dq + f[v];
    }
}

/// Sets a voxel when some foreground voxel lies within `radius` of it.
pub fn dilate(mask: &Mask, radius: u32) -> Mask {
    let r2 = (radius as i64) * (radius as i64);
    let d = squared_distance_to(mask.data(), mask.dims());
    let data = d.into_iter().map(|v| v <= r2).collect();
    Mask::new(mask.dims(), mask.spacing(), data).expect("same geometry")
}

/// Keeps a voxel when every in-volume voxel within `radius` of it is foreground.
///
/// The ball is clipped to the volume, so voxels outside the grid do not erode.
pub fn erode(mask: &Mask, radius: u32) -> Mask {
    let r2 = (radius as i64) * (radius as i64);
    let background: Vec<bool> = mask.data().iter().map(|b| !b).collect();
    let d = squared_distance_to(&background, mask.dims());
    let data = d.into_iter().map(|v| v > r2).collect();
    Mask::new(mask.dims(), mask.spacing(), data).expect("same geometry")
}

/// Morphological closing: dilation followed by erosion with the same ball.
pub fn close_with_radius(mask: &Mask, radius: u32) -> Mask {
    erode(&dilate(mask, radius), radius)
}
