//! Coarse-to-fine dense inverse search (DIS-style) optical flow.
//!
//! Each pyramid level runs three steps, seeded by the upsampled flow of the
//! coarser level:
//! 1. inverse-compositional Lucas-Kanade on a grid of overlapping patches,
//! 2. densification: every pixel averages the flows of the patches covering
//!    it, weighted by the inverse photometric error each flow produces there,
//! 3. a few Jacobi sweeps of a linearized brightness-constancy + smoothness
//!    energy.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::media::{luma_unit, Frame, Plane};

use super::field::FlowField;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowParams {
    /// Maximum number of pyramid levels (levels too small for a patch are skipped).
    pub levels: usize,
    /// Side of the square search patch; odd, >= 3.
    pub patch_size: usize,
    /// Gauss-Newton iterations per patch.
    pub iterations: usize,
    /// Jacobi sweeps of the smoothness refinement per level.
    pub smoothing_sweeps: usize,
    /// Weight of the smoothness term relative to squared intensity gradients
    /// (intensities in [0, 1]).
    pub smoothing_weight: f32,
}

impl Default for FlowParams {
    fn default() -> Self {
        FlowParams {
            levels: 5,
            patch_size: 9,
            iterations: 12,
            smoothing_sweeps: 4,
            smoothing_weight: 2e-3,
        }
    }
}

impl FlowParams {
    pub fn validate(&self) -> Result<()> {
        if self.levels == 0 {
            return Err(Error::Argument("flow pyramid needs at least one level".into()));
        }
        if self.patch_size < 3 || self.patch_size % 2 == 0 {
            return Err(Error::Argument(format!(
                "patch size must be odd and >= 3, got {}",
                self.patch_size
            )));
        }
        if !(self.smoothing_weight > 0.0) {
            return Err(Error::Argument("smoothing weight must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone)]
struct Image {
    w: usize,
    h: usize,
    data: Vec<f32>,
}

impl Image {
    fn from_plane(p: Plane) -> Self {
        Image {
            w: p.width,
            h: p.height,
            data: p.data,
        }
    }

    #[inline]
    fn at(&self, x: isize, y: isize) -> f32 {
        let x = x.clamp(0, self.w as isize - 1) as usize;
        let y = y.clamp(0, self.h as isize - 1) as usize;
        self.data[y * self.w + x]
    }

    /// Bilinear sample with clamp-to-edge.
    #[inline]
    fn sample(&self, x: f32, y: f32) -> f32 {
        let x = x.clamp(0.0, (self.w - 1) as f32);
        let y = y.clamp(0.0, (self.h - 1) as f32);
        let x0 = x.floor();
        let y0 = y.floor();
        let (fx, fy) = (x - x0, y - y0);
        let (x0, y0) = (x0 as isize, y0 as isize);
        let a = self.at(x0, y0);
        let b = self.at(x0 + 1, y0);
        let c = self.at(x0, y0 + 1);
        let d = self.at(x0 + 1, y0 + 1);
        (a * (1.0 - fx) + b * fx) * (1.0 - fy) + (c * (1.0 - fx) + d * fx) * fy
    }

    /// Central-difference gradients.
    fn gradients(&self) -> (Image, Image) {
        let mut gx = vec![0.0; self.w * self.h];
        let mut gy = vec![0.0; self.w * self.h];
        for y in 0..self.h as isize {
            for x in 0..self.w as isize {
                let i = y as usize * self.w + x as usize;
                gx[i] = 0.5 * (self.at(x + 1, y) - self.at(x - 1, y));
                gy[i] = 0.5 * (self.at(x, y + 1) - self.at(x, y - 1));
            }
        }
        (
            Image { w: self.w, h: self.h, data: gx },
            Image { w: self.w, h: self.h, data: gy },
        )
    }

    /// Binomial [1 4 6 4 1] blur followed by 2x decimation.
    fn downsample(&self) -> Image {
        const K: [f32; 5] = [1.0 / 16.0, 4.0 / 16.0, 6.0 / 16.0, 4.0 / 16.0, 1.0 / 16.0];
        let mut tmp = vec![0.0; self.w * self.h];
        for y in 0..self.h as isize {
            for x in 0..self.w as isize {
                tmp[y as usize * self.w + x as usize] =
                    (0..5).map(|k| K[k] * self.at(x + k as isize - 2, y)).sum();
            }
        }
        let tmp = Image { w: self.w, h: self.h, data: tmp };
        let (nw, nh) = (self.w.div_ceil(2), self.h.div_ceil(2));
        let mut out = vec![0.0; nw * nh];
        for y in 0..nh {
            for x in 0..nw {
                let (sx, sy) = (2 * x as isize, 2 * y as isize);
                out[y * nw + x] = (0..5).map(|k| K[k] * tmp.at(sx, sy + k as isize - 2)).sum();
            }
        }
        Image { w: nw, h: nh, data: out }
    }
}

struct Level {
    i0: Image,
    i1: Image,
}

fn build_pyramid(i0: Image, i1: Image, params: &FlowParams) -> Vec<Level> {
    let mut levels = vec![Level { i0, i1 }];
    while levels.len() < params.levels {
        let last = levels.last().unwrap();
        let (nw, nh) = (last.i0.w.div_ceil(2), last.i0.h.div_ceil(2));
        if nw.min(nh) < 2 * params.patch_size {
            break;
        }
        let next = Level {
            i0: last.i0.downsample(),
            i1: last.i1.downsample(),
        };
        levels.push(next);
    }
    levels
}

/// Patch origins along one axis: stride steps plus a final flush position.
fn patch_origins(len: usize, patch: usize, stride: usize) -> Vec<usize> {
    let last = len - patch;
    let mut v: Vec<usize> = (0..=last).step_by(stride).collect();
    if *v.last().unwrap() != last {
        v.push(last);
    }
    v
}

struct PatchFlow {
    x0: usize,
    y0: usize,
    u: f32,
    v: f32,
}

/// Mean-normalized sum of squared differences between the template patch and
/// the next frame displaced by (u, v).
fn patch_error(level: &Level, x0: usize, y0: usize, p: usize, tmpl: &[f32], u: f32, v: f32) -> f32 {
    let mut warped = Vec::with_capacity(p * p);
    for dy in 0..p {
        for dx in 0..p {
            warped.push(level.i1.sample((x0 + dx) as f32 + u, (y0 + dy) as f32 + v));
        }
    }
    let mean = warped.iter().sum::<f32>() / warped.len() as f32;
    warped.iter().zip(tmpl).map(|(w, t)| (w - mean - t).powi(2)).sum()
}

fn inverse_search(
    level: &Level,
    gx: &Image,
    gy: &Image,
    init_u: &[f32],
    init_v: &[f32],
    p: usize,
    iterations: usize,
) -> Vec<PatchFlow> {
    let (w, h) = (level.i0.w, level.i0.h);
    let stride = (p / 2).max(1);
    let xs = patch_origins(w, p, stride);
    let ys = patch_origins(h, p, stride);
    let origins: Vec<(usize, usize)> = ys
        .iter()
        .flat_map(|&y| xs.iter().map(move |&x| (x, y)))
        .collect();

    origins
        .par_iter()
        .map(|&(x0, y0)| {
            let c = (y0 + p / 2) * w + x0 + p / 2;
            let (u0, v0) = (init_u[c], init_v[c]);
            let mut tmpl = Vec::with_capacity(p * p);
            let (mut hxx, mut hxy, mut hyy) = (0.0f32, 0.0f32, 0.0f32);
            for dy in 0..p {
                for dx in 0..p {
                    let i = (y0 + dy) * w + x0 + dx;
                    tmpl.push(level.i0.data[i]);
                    let (a, b) = (gx.data[i], gy.data[i]);
                    hxx += a * a;
                    hxy += a * b;
                    hyy += b * b;
                }
            }
            let tmean = tmpl.iter().sum::<f32>() / tmpl.len() as f32;
            for t in &mut tmpl {
                *t -= tmean;
            }
            let det = hxx * hyy - hxy * hxy;
            let keep = PatchFlow { x0, y0, u: u0, v: v0 };
            if det <= 1e-12 * (hxx + hyy).max(1e-12).powi(2) || det <= 1e-14 {
                return keep;
            }

            let (mut u, mut v) = (u0, v0);
            let mut warped = vec![0.0f32; p * p];
            for _ in 0..iterations {
                for dy in 0..p {
                    for dx in 0..p {
                        warped[dy * p + dx] =
                            level.i1.sample((x0 + dx) as f32 + u, (y0 + dy) as f32 + v);
                    }
                }
                let wmean = warped.iter().sum::<f32>() / warped.len() as f32;
                let (mut bx, mut by) = (0.0f32, 0.0f32);
                for dy in 0..p {
                    for dx in 0..p {
                        let k = dy * p + dx;
                        let i = (y0 + dy) * w + x0 + dx;
                        let e = warped[k] - wmean - tmpl[k];
                        bx += gx.data[i] * e;
                        by += gy.data[i] * e;
                    }
                }
                let du = (hyy * bx - hxy * by) / det;
                let dv = (hxx * by - hxy * bx) / det;
                u -= du;
                v -= dv;
                if du * du + dv * dv < 1e-6 {
                    break;
                }
            }
            let drift = (u - u0).hypot(v - v0);
            if !u.is_finite() || !v.is_finite() || drift > p as f32 {
                return keep;
            }
            let before = patch_error(level, x0, y0, p, &tmpl, u0, v0);
            let after = patch_error(level, x0, y0, p, &tmpl, u, v);
            if after > before {
                return keep;
            }
            PatchFlow { x0, y0, u, v }
        })
        .collect()
}

/// Per-pixel average of overlapping patch flows weighted by inverse photometric error.
fn densify(level: &Level, patches: &[PatchFlow], p: usize, fallback: (&[f32], &[f32])) -> (Vec<f32>, Vec<f32>) {
    let (w, h) = (level.i0.w, level.i0.h);
    let mut su = vec![0.0f32; w * h];
    let mut sv = vec![0.0f32; w * h];
    let mut sw = vec![0.0f32; w * h];
    const MIN_ERR: f32 = 1.0 / 255.0;
    for pf in patches {
        for dy in 0..p {
            let y = pf.y0 + dy;
            for dx in 0..p {
                let x = pf.x0 + dx;
                let i = y * w + x;
                let d = level.i1.sample(x as f32 + pf.u, y as f32 + pf.v) - level.i0.data[i];
                let wt = 1.0 / d.abs().max(MIN_ERR);
                su[i] += wt * pf.u;
                sv[i] += wt * pf.v;
                sw[i] += wt;
            }
        }
    }
    for i in 0..w * h {
        if sw[i] > 0.0 {
            su[i] /= sw[i];
            sv[i] /= sw[i];
        } else {
            su[i] = fallback.0[i];
            sv[i] = fallback.1[i];
        }
    }
    (su, sv)
}

/// Jacobi sweeps of a Horn-Schunck style energy, relinearized at the
/// current flow every sweep.
fn refine(level: &Level, u: &mut [f32], v: &mut [f32], sweeps: usize, alpha: f32) {
    let (w, h) = (level.i0.w, level.i0.h);
    let (g1x, g1y) = level.i1.gradients();
    for _ in 0..sweeps {
        let cu = Image { w, h, data: u.to_vec() };
        let cv = Image { w, h, data: v.to_vec() };
        u.par_chunks_mut(w)
            .zip(v.par_chunks_mut(w))
            .enumerate()
            .for_each(|(y, (urow, vrow))| {
                let yi = y as isize;
                for x in 0..w {
                    let xi = x as isize;
                    let i = y * w + x;
                    let (fu, fv) = (cu.data[i], cv.data[i]);
                    let (sx, sy) = (x as f32 + fu, y as f32 + fv);
                    let gx = g1x.sample(sx, sy);
                    let gy = g1y.sample(sx, sy);
                    let it = level.i1.sample(sx, sy) - level.i0.data[i];
                    let ubar = 0.25 * (cu.at(xi - 1, yi) + cu.at(xi + 1, yi) + cu.at(xi, yi - 1) + cu.at(xi, yi + 1));
                    let vbar = 0.25 * (cv.at(xi - 1, yi) + cv.at(xi + 1, yi) + cv.at(xi, yi - 1) + cv.at(xi, yi + 1));
                    let num = gx * (ubar - fu) + gy * (vbar - fv) + it;
                    let den = alpha + gx * gx + gy * gy;
                    urow[x] = ubar - gx * num / den;
                    vrow[x] = vbar - gy * num / den;
                }
            });
    }
}

/// Doubles resolution and magnitude of a flow field.
fn upsample_flow(u: &[f32], v: &[f32], w: usize, h: usize, nw: usize, nh: usize) -> (Vec<f32>, Vec<f32>) {
    let cu = Image { w, h, data: u.to_vec() };
    let cv = Image { w, h, data: v.to_vec() };
    let sx = w as f32 / nw as f32;
    let sy = h as f32 / nh as f32;
    let mut ou = vec![0.0; nw * nh];
    let mut ov = vec![0.0; nw * nh];
    for y in 0..nh {
        for x in 0..nw {
            let fx = (x as f32 + 0.5) * sx - 0.5;
            let fy = (y as f32 + 0.5) * sy - 0.5;
            ou[y * nw + x] = cu.sample(fx, fy) / sx;
            ov[y * nw + x] = cv.sample(fx, fy) / sy;
        }
    }
    (ou, ov)
}

fn largest_odd_at_most(n: usize) -> usize {
    if n % 2 == 1 {
        n
    } else {
        n.saturating_sub(1).max(1)
    }
}

/// Flow from `prev` to `next` on luma planes scaled to [0, 1].
pub fn estimate_flow_luma(prev: Plane, next: Plane, params: &FlowParams) -> Result<FlowField> {
    params.validate()?;
    if (prev.width, prev.height) != (next.width, next.height) {
        return Err(Error::Shape(format!(
            "frame sizes differ: {}x{} vs {}x{}",
            prev.width, prev.height, next.width, next.height
        )));
    }
    let (w0, h0) = (prev.width, prev.height);
    let levels = build_pyramid(Image::from_plane(prev), Image::from_plane(next), params);

    let coarsest = levels.last().unwrap();
    let mut u = vec![0.0f32; coarsest.i0.w * coarsest.i0.h];
    let mut v = u.clone();
    let mut size = (coarsest.i0.w, coarsest.i0.h);
    for level in levels.iter().rev() {
        let (w, h) = (level.i0.w, level.i0.h);
        if size != (w, h) {
            (u, v) = upsample_flow(&u, &v, size.0, size.1, w, h);
            size = (w, h);
        }
        let p = largest_odd_at_most(params.patch_size.min(w).min(h));
        let (gx, gy) = level.i0.gradients();
        let patches = inverse_search(level, &gx, &gy, &u, &v, p, params.iterations);
        (u, v) = densify(level, &patches, p, (&u, &v));
        refine(level, &mut u, &mut v, params.smoothing_sweeps, params.smoothing_weight);
    }
    debug_assert_eq!(size, (w0, h0));
    FlowField::new(w0, h0, u, v)
}

/// Dense flow from `prev` to `next`, computed on BT.709 luma.
pub fn estimate_flow(prev: &Frame, next: &Frame, params: &FlowParams) -> Result<FlowField> {
    prev.check_same_size(next)?;
    estimate_flow_luma(luma_unit(prev), luma_unit(next), params)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_are_validated() {
        assert!(FlowParams::default().validate().is_ok());
        assert!(FlowParams { patch_size: 8, ..Default::default() }.validate().is_err());
        assert!(FlowParams { patch_size: 1, ..Default::default() }.validate().is_err());
        assert!(FlowParams { levels: 0, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn patch_origins_cover_the_axis() {
        assert_eq!(patch_origins(20, 9, 4), vec![0, 4, 8, 11]);
        assert_eq!(patch_origins(9, 9, 4), vec![0]);
        assert_eq!(patch_origins(17, 9, 4), vec![0, 4, 8]);
    }

    #[test]
    fn size_mismatch() {
        let a = Plane::filled(16, 16, 0.5);
        let b = Plane::filled(16, 15, 0.5);
        assert!(matches!(estimate_flow_luma(a, b, &FlowParams::default()), Err(Error::Shape(_))));
    }

    #[test]
    fn flat_images_give_zero_flow() {
        let a = Plane::filled(20, 12, 0.5);
        let f = estimate_flow_luma(a.clone(), a, &FlowParams::default()).unwrap();
        assert!(f.u().iter().chain(f.v()).all(|&x| x == 0.0));
    }
}
