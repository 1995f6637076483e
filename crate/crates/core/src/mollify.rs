//! Product mollifiers `ρ_m ⊗ τ_m`, convolution of truncated fields, the
//! discrete space-time maximal function, and the below-average selection of
//! time slices and lateral radii.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::grid::{ball_nodes, integrate_slice, open_levels, Ball, Cylinder, Grid, Point, SpaceTimeField};

fn bump(z: f64) -> f64 {
    if z.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - z * z)).exp()
    }
}

/// Radial bump kernels of support `space_radius` (space) and `time_radius`
/// (time), renormalised to unit discrete mass on the grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mollifier {
    pub m: u32,
    pub space_radius: f64,
    pub time_radius: f64,
}

impl Mollifier {
    /// Support radius `1/m` in space and time.
    pub fn new(m: u32) -> Result<Self> {
        Self::scaled(m, 1.0, 1.0)
    }

    /// Support radius `space_scale/m` in space and `time_scale/m` in time.
    pub fn scaled(m: u32, space_scale: f64, time_scale: f64) -> Result<Self> {
        if m < 1 {
            return Err(Error::invalid("mollifier index must be >= 1"));
        }
        if !(space_scale > 0.0 && time_scale > 0.0) {
            return Err(Error::invalid("mollifier scales must be positive"));
        }
        Ok(Self {
            m,
            space_radius: space_scale / m as f64,
            time_radius: time_scale / m as f64,
        })
    }

    /// Largest index offset inside the open support of radius `radius`.
    fn half_width(radius: f64, step: f64) -> usize {
        let r = radius / step;
        let mut j = r.floor() as usize;
        if j as f64 >= r {
            j = j.saturating_sub(1);
        }
        j
    }

    pub fn space_half_width(&self, grid: &Grid) -> usize {
        Self::half_width(self.space_radius, grid.h)
    }

    pub fn time_half_width(&self, grid: &Grid) -> usize {
        Self::half_width(self.time_radius, grid.dt)
    }

    /// Spatial stencil `(di, dj, weight)` with weights summing to one.
    pub fn space_weights(&self, grid: &Grid) -> Vec<(isize, isize, f64)> {
        let jw = self.space_half_width(grid) as isize;
        let jy = if grid.dim == 2 { jw } else { 0 };
        let mut out = Vec::new();
        for dj in -jy..=jy {
            for di in -jw..=jw {
                let z = ((di * di + dj * dj) as f64).sqrt() * grid.h / self.space_radius;
                let w = bump(z);
                if w > 0.0 {
                    out.push((di, dj, w));
                }
            }
        }
        let total: f64 = out.iter().map(|t| t.2).sum();
        out.iter_mut().for_each(|t| t.2 /= total);
        out
    }

    /// Temporal stencil `(dk, weight)` with weights summing to one.
    pub fn time_weights(&self, grid: &Grid) -> Vec<(isize, f64)> {
        let l = self.time_half_width(grid) as isize;
        let mut out: Vec<(isize, f64)> = (-l..=l)
            .map(|dk| (dk, bump(dk as f64 * grid.dt / self.time_radius)))
            .filter(|t| t.1 > 0.0)
            .collect();
        let total: f64 = out.iter().map(|t| t.1).sum();
        out.iter_mut().for_each(|t| t.1 /= total);
        out
    }
}

/// Nodes and levels of `region` widened by the kernel must stay on the grid.
fn check_margin(grid: &Grid, region: &Cylinder, moll: &Mollifier) -> Result<(Vec<usize>, Vec<bool>)> {
    let nodes = ball_nodes(grid, &region.ball());
    let tol = 1e-9 * grid.dt;
    let levels: Vec<bool> = (0..grid.nt)
        .map(|k| {
            let t = grid.time(k);
            t >= region.t_lo - tol && t <= region.t_hi + tol
        })
        .collect();
    let klo = levels.iter().position(|&b| b);
    let khi = levels.iter().rposition(|&b| b);
    let (Some(klo), Some(khi)) = (klo, khi) else {
        return Err(Error::EmptyRegion(format!("{region:?}")));
    };
    if nodes.is_empty() {
        return Err(Error::EmptyRegion(format!("{region:?}")));
    }
    let jw = moll.space_half_width(grid);
    let l = moll.time_half_width(grid);
    if klo < l || khi + l >= grid.nt {
        return Err(Error::KernelExceedsMargin(format!(
            "time half-width {l} levels around levels {klo}..={khi} of {}",
            grid.nt
        )));
    }
    for &idx in &nodes {
        let (i, j) = grid.coords(idx);
        let fits_x = i >= jw && i + jw < grid.nx;
        let fits_y = grid.dim == 1 || (j >= jw && j + jw < grid.ny);
        if !(fits_x && fits_y) {
            return Err(Error::KernelExceedsMargin(format!(
                "space half-width {jw} cells around node ({i}, {j})"
            )));
        }
    }
    let mut mask = vec![false; grid.n_space()];
    nodes.iter().for_each(|&i| mask[i] = true);
    Ok((
        (0..grid.nt).filter(|&k| levels[k]).collect(),
        mask,
    ))
}

fn shifted(grid: &Grid, idx: usize, di: isize, dj: isize) -> Option<usize> {
    let (i, j) = grid.coords(idx);
    let ii = i as isize - di;
    let jj = j as isize - dj;
    if ii < 0 || jj < 0 || ii >= grid.nx as isize || jj >= grid.ny as isize {
        return None;
    }
    Some(grid.index(ii as usize, jj as usize))
}

/// Discrete convolution of `f · χ_region` with the product kernel.
pub fn mollify(f: &SpaceTimeField, region: &Cylinder, moll: &Mollifier, exec: Exec) -> Result<SpaceTimeField> {
    let grid = f.grid();
    let (levels, mask) = check_margin(grid, region, moll)?;
    let n = grid.n_space();
    let mut in_time = vec![false; grid.nt];
    levels.iter().for_each(|&k| in_time[k] = true);

    let space = moll.space_weights(grid);
    let time = moll.time_weights(grid);

    // spatial pass on each truncated slice
    let spatial: Vec<Vec<f64>> = exec.map(grid.nt, |k| {
        if !in_time[k] {
            return vec![0.0; n];
        }
        let s = f.slice(k);
        (0..n)
            .map(|idx| {
                space
                    .iter()
                    .filter_map(|&(di, dj, w)| shifted(grid, idx, di, dj).filter(|&src| mask[src]).map(|src| w * s[src]))
                    .sum()
            })
            .collect()
    });

    let slices: Vec<Vec<f64>> = exec.map(grid.nt, |k| {
        let mut out = vec![0.0; n];
        for &(dk, w) in &time {
            let src = k as isize - dk;
            if src < 0 || src >= grid.nt as isize {
                continue;
            }
            let s = &spatial[src as usize];
            out.iter_mut().zip(s).for_each(|(o, v)| *o += w * v);
        }
        out
    });
    SpaceTimeField::from_slices(grid.clone(), f.role(), slices)
}

/// Window family of the discrete maximal function: centred discrete balls
/// `{|d|² <= q}` (index units) for every `q <= space_norm_sq`, times centred
/// time intervals of every half-width up to `time_cells`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaxWindows {
    pub space_norm_sq: usize,
    pub time_cells: usize,
}

impl MaxWindows {
    /// Every window that fits in the grid extents.
    pub fn full(grid: &Grid) -> Self {
        let (a, b) = (grid.nx - 1, if grid.dim == 2 { grid.ny - 1 } else { 0 });
        Self {
            space_norm_sq: a * a + b * b,
            time_cells: grid.nt,
        }
    }

    /// Windows spanning the support of `moll`, enough for the domination
    /// `|f_m| <= M f` at every node.
    pub fn covering(grid: &Grid, moll: &Mollifier) -> Self {
        let q = moll
            .space_weights(grid)
            .iter()
            .map(|&(di, dj, _)| (di * di + dj * dj) as usize)
            .max()
            .unwrap_or(0);
        Self {
            space_norm_sq: q,
            time_cells: moll.time_half_width(grid),
        }
    }
}

/// Offsets grouped by squared norm, in increasing order.
fn rings(dim: usize, norm_sq: usize) -> Vec<Vec<(isize, isize)>> {
    let c = (norm_sq as f64).sqrt().floor() as isize + 1;
    let cy = if dim == 2 { c } else { 0 };
    let mut by_norm: std::collections::BTreeMap<isize, Vec<(isize, isize)>> = Default::default();
    for dj in -cy..=cy {
        for di in -c..=c {
            let q = di * di + dj * dj;
            if q as usize <= norm_sq {
                by_norm.entry(q).or_default().push((di, dj));
            }
        }
    }
    by_norm.into_values().collect()
}

/// Centred space-time maximal function of `|f|`.
///
/// Means are taken over the full window volume, with `f = 0` off the grid.
pub fn maximal_function(f: &SpaceTimeField, windows: MaxWindows, exec: Exec) -> SpaceTimeField {
    let grid = f.grid();
    let n = grid.n_space();
    let nt = grid.nt;
    let rings = rings(grid.dim, windows.space_norm_sq);
    let tb = windows.time_cells.min(nt);
    let columns: Vec<Vec<f64>> = exec.map(n, |idx| {
        let mut sums = vec![0.0; nt];
        let mut prefix = vec![0.0; nt + 1];
        let mut best = vec![0.0f64; nt];
        let mut count = 0usize;
        for ring in &rings {
            for &(di, dj) in ring {
                if let Some(src) = shifted(grid, idx, di, dj) {
                    for (k, s) in sums.iter_mut().enumerate() {
                        *s += f.get(src, k).abs();
                    }
                }
            }
            count += ring.len();
            for k in 0..nt {
                prefix[k + 1] = prefix[k] + sums[k];
            }
            for k in 0..nt {
                for b in 0..=tb {
                    let lo = k.saturating_sub(b);
                    let hi = (k + b).min(nt - 1);
                    let mean = (prefix[hi + 1] - prefix[lo]) / (count * (2 * b + 1)) as f64;
                    if mean > best[k] {
                        best[k] = mean;
                    }
                }
            }
        }
        best
    });
    let mut values = vec![0.0; grid.len()];
    for (idx, col) in columns.iter().enumerate() {
        for (k, v) in col.iter().enumerate() {
            values[k * n + idx] = *v;
        }
    }
    SpaceTimeField::new(grid.clone(), f.role(), values).expect("maximal function of a finite field is finite")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceSelection {
    pub level: usize,
    pub time: f64,
    pub value: f64,
    /// Mean of the slice integrals over all candidates in the window.
    pub window_mean: f64,
    pub candidates: usize,
}

/// The time level in the open window minimising `∫_B f(·, t) dx`.
pub fn select_time_slice(f: &SpaceTimeField, window: (f64, f64), region: &Ball) -> Result<SliceSelection> {
    let grid = f.grid();
    let levels = open_levels(grid, window.0, window.1);
    if levels.is_empty() {
        return Err(Error::NoCandidate(format!("no grid time in {window:?}")));
    }
    let values = levels
        .iter()
        .map(|&k| integrate_slice(grid, f.slice(k), region))
        .collect::<Result<Vec<_>>>()?;
    let best = argmin(&values);
    Ok(SliceSelection {
        level: levels[best],
        time: grid.time(levels[best]),
        value: values[best],
        window_mean: values.iter().sum::<f64>() / values.len() as f64,
        candidates: values.len(),
    })
}

fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = i;
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadiusSelection {
    pub radius: f64,
    pub value: f64,
    pub mean: f64,
    pub candidates: usize,
}

/// `∫_{∂B(center, r)} f dσ` on one slice.
///
/// In one dimension the sphere is the two end points with counting measure;
/// in two dimensions the circle is sampled with bilinear interpolation.
pub fn sphere_integral(grid: &Grid, f: &[f64], center: Point, r: f64) -> Result<f64> {
    if grid.dim == 1 {
        let mut acc = 0.0;
        for x in [center[0] - r, center[0] + r] {
            let idx = grid.node_near([x, 0.0]);
            if (grid.point(idx)[0] - x).abs() > 1e-9 * grid.h {
                return Err(Error::NoCandidate(format!("sphere point {x} is not a grid node")));
            }
            acc += f[idx];
        }
        return Ok(acc);
    }
    let samples = (8.0 * r / grid.h).ceil().max(32.0) as usize;
    let mut acc = 0.0;
    for s in 0..samples {
        let phi = 2.0 * std::f64::consts::PI * s as f64 / samples as f64;
        let x = (center[0] + r * phi.cos() - grid.origin[0]) / grid.h;
        let y = (center[1] + r * phi.sin() - grid.origin[1]) / grid.h;
        if x < 0.0 || y < 0.0 || x > (grid.nx - 1) as f64 || y > (grid.ny - 1) as f64 {
            return Err(Error::EmptyRegion(format!("circle of radius {r} leaves the grid")));
        }
        let (i, j) = ((x.floor() as usize).min(grid.nx - 2), (y.floor() as usize).min(grid.ny - 2));
        let (fx, fy) = (x - i as f64, y - j as f64);
        let v = |a: usize, b: usize| f[grid.index(a, b)];
        acc += (1.0 - fx) * (1.0 - fy) * v(i, j)
            + fx * (1.0 - fy) * v(i + 1, j)
            + (1.0 - fx) * fy * v(i, j + 1)
            + fx * fy * v(i + 1, j + 1);
    }
    Ok(acc * 2.0 * std::f64::consts::PI * r / samples as f64)
}

/// `∫_{t_lo}^{t_hi} ∫_{∂B(center, r)} f dσ dt`.
pub fn lateral_integral(f: &SpaceTimeField, center: Point, r: f64, t_lo: f64, t_hi: f64) -> Result<f64> {
    let grid = f.grid();
    let tol = 1e-9 * grid.dt;
    let mut acc = 0.0;
    let mut any = false;
    for k in 0..grid.nt {
        let t = grid.time(k);
        if t >= t_lo - tol && t <= t_hi + tol {
            acc += sphere_integral(grid, f.slice(k), center, r)?;
            any = true;
        }
    }
    if !any {
        return Err(Error::EmptyRegion(format!("no grid time in [{t_lo}, {t_hi}]")));
    }
    Ok(acc * grid.dt)
}

/// The grid radius in the open `range` minimising the lateral integral.
pub fn select_radius(
    f: &SpaceTimeField,
    center: Point,
    range: (f64, f64),
    time_window: (f64, f64),
) -> Result<RadiusSelection> {
    let grid = f.grid();
    let tol = 1e-9 * grid.h;
    let lo = (range.0 / grid.h).floor() as usize;
    let hi = (range.1 / grid.h).ceil() as usize;
    let mut radii = Vec::new();
    let mut values = Vec::new();
    for j in lo..=hi {
        let r = j as f64 * grid.h;
        if r <= range.0 + tol || r >= range.1 - tol {
            continue;
        }
        match lateral_integral(f, center, r, time_window.0, time_window.1) {
            Ok(v) => {
                radii.push(r);
                values.push(v);
            }
            Err(Error::NoCandidate(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    if radii.is_empty() {
        return Err(Error::NoCandidate(format!("no grid radius in {range:?}")));
    }
    let best = argmin(&values);
    Ok(RadiusSelection {
        radius: radii[best],
        value: values[best],
        mean: values.iter().sum::<f64>() / values.len() as f64,
        candidates: radii.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Role;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(grid: &Grid, seed: u64) -> SpaceTimeField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = (0..grid.len()).map(|_| rng.gen_range(-2.0..2.0)).collect();
        SpaceTimeField::new(grid.clone(), Role::Auxiliary, v).unwrap()
    }

    // Brute-force oracle: every window explicitly summed.
    fn brute_maximal(f: &SpaceTimeField, windows: MaxWindows) -> Vec<f64> {
        let g = f.grid();
        let mut out = vec![0.0; g.len()];
        let qmax = windows.space_norm_sq as isize;
        let c = (qmax as f64).sqrt() as isize + 1;
        for k in 0..g.nt {
            for idx in 0..g.n_space() {
                let (i, j) = g.coords(idx);
                let mut best = 0.0f64;
                for q in 0..=qmax {
                    for b in 0..=windows.time_cells as isize {
                        let mut sum = 0.0;
                        let mut count = 0;
                        let cy = if g.dim == 2 { c } else { 0 };
                        for dj in -cy..=cy {
                            for di in -c..=c {
                                if di * di + dj * dj > q {
                                    continue;
                                }
                                for dk in -b..=b {
                                    count += 1;
                                    let (ii, jj, kk) = (i as isize + di, j as isize + dj, k as isize + dk);
                                    if ii >= 0 && jj >= 0 && kk >= 0 && ii < g.nx as isize && jj < g.ny as isize && kk < g.nt as isize {
                                        sum += f.get(g.index(ii as usize, jj as usize), kk as usize).abs();
                                    }
                                }
                            }
                        }
                        best = best.max(sum / count as f64);
                    }
                }
                out[k * g.n_space() + idx] = best;
            }
        }
        out
    }

    #[test]
    fn kernels_have_unit_mass_and_are_radial() {
        let g = Grid::new_2d([0.0, 0.0], 0.01, 50, 50, 0.0, 0.01, 50).unwrap();
        let m = Mollifier::scaled(2, 0.2, 0.2).unwrap();
        let sw = m.space_weights(&g);
        let tw = m.time_weights(&g);
        assert_abs_diff_eq!(sw.iter().map(|t| t.2).sum::<f64>(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(tw.iter().map(|t| t.1).sum::<f64>(), 1.0, epsilon = 1e-12);
        assert!(sw.iter().all(|t| t.2 >= 0.0));
        let w = |di: isize, dj: isize| sw.iter().find(|t| t.0 == di && t.1 == dj).unwrap().2;
        assert_eq!(w(3, 4), w(-4, 3));
        assert_eq!(w(5, 0), w(0, -5));
        assert!(w(0, 0) > w(1, 0) && w(1, 0) > w(5, 0));
        // narrower than a cell: identity
        let tiny = Mollifier::new(1000).unwrap();
        assert_eq!(tiny.space_weights(&g), vec![(0, 0, 1.0)]);
    }

    #[test]
    fn mollify_constant_and_mass() {
        let g = Grid::interval(0.0, 1.0, 100, 1.0, 100).unwrap();
        let f = SpaceTimeField::from_fn(g.clone(), Role::Enthalpy, |_, _| 0.7).unwrap();
        let region = Cylinder::new([0.5, 0.0], 0.3, 0.2, 0.8).unwrap();
        let m = Mollifier::new(20).unwrap();
        let out = mollify(&f, &region, &m, Exec::default()).unwrap();
        // distance > 1/m from the region boundary
        for (x, t) in [(0.5, 0.5), (0.3, 0.3), (0.7, 0.7)] {
            let idx = g.node_near([x, 0.0]);
            assert_abs_diff_eq!(out.get(idx, g.level_of(t)), 0.7, epsilon = 1e-12);
        }
        let rf = random_field(&g, 3);
        let mass_in = rf.node_sum_with(&region, |x| x).unwrap();
        let out = mollify(&rf, &region, &m, Exec::default()).unwrap();
        let mass_out: f64 = out.values().iter().sum::<f64>() * g.h * g.dt;
        assert!((mass_in - mass_out).abs() <= 1e-8 * mass_in.abs().max(1e-300));
        let wide = Mollifier::new(2).unwrap();
        assert!(matches!(mollify(&rf, &region, &wide, Exec::default()), Err(Error::KernelExceedsMargin(_))));
    }

    #[test]
    fn mollify_approximates_identity() {
        let g = Grid::interval(0.0, 1.0, 400, 1.0, 400).unwrap();
        let f = SpaceTimeField::from_fn(g.clone(), Role::Enthalpy, |p, t| (3.0 * p[0]).sin() * (1.0 + t * t)).unwrap();
        let region = Cylinder::new([0.5, 0.0], 0.4, 0.1, 0.9).unwrap();
        let points = [(0.4, 0.5), (0.5, 0.3), (0.6, 0.6)];
        let errs: Vec<f64> = [8, 16, 32]
            .iter()
            .map(|&m| {
                let moll = Mollifier::scaled(m, 0.8, 0.8).unwrap();
                let out = mollify(&f, &region, &moll, Exec::default()).unwrap();
                points
                    .iter()
                    .map(|&(x, t)| {
                        let (i, k) = (g.node_near([x, 0.0]), g.level_of(t));
                        (out.get(i, k) - f.get(i, k)).abs()
                    })
                    .fold(0.0, f64::max)
            })
            .collect();
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
    }

    #[test]
    fn maximal_function_examples() {
        let g = Grid::new_1d(0.0, 0.1, 16, 0.0, 0.1, 16).unwrap();
        let c = SpaceTimeField::from_fn(g.clone(), Role::Auxiliary, |_, _| -1.5).unwrap();
        let mc = maximal_function(&c, MaxWindows::full(&g), Exec::default());
        assert!(mc.values().iter().all(|&v| (v - 1.5).abs() < 1e-12));

        let boxed = SpaceTimeField::from_fn(g.clone(), Role::Auxiliary, |p, t| {
            if (0.3..0.75).contains(&p[0]) && (0.3..0.75).contains(&t) { 1.0 } else { 0.0 }
        })
        .unwrap();
        let mb = maximal_function(&boxed, MaxWindows::full(&g), Exec::default());
        assert_eq!(mb.get(5, 5), 1.0);

        // spike: brute force over every window, N = 16
        let mut v = vec![0.0; g.len()];
        v[8 * 16 + 8] = 1.0;
        let spike = SpaceTimeField::new(g.clone(), Role::Auxiliary, v).unwrap();
        let w = MaxWindows::full(&g);
        let fast = maximal_function(&spike, w, Exec::default());
        let brute = brute_maximal(&spike, w);
        for (a, b) in fast.values().iter().zip(&brute) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-14);
        }
        for k in 1..6 {
            assert_abs_diff_eq!(fast.get(8 + k, 8), 1.0 / (2 * k + 1) as f64, epsilon = 1e-14);
        }
    }

    #[test]
    fn maximal_function_matches_brute_force_2d() {
        let g = Grid::new_2d([0.0, 0.0], 0.1, 6, 5, 0.0, 0.1, 5).unwrap();
        let f = random_field(&g, 11);
        let w = MaxWindows { space_norm_sq: 10, time_cells: 2 };
        let fast = maximal_function(&f, w, Exec::Sequential);
        let brute = brute_maximal(&f, w);
        for (a, b) in fast.values().iter().zip(&brute) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-13);
        }
        assert_eq!(fast, maximal_function(&f, w, Exec::Parallel));
    }

    #[test]
    fn mollifier_dominated_by_maximal_function() {
        for (seed, dim) in [(1u64, 1usize), (2, 1), (3, 2)] {
            let g = if dim == 1 {
                Grid::interval(0.0, 1.0, 40, 1.0, 40).unwrap()
            } else {
                Grid::new_2d([0.0, 0.0], 0.05, 21, 21, 0.0, 0.05, 21).unwrap()
            };
            let f = random_field(&g, seed);
            let region = Cylinder::new([0.5, 0.5], 0.3, 0.3, 0.7).unwrap();
            let moll = Mollifier::scaled(3, 0.45, 0.6).unwrap();
            let um = mollify(&f, &region, &moll, Exec::default()).unwrap();
            let truncated = f.zip_map(&um, Role::Auxiliary, |a, _| a).unwrap();
            let chi = {
                let nodes = ball_nodes(&g, &region.ball());
                let mut v = truncated.values().to_vec();
                for k in 0..g.nt {
                    let t = g.time(k);
                    for idx in 0..g.n_space() {
                        if !(t >= region.t_lo - 1e-12 && t <= region.t_hi + 1e-12 && nodes.contains(&idx)) {
                            v[k * g.n_space() + idx] = 0.0;
                        }
                    }
                }
                SpaceTimeField::new(g.clone(), Role::Auxiliary, v).unwrap()
            };
            let mf = maximal_function(&chi, MaxWindows::covering(&g, &moll), Exec::default());
            for (a, b) in um.values().iter().zip(mf.values()) {
                assert!(a.abs() <= b + 1e-12);
            }
        }
    }

    #[test]
    fn slice_selection_examples() {
        let g = Grid::interval(0.0, 1.0, 20, 1.0, 20).unwrap();
        let ball = Ball::new([0.5, 0.0], 0.3).unwrap();
        let flat = SpaceTimeField::from_fn(g.clone(), Role::Auxiliary, |_, _| 2.0).unwrap();
        let s = select_time_slice(&flat, (0.2, 0.6), &ball).unwrap();
        assert_abs_diff_eq!(s.time, 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(s.value / s.window_mean, 1.0, epsilon = 1e-12);

        let slab = SpaceTimeField::from_fn(g.clone(), Role::Auxiliary, |_, t| if (0.25..0.42).contains(&t) { 5.0 } else { 0.1 }).unwrap();
        let s = select_time_slice(&slab, (0.2, 0.6), &ball).unwrap();
        assert!(!(0.25..0.42).contains(&s.time));
        assert!(s.value < s.window_mean);

        let rf = random_field(&g, 5).map(Role::Auxiliary, |v| v * v);
        let s = select_time_slice(&rf, (0.3, 0.8), &ball).unwrap();
        assert_eq!(s.candidates, 9);
        let brute: Vec<f64> = (7..=15).map(|k| integrate_slice(&g, rf.slice(k), &ball).unwrap()).collect();
        let min = brute.iter().cloned().fold(f64::INFINITY, f64::min);
        assert_abs_diff_eq!(s.value, min, epsilon = 1e-14);
        assert!(s.value <= brute.iter().sum::<f64>() / 9.0);
        assert!(matches!(select_time_slice(&rf, (0.31, 0.32), &ball), Err(Error::NoCandidate(_))));
    }

    #[test]
    fn radius_selection_examples() {
        let g = Grid::interval(0.0, 1.0, 40, 1.0, 20).unwrap();
        let c = [0.5, 0.0];
        let flat = SpaceTimeField::from_fn(g.clone(), Role::Auxiliary, |_, _| 1.0).unwrap();
        let s = select_radius(&flat, c, (0.2, 0.45), (0.0, 1.0)).unwrap();
        assert_abs_diff_eq!(s.radius, 0.225, epsilon = 1e-12);

        let annulus = SpaceTimeField::from_fn(g.clone(), Role::Auxiliary, |p, _| {
            let d = (p[0] - 0.5).abs();
            if (0.24..0.31).contains(&d) { 3.0 } else { 0.0 }
        })
        .unwrap();
        let s = select_radius(&annulus, c, (0.2, 0.45), (0.0, 1.0)).unwrap();
        assert!(!(0.24..0.31).contains(&s.radius));

        let rf = random_field(&g, 9).map(Role::Auxiliary, |v| v * v);
        let s = select_radius(&rf, c, (0.26, 0.475), (0.2, 0.8)).unwrap();
        assert_eq!(s.candidates, 8);
        let brute: Vec<f64> = (11..=18)
            .map(|j| lateral_integral(&rf, c, j as f64 * g.h, 0.2, 0.8).unwrap())
            .collect();
        assert_abs_diff_eq!(s.value, brute.iter().cloned().fold(f64::INFINITY, f64::min), epsilon = 1e-14);
        assert!(s.value <= brute.iter().sum::<f64>() / 8.0);
        assert!(matches!(select_radius(&rf, c, (0.301, 0.32), (0.0, 1.0)), Err(Error::NoCandidate(_))));
    }

    #[test]
    fn circle_integral_of_constant() {
        let g = Grid::new_2d([-1.0, -1.0], 0.05, 41, 41, 0.0, 0.1, 2).unwrap();
        let one = vec![1.0; g.n_space()];
        let v = sphere_integral(&g, &one, [0.0, 0.0], 0.5).unwrap();
        assert_abs_diff_eq!(v, std::f64::consts::PI, epsilon = 1e-9);
    }
}
