//! Periodic Eulerian grids and the Lagrangian-Eulerian transfer operators.
//!
//! Grid node `(i, j, k)` sits at `(i h, j h, k h)` and the domain is the
//! periodic box `[0, n1 h) x [0, n2 h) x [0, n3 h)`. Field values are
//! stored with the last index fastest: `index = (i * n2 + j) * n3 + k`.
//! Vector fields are handled as three independent scalar fields.

use std::io::{BufRead, Write};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::{weights, KernelId, MAX_STENCIL};
use crate::numfmt::g17;

pub type Point3 = [f64; 3];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodicGrid3 {
    dims: [usize; 3],
    h: f64,
}

impl PeriodicGrid3 {
    pub fn new(dims: [usize; 3], meshwidth: f64) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::Config(format!("grid dimensions must be positive, got {dims:?}")));
        }
        if !(meshwidth > 0.0 && meshwidth.is_finite()) {
            return Err(Error::Config(format!("meshwidth must be positive and finite, got {meshwidth}")));
        }
        Ok(PeriodicGrid3 { dims, h: meshwidth })
    }

    /// `n^3` grid with unit meshwidth.
    pub fn cube(n: usize) -> Result<Self> {
        Self::new([n; 3], 1.0)
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn meshwidth(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Physical edge lengths of the periodic box.
    pub fn extent(&self) -> Point3 {
        self.dims.map(|n| n as f64 * self.h)
    }

    pub fn index(&self, ijk: [usize; 3]) -> usize {
        (ijk[0] * self.dims[1] + ijk[1]) * self.dims[2] + ijk[2]
    }

    pub fn node(&self, index: usize) -> [usize; 3] {
        let k = index % self.dims[2];
        let j = (index / self.dims[2]) % self.dims[1];
        let i = index / (self.dims[1] * self.dims[2]);
        [i, j, k]
    }

    /// Fails when a stencil of `id` would wrap onto itself.
    pub fn check_kernel(&self, id: KernelId) -> Result<()> {
        let need = id.min_grid_extent();
        if self.dims.iter().any(|&n| n < need) {
            return Err(Error::Config(format!(
                "grid {:?} too small for {id}: every dimension needs at least {need} points",
                self.dims
            )));
        }
        Ok(())
    }

    /// Minimum-image separation vector `b - a`.
    pub fn min_image(&self, a: Point3, b: Point3) -> Point3 {
        let ext = self.extent();
        std::array::from_fn(|i| {
            let d = (b[i] - a[i]).rem_euclid(ext[i]);
            if d > 0.5 * ext[i] {
                d - ext[i]
            } else {
                d
            }
        })
    }

    pub fn periodic_distance(&self, a: Point3, b: Point3) -> f64 {
        self.min_image(a, b).iter().map(|d| d * d).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField3 {
    grid: PeriodicGrid3,
    values: Vec<f64>,
}

impl ScalarField3 {
    pub fn zeros(grid: PeriodicGrid3) -> Self {
        ScalarField3 { grid, values: vec![0.0; grid.len()] }
    }

    pub fn from_values(grid: PeriodicGrid3, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Domain(format!("field has {} values, grid needs {}", values.len(), grid.len())));
        }
        Ok(ScalarField3 { grid, values })
    }

    /// Samples `f` at every grid node.
    pub fn from_fn(grid: PeriodicGrid3, f: impl Fn(Point3) -> f64) -> Self {
        let h = grid.meshwidth();
        let values = (0..grid.len())
            .map(|n| f(grid.node(n).map(|i| i as f64 * h)))
            .collect();
        ScalarField3 { grid, values }
    }

    pub fn grid(&self) -> &PeriodicGrid3 {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, ijk: [usize; 3]) -> f64 {
        self.values[self.grid.index(ijk)]
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn dot(&self, other: &ScalarField3) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MarkerSet {
    positions: Vec<Point3>,
}

impl MarkerSet {
    pub fn new(positions: Vec<Point3>) -> Result<Self> {
        if let Some(p) = positions.iter().find(|p| p.iter().any(|c| !c.is_finite())) {
            return Err(Error::Domain(format!("marker position {p:?} is not finite")));
        }
        Ok(MarkerSet { positions })
    }

    pub fn positions(&self) -> &[Point3] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// Wrapped node indices and `phi((x - node)/h)` along one axis.
#[derive(Clone, Copy)]
struct AxisStencil {
    nodes: [usize; MAX_STENCIL],
    weights: [f64; MAX_STENCIL],
    len: usize,
}

impl AxisStencil {
    fn new(id: KernelId, n: usize, h: f64, x: f64) -> Result<Self> {
        let s = weights(id, x / h)?;
        let mut out = AxisStencil { nodes: [0; MAX_STENCIL], weights: [0.0; MAX_STENCIL], len: s.weights().len() };
        for (i, (j, w)) in s.iter().enumerate() {
            out.nodes[i] = j.rem_euclid(n as i64) as usize;
            out.weights[i] = w;
        }
        Ok(out)
    }

    fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.nodes[..self.len].iter().copied().zip(self.weights[..self.len].iter().copied())
    }
}

fn marker_stencils(id: KernelId, grid: &PeriodicGrid3, x: Point3) -> Result<[AxisStencil; 3]> {
    if x.iter().any(|c| !c.is_finite()) {
        return Err(Error::Domain(format!("point {x:?} is not finite")));
    }
    let d = grid.dims();
    Ok([
        AxisStencil::new(id, d[0], grid.h, x[0])?,
        AxisStencil::new(id, d[1], grid.h, x[1])?,
        AxisStencil::new(id, d[2], grid.h, x[2])?,
    ])
}

/// `delta_h(node - x)` at every node where it can be nonzero, as
/// `(node, value)` pairs. Values carry the `1/h^3` factor.
pub fn delta3(id: KernelId, grid: &PeriodicGrid3, x: Point3) -> Result<Vec<([usize; 3], f64)>> {
    grid.check_kernel(id)?;
    let [sx, sy, sz] = marker_stencils(id, grid, x)?;
    let inv_h3 = grid.h.powi(-3);
    let mut out = Vec::with_capacity(sx.len * sy.len * sz.len);
    for (i, wx) in sx.iter() {
        for (j, wy) in sy.iter() {
            for (k, wz) in sz.iter() {
                out.push(([i, j, k], wx * wy * wz * inv_h3));
            }
        }
    }
    Ok(out)
}

/// `field = sum_m values[m] * delta_h(x - X_m)`, accumulated in marker order.
pub fn spread(id: KernelId, grid: &PeriodicGrid3, markers: &MarkerSet, values: &[f64]) -> Result<ScalarField3> {
    grid.check_kernel(id)?;
    if values.len() != markers.len() {
        return Err(Error::Domain(format!("{} values for {} markers", values.len(), markers.len())));
    }
    let mut field = ScalarField3::zeros(*grid);
    let inv_h3 = grid.h.powi(-3);
    for (x, &v) in markers.positions().iter().zip(values) {
        let [sx, sy, sz] = marker_stencils(id, grid, *x)?;
        for (i, wx) in sx.iter() {
            for (j, wy) in sy.iter() {
                let base = (i * grid.dims[1] + j) * grid.dims[2];
                let a = v * wx * wy * inv_h3;
                for (k, wz) in sz.iter() {
                    field.values[base + k] += a * wz;
                }
            }
        }
    }
    Ok(field)
}

/// `U(X_m) = sum_x field(x) delta_h(x - X_m) h^3` for every marker.
pub fn interpolate(id: KernelId, grid: &PeriodicGrid3, field: &ScalarField3, markers: &MarkerSet) -> Result<Vec<f64>> {
    grid.check_kernel(id)?;
    if field.grid != *grid {
        return Err(Error::Domain(format!(
            "field lives on grid {:?} (h = {}), expected {:?} (h = {})",
            field.grid.dims, field.grid.h, grid.dims, grid.h
        )));
    }
    markers
        .positions()
        .par_iter()
        .map(|x| {
            let [sx, sy, sz] = marker_stencils(id, grid, *x)?;
            let mut acc = 0.0;
            for (i, wx) in sx.iter() {
                for (j, wy) in sy.iter() {
                    let base = (i * grid.dims[1] + j) * grid.dims[2];
                    let mut row = 0.0;
                    for (k, wz) in sz.iter() {
                        row += field.values[base + k] * wz;
                    }
                    acc += row * wx * wy;
                }
            }
            Ok(acc)
        })
        .collect()
}

fn axis_coupling(a: &AxisStencil, b: &AxisStencil) -> f64 {
    let mut acc = 0.0;
    for (i, wa) in a.iter() {
        for (j, wb) in b.iter() {
            if i == j {
                acc += wa * wb;
            }
        }
    }
    acc
}

/// `sum over grid nodes x of delta_h(x - X1) delta_h(x - X2)`, evaluated as
/// the product of three periodic 1D couplings.
pub fn pair_coupling(id: KernelId, grid: &PeriodicGrid3, x1: Point3, x2: Point3) -> Result<f64> {
    grid.check_kernel(id)?;
    let a = marker_stencils(id, grid, x1)?;
    let b = marker_stencils(id, grid, x2)?;
    let inv_h = 1.0 / grid.h;
    Ok((0..3).map(|d| axis_coupling(&a[d], &b[d]) * inv_h).product())
}

/// Writes `i,j,k,value` rows in storage order.
pub fn write_field_csv<W: Write>(field: &ScalarField3, mut out: W) -> Result<()> {
    writeln!(out, "i,j,k,value")?;
    for (n, v) in field.values.iter().enumerate() {
        let [i, j, k] = field.grid.node(n);
        writeln!(out, "{i},{j},{k},{}", g17(*v))?;
    }
    Ok(())
}

/// Reads `i,j,k,value` rows (optional header); unlisted nodes are zero.
pub fn read_field_csv<R: BufRead>(grid: PeriodicGrid3, input: R) -> Result<ScalarField3> {
    let mut field = ScalarField3::zeros(grid);
    for (lineno, record) in csv_records(input)? {
        if record.len() != 4 {
            return Err(Error::Parse(format!("line {lineno}: expected i,j,k,value")));
        }
        let mut ijk = [0usize; 3];
        for (d, slot) in ijk.iter_mut().enumerate() {
            *slot = record[d]
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("line {lineno}: bad index '{}'", &record[d])))?;
            if *slot >= grid.dims[d] {
                return Err(Error::Parse(format!("line {lineno}: index {} out of range", *slot)));
            }
        }
        field.values[grid.index(ijk)] = parse_f64(&record[3], lineno)?;
    }
    Ok(field)
}

/// Reads marker rows `x,y,z[,value]` (optional header). Either every row
/// carries a value or none does.
pub fn read_markers_csv<R: BufRead>(input: R) -> Result<(MarkerSet, Option<Vec<f64>>)> {
    let mut positions = Vec::new();
    let mut values = Vec::new();
    let mut with_values = None;
    for (lineno, record) in csv_records(input)? {
        let has_value = match record.len() {
            3 => false,
            4 => true,
            n => return Err(Error::Parse(format!("line {lineno}: expected 3 or 4 columns, got {n}"))),
        };
        if *with_values.get_or_insert(has_value) != has_value {
            return Err(Error::Parse(format!("line {lineno}: value column present on some rows only")));
        }
        positions.push([
            parse_f64(&record[0], lineno)?,
            parse_f64(&record[1], lineno)?,
            parse_f64(&record[2], lineno)?,
        ]);
        if has_value {
            values.push(parse_f64(&record[3], lineno)?);
        }
    }
    let markers = MarkerSet::new(positions)?;
    Ok((markers, with_values.unwrap_or(false).then_some(values)))
}

fn parse_f64(s: &str, lineno: usize) -> Result<f64> {
    s.trim().parse().map_err(|_| Error::Parse(format!("line {lineno}: '{s}' is not a number")))
}

/// Non-empty CSV records with 1-based line numbers; a first row whose
/// first field is not numeric is treated as a header.
fn csv_records<R: BufRead>(input: R) -> Result<Vec<(usize, csv::StringRecord)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut out = Vec::new();
    for (n, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        if n == 0 && rec.get(0).is_some_and(|f| f.parse::<f64>().is_err()) {
            continue;
        }
        out.push((n + 1, rec));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::kernel_spec;

    #[test]
    fn index_round_trip() {
        let g = PeriodicGrid3::new([4, 5, 6], 0.5).unwrap();
        for n in 0..g.len() {
            assert_eq!(g.index(g.node(n)), n);
        }
        assert_eq!(g.index([1, 0, 0]), 30);
        assert_eq!(g.index([0, 1, 0]), 6);
    }

    #[test]
    fn grid_validation() {
        assert!(PeriodicGrid3::new([4, 0, 4], 1.0).is_err());
        assert!(PeriodicGrid3::new([4, 4, 4], 0.0).is_err());
        assert!(PeriodicGrid3::new([4, 4, 4], f64::NAN).is_err());
        let g = PeriodicGrid3::cube(5).unwrap();
        assert!(g.check_kernel(KernelId::Std4).is_ok());
        assert!(matches!(g.check_kernel(KernelId::New6), Err(Error::Config(_))));
        assert!(matches!(delta3(KernelId::Std6, &g, [1.0; 3]), Err(Error::Config(_))));
    }

    #[test]
    fn min_image() {
        let g = PeriodicGrid3::cube(10).unwrap();
        assert_eq!(g.min_image([9.5, 0.0, 0.0], [0.5, 0.0, 0.0]), [1.0, 0.0, 0.0]);
        assert!((g.periodic_distance([0.2, 0.2, 0.2], [9.2, 9.2, 9.2]) - 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn delta3_center_value() {
        let g = PeriodicGrid3::cube(8).unwrap();
        let st = delta3(KernelId::New6, &g, [3.0, 4.0, 5.0]).unwrap();
        assert_eq!(st.len(), 216);
        let center = st.iter().find(|(n, _)| *n == [3, 4, 5]).unwrap().1;
        // phi(0)^3 from the 50-digit oracle
        assert!((center - 0.089_004_017_068_497_813).abs() < 1e-15);
    }

    #[test]
    fn delta3_unit_mass_and_periodicity() {
        let g = PeriodicGrid3::new([8, 9, 10], 0.25).unwrap();
        for id in KernelId::ALL {
            let x = [0.13, 1.92, 2.4];
            let st = delta3(id, &g, x).unwrap();
            let mass: f64 = st.iter().map(|(_, v)| v).sum::<f64>() * 0.25f64.powi(3);
            assert!((mass - 1.0).abs() < 1e-12);
            let ext = g.extent();
            let shifted = delta3(id, &g, [x[0] + ext[0], x[1] - ext[1], x[2]]).unwrap();
            let mut a = st.clone();
            let mut b = shifted;
            a.sort_by(|p, q| p.0.cmp(&q.0));
            b.sort_by(|p, q| p.0.cmp(&q.0));
            for (p, q) in a.iter().zip(&b) {
                assert_eq!(p.0, q.0);
                assert!((p.1 - q.1).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn spread_single_marker_conserves() {
        let g = PeriodicGrid3::new([8, 8, 8], 0.5).unwrap();
        let m = MarkerSet::new(vec![[1.3, 3.9, 0.1]]).unwrap();
        for id in KernelId::ALL {
            let f = spread(id, &g, &m, &[1.0]).unwrap();
            assert!((f.sum() * 0.125 - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn spread_empty_and_mismatch() {
        let g = PeriodicGrid3::cube(8).unwrap();
        let f = spread(KernelId::New6, &g, &MarkerSet::default(), &[]).unwrap();
        assert!(f.values().iter().all(|&v| v == 0.0));
        let m = MarkerSet::new(vec![[1.0; 3]]).unwrap();
        assert!(matches!(spread(KernelId::New6, &g, &m, &[1.0, 2.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn spread_coincident_markers_linear() {
        let g = PeriodicGrid3::cube(8).unwrap();
        let p = [2.2, 5.7, 7.9];
        let single = spread(KernelId::Std4, &g, &MarkerSet::new(vec![p]).unwrap(), &[1.0]).unwrap();
        let both = spread(KernelId::Std4, &g, &MarkerSet::new(vec![p, p]).unwrap(), &[0.3, 1.4]).unwrap();
        for (a, b) in single.values().iter().zip(both.values()) {
            assert!((1.7 * a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn interpolate_constant_and_affine() {
        let g = PeriodicGrid3::new([12, 12, 12], 0.5).unwrap();
        let m = MarkerSet::new(vec![[2.3, 2.9, 3.1], [3.0, 3.0, 3.0]]).unwrap();
        for id in KernelId::ALL {
            let c = ScalarField3::from_fn(g, |_| 2.5);
            for u in interpolate(id, &g, &c, &m).unwrap() {
                assert!((u - 2.5).abs() < 1e-12);
            }
            // markers sit well inside the box so the stencils never reach the seam
            let a = [0.7, -1.1, 0.4];
            let lin = ScalarField3::from_fn(g, |x| a[0] * x[0] + a[1] * x[1] + a[2] * x[2]);
            for (u, x) in interpolate(id, &g, &lin, &m).unwrap().iter().zip(m.positions()) {
                let want = a[0] * x[0] + a[1] * x[1] + a[2] * x[2];
                assert!((u - want).abs() < 1e-11, "{id}: {u} vs {want}");
            }
        }
    }

    #[test]
    fn interpolate_grid_mismatch() {
        let g = PeriodicGrid3::cube(8).unwrap();
        let other = PeriodicGrid3::new([8, 8, 8], 0.5).unwrap();
        let f = ScalarField3::zeros(other);
        let m = MarkerSet::new(vec![[1.0; 3]]).unwrap();
        assert!(matches!(interpolate(KernelId::Std4, &g, &f, &m), Err(Error::Domain(_))));
    }

    /// Literal grid sum over the overlap of two delta stencils.
    fn coupling_by_grid_sum(id: KernelId, g: &PeriodicGrid3, x1: Point3, x2: Point3) -> f64 {
        let a = delta3(id, g, x1).unwrap();
        let b = delta3(id, g, x2).unwrap();
        let mut dense = vec![0.0; g.len()];
        for (n, v) in a {
            dense[g.index(n)] += v;
        }
        b.iter().map(|(n, v)| dense[g.index(*n)] * v).sum()
    }

    #[test]
    fn pair_coupling_matches_grid_sum() {
        let g = PeriodicGrid3::cube(8).unwrap();
        let pairs = [([0.3, 7.8, 4.1], [1.9, 0.4, 3.3]), ([5.5, 5.5, 5.5], [5.5, 5.5, 5.5]), ([0.0, 0.1, 0.2], [7.2, 6.9, 1.4])];
        for id in KernelId::ALL {
            for (x1, x2) in pairs {
                let fast = pair_coupling(id, &g, x1, x2).unwrap();
                let slow = coupling_by_grid_sum(id, &g, x1, x2);
                assert!((fast - slow).abs() < 1e-15, "{id}: {fast} vs {slow}");
            }
        }
    }

    #[test]
    fn pair_coupling_examples() {
        let g = PeriodicGrid3::cube(16).unwrap();
        for id in KernelId::ALL {
            let c = kernel_spec(id).sum_of_squares;
            let x = [3.3, 7.1, 12.9];
            assert!((pair_coupling(id, &g, x, x).unwrap() - c.powi(3)).abs() < 1e-14);
            let far = [x[0] + 2.0 * id.support_radius(), x[1], x[2]];
            assert_eq!(pair_coupling(id, &g, x, far).unwrap(), 0.0);
            let y = [4.0, 6.2, 13.5];
            let shifted = |p: Point3| [p[0] + 3.0, p[1] - 5.0, p[2] + 16.0];
            let base = pair_coupling(id, &g, x, y).unwrap();
            assert!((pair_coupling(id, &g, shifted(x), shifted(y)).unwrap() - base).abs() < 1e-14);
            assert_eq!(base, pair_coupling(id, &g, y, x).unwrap());
        }
    }

    #[test]
    fn field_csv_round_trip() {
        let g = PeriodicGrid3::new([3, 4, 6], 1.0).unwrap();
        let f = ScalarField3::from_fn(g, |x| x[0] * 0.1 - x[1] / 3.0 + x[2].sin());
        let mut buf = Vec::new();
        write_field_csv(&f, &mut buf).unwrap();
        let back = read_field_csv(g, buf.as_slice()).unwrap();
        assert_eq!(back, f);
        assert!(read_field_csv(g, "0,0,9,1.0\n".as_bytes()).is_err());
    }

    #[test]
    fn marker_csv() {
        let (m, v) = read_markers_csv("x,y,z,value\n1,2,3,0.5\n4, 5, 6, -1\n".as_bytes()).unwrap();
        assert_eq!(m.positions(), &[[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]);
        assert_eq!(v, Some(vec![0.5, -1.0]));
        let (m, v) = read_markers_csv("1,2,3\n".as_bytes()).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(v, None);
        let (m, _) = read_markers_csv("".as_bytes()).unwrap();
        assert!(m.is_empty());
        assert!(read_markers_csv("1,2,3\n1,2,3,4\n".as_bytes()).is_err());
        assert!(read_markers_csv("1,2\n".as_bytes()).is_err());
        assert!(read_markers_csv("1,2,nan\n".as_bytes()).is_err());
    }
}
