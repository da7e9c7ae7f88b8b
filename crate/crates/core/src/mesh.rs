//! Simplicial meshes of product domains: 1D intervals and axis-aligned
//! rectangles triangulated into right triangles.
//!
//! The mesh stores node coordinates, element connectivity, cached element
//! measures (lengths/areas) and the boundary node set. Boundary nodes are
//! detected from facet incidence: a facet (endpoint in 1D, edge in 2D) that
//! belongs to exactly one element lies on the boundary. Structured 2D meshes
//! split every grid cell along the same diagonal, so all triangles are
//! non-obtuse right triangles.
//!
//! Meshes are immutable after construction and safe to share across threads.

use std::collections::HashMap;
use std::io::Write;

use crate::error::{Error, Result};

/// Conforming simplicial mesh in 1 or 2 dimensions.
#[derive(Debug, Clone)]
pub struct Mesh {
    dim: usize,
    /// Node coordinates, `dim` entries per node.
    coords: Vec<f64>,
    /// Element connectivity, `dim + 1` node indices per element.
    elements: Vec<usize>,
    /// Sorted indices of boundary nodes.
    boundary: Vec<usize>,
    boundary_mask: Vec<bool>,
    /// Cached element lengths (1D) or areas (2D).
    measures: Vec<f64>,
}

/// P1 hat-function gradients on one element, one constant vector per vertex.
#[derive(Debug, Clone, Copy)]
pub struct P1Gradients {
    dim: usize,
    n_vertices: usize,
    g: [[f64; 2]; 3],
}

impl P1Gradients {
    pub fn vertex(&self, local: usize) -> &[f64] {
        &self.g[local][..self.dim]
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    /// Gradient of the P1 interpolant with the given vertex values.
    pub fn field_gradient(&self, vertex_values: &[f64]) -> [f64; 2] {
        let mut out = [0.0; 2];
        for (v, &val) in vertex_values.iter().enumerate().take(self.n_vertices) {
            for d in 0..self.dim {
                out[d] += val * self.g[v][d];
            }
        }
        out
    }
}

impl Mesh {
    /// Builds a mesh from raw arrays, validating connectivity, element
    /// measures and conformity. `coords` holds `dim` entries per node,
    /// `elements` holds `dim + 1` indices per element.
    pub fn from_raw(dim: usize, coords: Vec<f64>, elements: Vec<usize>) -> Result<Mesh> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidArgument(format!(
                "mesh dimension must be 1 or 2, got {dim}"
            )));
        }
        if coords.is_empty() || coords.len() % dim != 0 {
            return Err(Error::InvalidArgument(format!(
                "coordinate array length {} is not a nonzero multiple of dim {dim}",
                coords.len()
            )));
        }
        let verts_per_elem = dim + 1;
        if elements.is_empty() || elements.len() % verts_per_elem != 0 {
            return Err(Error::InvalidArgument(format!(
                "element array length {} is not a nonzero multiple of {verts_per_elem}",
                elements.len()
            )));
        }
        let n_nodes = coords.len() / dim;
        let n_elements = elements.len() / verts_per_elem;

        for (e, elem) in elements.chunks(verts_per_elem).enumerate() {
            for &v in elem {
                if v >= n_nodes {
                    return Err(Error::InvalidArgument(format!(
                        "element {e} references node {v}, but mesh has {n_nodes} nodes"
                    )));
                }
            }
            for i in 0..verts_per_elem {
                for j in i + 1..verts_per_elem {
                    if elem[i] == elem[j] {
                        return Err(Error::InvalidArgument(format!(
                            "element {e} repeats node {}",
                            elem[i]
                        )));
                    }
                }
            }
        }

        let mut mesh = Mesh {
            dim,
            coords,
            elements,
            boundary: Vec::new(),
            boundary_mask: vec![false; n_nodes],
            measures: Vec::with_capacity(n_elements),
        };

        for e in 0..n_elements {
            let measure = mesh.compute_measure(e);
            if !measure.is_finite() || measure <= 0.0 {
                return Err(Error::DegenerateElement {
                    element: e,
                    measure,
                });
            }
            mesh.measures.push(measure);
        }

        mesh.detect_boundary()?;
        Ok(mesh)
    }

    /// Uniform mesh of the interval `(a, b)` with `n` elements.
    pub fn interval(a: f64, b: f64, n: usize) -> Result<Mesh> {
        if n == 0 {
            return Err(Error::InvalidArgument("mesh size n must be >= 1".into()));
        }
        if !(b > a) {
            return Err(Error::InvalidArgument(format!(
                "interval requires a < b, got [{a}, {b}]"
            )));
        }
        let h = (b - a) / n as f64;
        let coords: Vec<f64> = (0..=n)
            .map(|i| if i == n { b } else { a + i as f64 * h })
            .collect();
        let elements: Vec<usize> = (0..n).flat_map(|i| [i, i + 1]).collect();
        Mesh::from_raw(1, coords, elements)
    }

    /// Uniform mesh of `(0, 1)` with `n` elements.
    pub fn unit_interval(n: usize) -> Result<Mesh> {
        Mesh::interval(0.0, 1.0, n)
    }

    /// Structured triangulation of the rectangle `(x0, x1) x (y0, y1)` with
    /// `nx * ny` grid cells, each split along the cell diagonal into two
    /// right triangles.
    pub fn rectangle(x0: f64, x1: f64, y0: f64, y1: f64, nx: usize, ny: usize) -> Result<Mesh> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidArgument("mesh size n must be >= 1".into()));
        }
        if !(x1 > x0) || !(y1 > y0) {
            return Err(Error::InvalidArgument(format!(
                "rectangle requires x0 < x1 and y0 < y1, got [{x0}, {x1}] x [{y0}, {y1}]"
            )));
        }
        let hx = (x1 - x0) / nx as f64;
        let hy = (y1 - y0) / ny as f64;
        let node = |ix: usize, iy: usize| iy * (nx + 1) + ix;
        let mut coords = Vec::with_capacity(2 * (nx + 1) * (ny + 1));
        for iy in 0..=ny {
            let y = if iy == ny { y1 } else { y0 + iy as f64 * hy };
            for ix in 0..=nx {
                let x = if ix == nx { x1 } else { x0 + ix as f64 * hx };
                coords.push(x);
                coords.push(y);
            }
        }
        let mut elements = Vec::with_capacity(6 * nx * ny);
        for iy in 0..ny {
            for ix in 0..nx {
                let a = node(ix, iy);
                let b = node(ix + 1, iy);
                let c = node(ix + 1, iy + 1);
                let d = node(ix, iy + 1);
                // diagonal a-c, shared by every cell
                elements.extend_from_slice(&[a, b, c]);
                elements.extend_from_slice(&[a, c, d]);
            }
        }
        Mesh::from_raw(2, coords, elements)
    }

    /// Structured triangulation of `(0, 1)^2` with `2 n^2` triangles.
    pub fn unit_square(n: usize) -> Result<Mesh> {
        Mesh::rectangle(0.0, 1.0, 0.0, 1.0, n, n)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_nodes(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len() / (self.dim + 1)
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    /// Node indices of element `e` (`dim + 1` of them).
    pub fn element(&self, e: usize) -> &[usize] {
        let k = self.dim + 1;
        &self.elements[e * k..(e + 1) * k]
    }

    pub fn element_measure(&self, e: usize) -> f64 {
        self.measures[e]
    }

    pub fn element_measures(&self) -> &[f64] {
        &self.measures
    }

    pub fn element_centroid(&self, e: usize) -> [f64; 2] {
        let verts = self.element(e);
        let mut c = [0.0; 2];
        for &v in verts {
            let x = self.node(v);
            for d in 0..self.dim {
                c[d] += x[d];
            }
        }
        let k = verts.len() as f64;
        for d in 0..self.dim {
            c[d] /= k;
        }
        c
    }

    /// Sorted boundary node indices.
    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.boundary_mask[node]
    }

    /// Ascending indices of non-boundary nodes.
    pub fn interior_nodes(&self) -> Vec<usize> {
        (0..self.n_nodes()).filter(|&i| !self.is_boundary(i)).collect()
    }

    pub fn domain_measure(&self) -> f64 {
        self.measures.iter().sum()
    }

    /// Constant gradients of the P1 hat functions on element `e`, together
    /// with the element measure. The per-vertex gradients sum to zero.
    pub fn element_gradients(&self, e: usize) -> Result<(P1Gradients, f64)> {
        if e >= self.n_elements() {
            return Err(Error::InvalidArgument(format!(
                "element index {e} out of range ({} elements)",
                self.n_elements()
            )));
        }
        let verts = self.element(e);
        let mut g = [[0.0; 2]; 3];
        let measure;
        match self.dim {
            1 => {
                let x0 = self.node(verts[0])[0];
                let x1 = self.node(verts[1])[0];
                let h = x1 - x0;
                measure = h.abs();
                if !measure.is_finite() || measure <= 0.0 {
                    return Err(Error::DegenerateElement {
                        element: e,
                        measure,
                    });
                }
                g[0][0] = -1.0 / h;
                g[1][0] = 1.0 / h;
            }
            _ => {
                let p0 = self.node(verts[0]);
                let p1 = self.node(verts[1]);
                let p2 = self.node(verts[2]);
                // signed area from the cross product of two edges
                let twice_area = (p1[0] - p0[0]) * (p2[1] - p0[1])
                    - (p2[0] - p0[0]) * (p1[1] - p0[1]);
                measure = 0.5 * twice_area.abs();
                if !measure.is_finite() || measure <= 0.0 {
                    return Err(Error::DegenerateElement {
                        element: e,
                        measure,
                    });
                }
                g[0] = [(p1[1] - p2[1]) / twice_area, (p2[0] - p1[0]) / twice_area];
                g[1] = [(p2[1] - p0[1]) / twice_area, (p0[0] - p2[0]) / twice_area];
                g[2] = [(p0[1] - p1[1]) / twice_area, (p1[0] - p0[0]) / twice_area];
            }
        }
        Ok((
            P1Gradients {
                dim: self.dim,
                n_vertices: self.dim + 1,
                g,
            },
            measure,
        ))
    }

    /// Writes the mesh and optional nodal scalar fields in legacy ASCII VTK.
    pub fn write_vtk<W: Write>(&self, w: &mut W, point_data: &[(&str, &[f64])]) -> Result<()> {
        for (name, values) in point_data {
            if values.len() != self.n_nodes() {
                return Err(Error::InvalidArgument(format!(
                    "point data '{name}' has {} values for {} nodes",
                    values.len(),
                    self.n_nodes()
                )));
            }
        }
        writeln!(w, "# vtk DataFile Version 3.0")?;
        writeln!(w, "rosseland mesh")?;
        writeln!(w, "ASCII")?;
        writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
        writeln!(w, "POINTS {} double", self.n_nodes())?;
        for i in 0..self.n_nodes() {
            let x = self.node(i);
            let y = if self.dim > 1 { x[1] } else { 0.0 };
            writeln!(w, "{:.16e} {:.16e} {:.16e}", x[0], y, 0.0)?;
        }
        let k = self.dim + 1;
        writeln!(w, "CELLS {} {}", self.n_elements(), self.n_elements() * (k + 1))?;
        for e in 0..self.n_elements() {
            let verts = self.element(e);
            write!(w, "{k}")?;
            for &v in verts {
                write!(w, " {v}")?;
            }
            writeln!(w)?;
        }
        writeln!(w, "CELL_TYPES {}", self.n_elements())?;
        let cell_type = if self.dim == 1 { 3 } else { 5 }; // VTK_LINE / VTK_TRIANGLE
        for _ in 0..self.n_elements() {
            writeln!(w, "{cell_type}")?;
        }
        if !point_data.is_empty() {
            writeln!(w, "POINT_DATA {}", self.n_nodes())?;
            for (name, values) in point_data {
                writeln!(w, "SCALARS {name} double 1")?;
                writeln!(w, "LOOKUP_TABLE default")?;
                for v in *values {
                    writeln!(w, "{v:.16e}")?;
                }
            }
        }
        Ok(())
    }

    fn compute_measure(&self, e: usize) -> f64 {
        let verts = self.element(e);
        match self.dim {
            1 => (self.node(verts[1])[0] - self.node(verts[0])[0]).abs(),
            _ => {
                let p0 = self.node(verts[0]);
                let p1 = self.node(verts[1]);
                let p2 = self.node(verts[2]);
                0.5 * ((p1[0] - p0[0]) * (p2[1] - p0[1])
                    - (p2[0] - p0[0]) * (p1[1] - p0[1]))
                    .abs()
            }
        }
    }

    /// Facet-incidence boundary detection. In 1D a facet is a node, in 2D an
    /// edge. A facet on exactly one element is a boundary facet; in 2D every
    /// interior edge must be shared by exactly two triangles.
    fn detect_boundary(&mut self) -> Result<()> {
        let mut counts: HashMap<(usize, usize), usize> = HashMap::new();
        let k = self.dim + 1;
        for elem in self.elements.chunks(k) {
            match self.dim {
                1 => {
                    for &v in elem {
                        *counts.entry((v, v)).or_insert(0) += 1;
                    }
                }
                _ => {
                    for i in 0..3 {
                        let a = elem[i];
                        let b = elem[(i + 1) % 3];
                        let key = (a.min(b), a.max(b));
                        *counts.entry(key).or_insert(0) += 1;
                    }
                }
            }
        }
        for (&(a, b), &count) in &counts {
            if count > 2 {
                return Err(Error::InvalidArgument(format!(
                    "non-conforming mesh: facet ({a}, {b}) shared by {count} elements"
                )));
            }
            if count == 1 {
                self.boundary_mask[a] = true;
                self.boundary_mask[b] = true;
            }
        }
        self.boundary = (0..self.n_nodes())
            .filter(|&i| self.boundary_mask[i])
            .collect();
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_interval_n4() {
        let mesh = Mesh::unit_interval(4).unwrap();
        assert_eq!(mesh.n_nodes(), 5);
        assert_eq!(mesh.n_elements(), 4);
        let expected = [0.0, 0.25, 0.5, 0.75, 1.0];
        for (i, &x) in expected.iter().enumerate() {
            assert_eq!(mesh.node(i)[0], x);
        }
        assert_eq!(mesh.boundary_nodes(), &[0, 4]);
    }

    #[test]
    fn unit_interval_n1_all_boundary() {
        let mesh = Mesh::unit_interval(1).unwrap();
        assert_eq!(mesh.n_nodes(), 2);
        assert_eq!(mesh.n_elements(), 1);
        assert_eq!(mesh.boundary_nodes(), &[0, 1]);
        assert!(mesh.interior_nodes().is_empty());
    }

    #[test]
    fn interval_measures_partition_domain() {
        let mesh = Mesh::unit_interval(100).unwrap();
        assert!((mesh.domain_measure() - 1.0).abs() <= 1e-14);
    }

    #[test]
    fn zero_size_rejected() {
        assert!(matches!(
            Mesh::unit_interval(0),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            Mesh::unit_square(0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn unit_square_n2_counts() {
        let mesh = Mesh::unit_square(2).unwrap();
        assert_eq!(mesh.n_nodes(), 9);
        assert_eq!(mesh.n_elements(), 8);
        assert_eq!(mesh.boundary_nodes().len(), 8);
        // only the center node (1,1) of the 3x3 grid is interior
        assert_eq!(mesh.interior_nodes(), vec![4]);
    }

    #[test]
    fn unit_square_n1_all_boundary() {
        let mesh = Mesh::unit_square(1).unwrap();
        assert_eq!(mesh.n_nodes(), 4);
        assert_eq!(mesh.n_elements(), 2);
        assert_eq!(mesh.boundary_nodes(), &[0, 1, 2, 3]);
    }

    #[test]
    fn unit_square_tessellates() {
        let mesh = Mesh::unit_square(8).unwrap();
        assert!((mesh.domain_measure() - 1.0).abs() <= 1e-13);
    }

    #[test]
    fn gradients_1d_element() {
        let mesh = Mesh::interval(0.0, 0.5, 1).unwrap();
        let (g, measure) = mesh.element_gradients(0).unwrap();
        assert_eq!(measure, 0.5);
        assert_eq!(g.vertex(0)[0], -2.0);
        assert_eq!(g.vertex(1)[0], 2.0);
    }

    #[test]
    fn gradients_unit_right_triangle() {
        let coords = vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0];
        let mesh = Mesh::from_raw(2, coords, vec![0, 1, 2]).unwrap();
        let (g, measure) = mesh.element_gradients(0).unwrap();
        assert_eq!(measure, 0.5);
        assert_eq!(g.vertex(0), &[-1.0, -1.0]);
        assert_eq!(g.vertex(1), &[1.0, 0.0]);
        assert_eq!(g.vertex(2), &[0.0, 1.0]);
    }

    #[test]
    fn gradients_sum_to_zero() {
        for mesh in [Mesh::unit_interval(7).unwrap(), Mesh::unit_square(3).unwrap()] {
            for e in 0..mesh.n_elements() {
                let (g, _) = mesh.element_gradients(e).unwrap();
                for d in 0..mesh.dim() {
                    let s: f64 = (0..g.n_vertices()).map(|v| g.vertex(v)[d]).sum();
                    assert!(s.abs() <= 1e-14, "element {e} dim {d}: {s}");
                }
            }
        }
    }

    #[test]
    fn degenerate_triangle_rejected() {
        // collinear points
        let coords = vec![0.0, 0.0, 1.0, 0.0, 2.0, 0.0];
        let err = Mesh::from_raw(2, coords, vec![0, 1, 2]).unwrap_err();
        assert!(matches!(err, Error::DegenerateElement { element: 0, .. }));
    }

    #[test]
    fn invalid_connectivity_rejected() {
        let coords = vec![0.0, 1.0];
        assert!(Mesh::from_raw(1, coords.clone(), vec![0, 7]).is_err());
        assert!(Mesh::from_raw(1, coords, vec![0, 0]).is_err());
    }

    #[test]
    fn nonconforming_rejected() {
        // three segments sharing node 1
        let coords = vec![0.0, 1.0, 2.0, 3.0];
        let err = Mesh::from_raw(1, coords, vec![0, 1, 1, 2, 1, 3]).unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)));
    }

    #[test]
    fn boundary_detection_is_idempotent() {
        let mesh = Mesh::unit_square(4).unwrap();
        let rebuilt = Mesh::from_raw(
            2,
            mesh.coords.clone(),
            mesh.elements.clone(),
        )
        .unwrap();
        assert_eq!(mesh.boundary_nodes(), rebuilt.boundary_nodes());
        // analytic boundary: any coordinate equal to 0 or 1
        for i in 0..mesh.n_nodes() {
            let x = mesh.node(i);
            let analytic = x.iter().any(|&c| c == 0.0 || c == 1.0);
            assert_eq!(mesh.is_boundary(i), analytic, "node {i} at {x:?}");
        }
    }

    #[test]
    fn rectangle_measures() {
        let mesh = Mesh::rectangle(-1.0, 3.0, 0.5, 1.0, 4, 2).unwrap();
        assert!((mesh.domain_measure() - 2.0).abs() <= 1e-13);
        assert_eq!(mesh.n_elements(), 16);
    }

    #[test]
    fn vtk_output_shape() {
        let mesh = Mesh::unit_interval(4).unwrap();
        let field = vec![1.0; 5];
        let mut buf = Vec::new();
        mesh.write_vtk(&mut buf, &[("u", &field)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("POINTS 5 double"));
        assert!(text.contains("CELLS 4 12"));
        assert!(text.contains("CELL_TYPES 4"));
        assert!(text.contains("SCALARS u double 1"));
    }
}
