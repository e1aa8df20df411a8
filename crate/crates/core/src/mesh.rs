//! Triangulation of `[0, a]` and the velocity/pressure numbering.
//!
//! With `N + 1` elements `K_j = [y_j, y_{j+1}]` there are `2N + 1` free
//! velocity nodes (element midpoints and interior endpoints; the two wall
//! nodes are constrained) and `N + 2` pressure nodes. Velocity node `g`
//! sits at the midpoint of `K_j` when `g = 2j + 1` and at `y_j` when
//! `g = 2j`; `0` marks a wall node in the connectivity table.

use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Mesh1D {
    a: f64,
    grading: f64,
    nodes: Vec<f64>,
}

/// Element-to-global velocity numbering, 3 local nodes per element.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VelocityConnectivity(pub Vec<[usize; 3]>);

/// Element-to-global pressure numbering, 2 local nodes per element.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PressureConnectivity(pub Vec<[usize; 2]>);

/// Nodes `y_j = a (j / (N+1))^beta`.
pub fn build_mesh(a: f64, n_elements: usize, grading_exponent: f64) -> Result<Mesh1D> {
    if !(a.is_finite() && a > 0.0) {
        return Err(Error::param("a", format!("must be positive, got {a}")));
    }
    if n_elements == 0 {
        return Err(Error::param("n_elements", "need at least one element"));
    }
    if !(grading_exponent.is_finite() && grading_exponent > 0.0) {
        return Err(Error::param(
            "grading_exponent",
            format!("must be positive, got {grading_exponent}"),
        ));
    }
    let ne = n_elements as f64;
    let mut nodes: Vec<f64> = (0..=n_elements)
        .map(|j| {
            let t = j as f64 / ne;
            if grading_exponent == 1.0 {
                a * t
            } else {
                a * t.powf(grading_exponent)
            }
        })
        .collect();
    nodes[0] = 0.0;
    nodes[n_elements] = a;
    Mesh1D::from_nodes(nodes).map(|mut m| {
        m.grading = grading_exponent;
        m
    })
}

impl Mesh1D {
    /// Mesh from explicit, strictly increasing node coordinates starting at 0.
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::Mesh("need at least two nodes".into()));
        }
        if nodes[0] != 0.0 {
            return Err(Error::Mesh(format!("first node must be 0, got {}", nodes[0])));
        }
        for (j, w) in nodes.windows(2).enumerate() {
            if !(w[1] > w[0]) || !w[1].is_finite() {
                return Err(Error::Mesh(format!(
                    "element {j} has non-positive length ({} -> {})",
                    w[0], w[1]
                )));
            }
        }
        Ok(Self {
            a: *nodes.last().unwrap(),
            grading: 1.0,
            nodes,
        })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn grading(&self) -> f64 {
        self.grading
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Number of elements, `N + 1`.
    pub fn n_elements(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Free velocity nodes, `2N + 1`.
    pub fn n_velocity_nodes(&self) -> usize {
        2 * self.n_elements() - 1
    }

    /// Pressure nodes, `N + 2`.
    pub fn n_pressure_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn element(&self, j: usize) -> (f64, f64) {
        (self.nodes[j], self.nodes[j + 1])
    }

    pub fn h(&self, j: usize) -> f64 {
        self.nodes[j + 1] - self.nodes[j]
    }

    /// Coordinate of free velocity node `g` (1-based).
    pub fn velocity_node(&self, g: usize) -> f64 {
        debug_assert!(g >= 1 && g <= self.n_velocity_nodes());
        if g % 2 == 1 {
            let j = (g - 1) / 2;
            0.5 * (self.nodes[j] + self.nodes[j + 1])
        } else {
            self.nodes[g / 2]
        }
    }

    /// Element containing `y` and the local coordinate in `[0, 1]`.
    pub fn locate(&self, y: f64) -> Result<(usize, f64)> {
        if !(0.0..=self.a).contains(&y) {
            return Err(Error::Domain { value: y, lo: 0.0, hi: self.a });
        }
        let j = match self.nodes.binary_search_by(|p| p.total_cmp(&y)) {
            Ok(k) => k.min(self.n_elements() - 1),
            Err(k) => k - 1,
        };
        let (y0, y1) = self.element(j);
        Ok((j, ((y - y0) / (y1 - y0)).clamp(0.0, 1.0)))
    }

    pub fn velocity_connectivity(&self) -> VelocityConnectivity {
        velocity_connectivity(self)
    }

    pub fn pressure_connectivity(&self) -> PressureConnectivity {
        pressure_connectivity(self)
    }

    /// The mesh mirrored by `y -> a - y`.
    pub fn reflected(&self) -> Self {
        let nodes: Vec<f64> = self.nodes.iter().rev().map(|y| self.a - y).collect();
        let mut m = Self::from_nodes(nodes).expect("reflection of a valid mesh");
        m.grading = self.grading;
        m
    }
}

pub fn velocity_connectivity(mesh: &Mesh1D) -> VelocityConnectivity {
    let ne = mesh.n_elements();
    VelocityConnectivity(
        (0..ne)
            .map(|j| {
                let mut row = [2 * j, 2 * j + 1, 2 * j + 2];
                if j + 1 == ne {
                    row[2] = 0;
                }
                row
            })
            .collect(),
    )
}

pub fn pressure_connectivity(mesh: &Mesh1D) -> PressureConnectivity {
    PressureConnectivity((0..mesh.n_elements()).map(|j| [j, j + 1]).collect())
}

impl VelocityConnectivity {
    pub fn rows(&self) -> &[[usize; 3]] {
        &self.0
    }
}

impl PressureConnectivity {
    pub fn rows(&self) -> &[[usize; 2]] {
        &self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_nodes() {
        assert_eq!(build_mesh(1.0, 2, 1.0).unwrap().nodes(), &[0.0, 0.5, 1.0]);
        assert_eq!(build_mesh(2.0, 4, 1.0).unwrap().nodes(), &[0.0, 0.5, 1.0, 1.5, 2.0]);
    }

    #[test]
    fn graded_nodes() {
        assert_eq!(build_mesh(1.0, 2, 2.0).unwrap().nodes(), &[0.0, 0.25, 1.0]);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(build_mesh(0.0, 2, 1.0).is_err());
        assert!(build_mesh(1.0, 0, 1.0).is_err());
        assert!(build_mesh(1.0, 2, 0.0).is_err());
        assert!(build_mesh(1.0, 2, -1.0).is_err());
    }

    #[test]
    fn velocity_tables() {
        let l1 = |ne| build_mesh(1.0, ne, 1.0).unwrap().velocity_connectivity().0;
        assert_eq!(l1(2), vec![[0, 1, 2], [2, 3, 0]]);
        assert_eq!(l1(3), vec![[0, 1, 2], [2, 3, 4], [4, 5, 0]]);
        assert_eq!(l1(1), vec![[0, 1, 0]]);
    }

    #[test]
    fn pressure_tables() {
        let l2 = |ne| build_mesh(1.0, ne, 1.0).unwrap().pressure_connectivity().0;
        assert_eq!(l2(2), vec![[0, 1], [1, 2]]);
        assert_eq!(l2(1), vec![[0, 1]]);
        assert_eq!(l2(4), vec![[0, 1], [1, 2], [2, 3], [3, 4]]);
    }

    #[test]
    fn unknown_counts() {
        for ne in 1..12 {
            let m = build_mesh(3.0, ne, 1.5).unwrap();
            let mut v: Vec<usize> = m.velocity_connectivity().0.iter().flatten().copied().filter(|&g| g != 0).collect();
            v.sort();
            v.dedup();
            assert_eq!(v.len(), m.n_velocity_nodes());
            assert_eq!(v.len(), 2 * (ne - 1) + 1);
            let mut p: Vec<usize> = m.pressure_connectivity().0.iter().flatten().copied().collect();
            p.sort();
            p.dedup();
            assert_eq!(p.len(), ne + 1);
        }
    }

    #[test]
    fn locate_points() {
        let m = build_mesh(2.0, 4, 1.0).unwrap();
        assert_eq!(m.locate(0.0).unwrap(), (0, 0.0));
        assert_eq!(m.locate(2.0).unwrap(), (3, 1.0));
        assert_eq!(m.locate(0.75).unwrap(), (1, 0.5));
        assert!(m.locate(2.1).is_err());
    }

    #[test]
    fn velocity_node_coordinates() {
        let m = build_mesh(2.0, 2, 1.0).unwrap();
        assert_eq!(
            (1..=3).map(|g| m.velocity_node(g)).collect::<Vec<_>>(),
            vec![0.5, 1.0, 1.5]
        );
    }

    #[test]
    fn reflection_round_trip() {
        let m = build_mesh(2.0, 5, 1.7).unwrap();
        let r = m.reflected().reflected();
        for (x, y) in m.nodes().iter().zip(r.nodes()) {
            assert!((x - y).abs() < 1e-15);
        }
    }
}
