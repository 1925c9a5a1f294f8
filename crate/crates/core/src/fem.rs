//! P1 finite elements for the Steklov problem, condensed to the boundary.
//!
//! The stiffness matrix `K` is eliminated down to the boundary vertices,
//! which gives the discrete Dirichlet-to-Neumann map `S`, and the spectrum is
//! that of `S v = λ M_b v` with `M_b` the consistent boundary mass.

use std::io::{self, Write};

use thiserror::Error;

use crate::geometry::{AnnularDomain, GeometryError, Point};
use crate::linalg::{schur_condense, sym_generalized_eig, DenseSymMatrix, LinalgError, SparseMatrix};
use crate::mesher::{build_annular_mesh_graded, signed_area, Mesh, MeshError, RadialGrading};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FemError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("triangle {index} is degenerate (area {area:e})")]
    DegenerateTriangle { index: usize, area: f64 },
    #[error("eigenpair count must be at least 1")]
    ZeroCount,
    #[error("a convergence study needs at least 3 resolutions, got {0}")]
    TooFewResolutions(usize),
}

pub type Result<T> = std::result::Result<T, FemError>;

#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub stiffness: SparseMatrix,
    /// Indexed by position in `boundary_dofs`.
    pub boundary_mass: DenseSymMatrix,
    /// Inner loop vertices first, then outer loop vertices.
    pub boundary_dofs: Vec<usize>,
    /// Dofs are vertices; kept explicit for exporters.
    pub dof_to_vertex: Vec<usize>,
    pub inner_thetas: Vec<f64>,
    pub outer_thetas: Vec<f64>,
    pub resolution: (usize, usize),
}

/// `∫ ∇φᵢ·∇φⱼ` on one triangle: `eᵢ·eⱼ / 4A` with `eᵢ` the edge opposite vertex `i`.
pub fn element_stiffness(p: [Point; 3]) -> Option<[[f64; 3]; 3]> {
    let area = 0.5 * (p[1] - p[0]).cross(p[2] - p[0]);
    if !(area > 0.0) {
        return None;
    }
    let e = [p[2] - p[1], p[0] - p[2], p[1] - p[0]];
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = e[i].dot(e[j]) / (4.0 * area);
        }
    }
    Some(k)
}

pub fn assemble(mesh: &Mesh) -> Result<AssembledSystem> {
    let n = mesh.vertices.len();
    let mut triplets = Vec::with_capacity(9 * mesh.triangles.len());
    for (index, &t) in mesh.triangles.iter().enumerate() {
        let p = [mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]];
        let ke = element_stiffness(p).ok_or(FemError::DegenerateTriangle {
            index,
            area: signed_area(&mesh.vertices, t),
        })?;
        for i in 0..3 {
            for j in 0..3 {
                triplets.push((t[i], t[j], ke[i][j]));
            }
        }
    }
    let stiffness = SparseMatrix::from_triplets(n, n, &triplets);

    let boundary_dofs = mesh.boundary_vertices();
    let mut boundary_mass = DenseSymMatrix::zeros(boundary_dofs.len());
    let mut offset = 0;
    for lp in [&mesh.inner_loop, &mesh.outer_loop] {
        let m = lp.len();
        for k in 0..m {
            let (a, b) = (offset + k, offset + (k + 1) % m);
            let len = mesh.vertices[lp[k].0].dist(mesh.vertices[lp[(k + 1) % m].0]);
            boundary_mass.add(a, a, len / 3.0);
            boundary_mass.add(b, b, len / 3.0);
            boundary_mass.add(a, b, len / 6.0);
        }
        offset += m;
    }
    Ok(AssembledSystem {
        stiffness,
        boundary_mass,
        boundary_dofs,
        dof_to_vertex: (0..n).collect(),
        inner_thetas: mesh.inner_loop.iter().map(|p| p.1).collect(),
        outer_thetas: mesh.outer_loop.iter().map(|p| p.1).collect(),
        resolution: (mesh.n_theta, mesh.n_r),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteklovSpectrum {
    /// Ascending; `eigenvalues[0]` is the trivial zero.
    pub eigenvalues: Vec<f64>,
    /// Boundary traces in `boundary_dofs` order with unit discrete L² norm.
    pub vectors: Vec<Vec<f64>>,
    pub inner_thetas: Vec<f64>,
    pub outer_thetas: Vec<f64>,
    /// True curve perimeter, when the spectrum came from a known domain.
    pub perimeter: Option<f64>,
    pub resolution: (usize, usize),
}

/// The `count` smallest eigenpairs, including the trivial one.
pub fn solve_spectrum(system: &AssembledSystem, count: usize) -> Result<SteklovSpectrum> {
    if count == 0 {
        return Err(FemError::ZeroCount);
    }
    let s = schur_condense(&system.stiffness, &system.boundary_dofs)?;
    let pairs = sym_generalized_eig(&s, &system.boundary_mass, count)?;
    let n_inner = system.inner_thetas.len();
    let mut eigenvalues = Vec::with_capacity(count);
    let mut vectors = Vec::with_capacity(count);
    for p in pairs {
        let mut v = p.vector;
        if outer_sign_flipped(&v[n_inner..]) {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        eigenvalues.push(p.value);
        vectors.push(v);
    }
    Ok(SteklovSpectrum {
        eigenvalues,
        vectors,
        inner_thetas: system.inner_thetas.clone(),
        outer_thetas: system.outer_thetas.clone(),
        perimeter: None,
        resolution: system.resolution,
    })
}

/// Index of the first outer-loop entry that is clearly nonzero; at θ = 0 for
/// cosine-like modes, a little later for sine-like ones.
fn sign_reference(outer: &[f64]) -> Option<usize> {
    let scale = outer.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    outer.iter().position(|v| v.abs() > 1e-6 * scale)
}

fn outer_sign_flipped(outer: &[f64]) -> bool {
    sign_reference(outer).is_some_and(|k| outer[k] < 0.0)
}

impl SteklovSpectrum {
    pub fn lambda1(&self) -> f64 {
        self.eigenvalues[1]
    }

    pub fn normalized(&self, index: usize) -> Option<f64> {
        self.perimeter.map(|p| p * self.eigenvalues[index])
    }

    pub fn inner_trace<'a>(&'a self, index: usize) -> impl Iterator<Item = (f64, f64)> + 'a {
        let v = &self.vectors[index];
        self.inner_thetas.iter().copied().zip(v.iter().copied())
    }

    pub fn outer_trace<'a>(&'a self, index: usize) -> impl Iterator<Item = (f64, f64)> + 'a {
        let v = &self.vectors[index][self.inner_thetas.len()..];
        self.outer_thetas.iter().copied().zip(v.iter().copied())
    }

    /// `index,eigenvalue,normalized`; the last column is empty without a perimeter.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "index,eigenvalue,normalized")?;
        for (i, &lam) in self.eigenvalues.iter().enumerate() {
            match self.normalized(i) {
                Some(v) => writeln!(w, "{i},{lam:.12e},{v:.12e}")?,
                None => writeln!(w, "{i},{lam:.12e},")?,
            }
        }
        Ok(())
    }

    /// `loop,theta,u` for eigenvector `index`.
    pub fn write_trace_csv<W: Write>(&self, mut w: W, index: usize) -> io::Result<()> {
        writeln!(w, "loop,theta,u")?;
        for (t, u) in self.inner_trace(index) {
            writeln!(w, "inner,{t:.12e},{u:.12e}")?;
        }
        for (t, u) in self.outer_trace(index) {
            writeln!(w, "outer,{t:.12e},{u:.12e}")?;
        }
        Ok(())
    }
}

/// Meshes, assembles and solves `domain`, recording its true perimeter.
pub fn solve_domain(
    domain: &AnnularDomain,
    n_theta: usize,
    n_r: usize,
    grading: RadialGrading,
    count: usize,
) -> Result<SteklovSpectrum> {
    let mesh = build_annular_mesh_graded(domain, n_theta, n_r, grading)?;
    let system = assemble(&mesh)?;
    let mut spectrum = solve_spectrum(&system, count)?;
    spectrum.perimeter = Some(domain.perimeter()?);
    Ok(spectrum)
}

/// `λ₁ · |∂Ω|` with the exact curve perimeter and the default radial grading.
pub fn normalized_first(domain: &AnnularDomain, n_theta: usize, n_r: usize) -> Result<f64> {
    let spectrum = solve_domain(domain, n_theta, n_r, RadialGrading::auto(domain), 2)?;
    Ok(spectrum.lambda1() * domain.perimeter()?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub n_theta: usize,
    pub n_r: usize,
    pub h: f64,
    pub lambda1: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    /// Richardson limit from the three finest resolutions.
    pub limit: f64,
    pub observed_order: f64,
}

/// λ₁ over a sequence of resolutions, each refining the previous by the same
/// ratio, with a Richardson estimate of the limit.
pub fn convergence_study(
    domain: &AnnularDomain,
    resolutions: &[(usize, usize)],
) -> Result<ConvergenceReport> {
    if resolutions.len() < 3 {
        return Err(FemError::TooFewResolutions(resolutions.len()));
    }
    let grading = RadialGrading::auto(domain);
    let values: Vec<f64> = resolutions
        .iter()
        .map(|&(nt, nr)| solve_domain(domain, nt, nr, grading, 2).map(|s| s.lambda1()))
        .collect::<Result<_>>()?;
    let k = values.len();
    let (a, b, c) = (values[k - 3], values[k - 2], values[k - 1]);
    let ratio = resolutions[k - 1].0 as f64 / resolutions[k - 2].0 as f64;
    let observed_order = ((a - b) / (b - c)).abs().ln() / ratio.ln();
    let limit = c - (b - c) / (ratio.powf(observed_order) - 1.0);
    let rows = resolutions
        .iter()
        .zip(&values)
        .map(|(&(n_theta, n_r), &lambda1)| ConvergenceRow {
            n_theta,
            n_r,
            h: 1.0 / n_theta as f64,
            lambda1,
            error: (lambda1 - limit).abs(),
        })
        .collect();
    Ok(ConvergenceReport { rows, limit, observed_order })
}
