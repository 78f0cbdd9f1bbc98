use crate::{Error, Result};

/// A finite ordered set of points in `R^dim`, stored row-major.
///
/// Every coordinate is finite; constructors reject NaN and infinities.
#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud {
    dim: usize,
    coords: Vec<f64>,
}

impl PointCloud {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("ambient dimension must be positive"));
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(Error::Format(format!(
                "{} coordinates do not split into points of dimension {dim}",
                coords.len()
            )));
        }
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::Format(format!(
                "non-finite coordinate in point {} (axis {})",
                i / dim,
                i % dim
            )));
        }
        Ok(Self { dim, coords })
    }

    /// An empty cloud of the given dimension.
    pub fn empty(dim: usize) -> Self {
        assert!(dim > 0, "ambient dimension must be positive");
        Self {
            dim,
            coords: Vec::new(),
        }
    }

    pub fn from_points<'a, I>(dim: usize, points: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let mut coords = Vec::new();
        for p in points {
            Error::check_dim(dim, p.len())?;
            coords.extend_from_slice(p);
        }
        Self::new(dim, coords)
    }

    /// Builds a cloud from owned rows, e.g. `vec![vec![0.0, 1.0], ...]`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::Empty("no rows to infer the dimension from".into()))?;
        Self::from_points(dim, rows.iter().map(Vec::as_slice))
    }

    /// Internal constructor for coordinates already known to be finite.
    pub(crate) fn from_raw(dim: usize, coords: Vec<f64>) -> Self {
        debug_assert!(coords.len().is_multiple_of(dim));
        debug_assert!(coords.iter().all(|c| c.is_finite()));
        Self { dim, coords }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn push(&mut self, p: &[f64]) -> Result<()> {
        Error::check_dim(self.dim, p.len())?;
        if p.iter().any(|c| !c.is_finite()) {
            return Err(Error::Format("non-finite coordinate".into()));
        }
        self.coords.extend_from_slice(p);
        Ok(())
    }

    /// The first `n` points (all of them if `n >= len`).
    pub fn prefix(&self, n: usize) -> PointCloud {
        let n = n.min(self.len());
        Self::from_raw(self.dim, self.coords[..n * self.dim].to_vec())
    }

    /// Points at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> PointCloud {
        let mut coords = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            coords.extend_from_slice(self.point(i));
        }
        Self::from_raw(self.dim, coords)
    }

    /// Applies `f` to every point, producing a cloud of dimension `out_dim`.
    pub fn map_points<F>(&self, out_dim: usize, mut f: F) -> Result<PointCloud>
    where
        F: FnMut(&[f64], &mut [f64]),
    {
        let mut coords = vec![0.0; self.len() * out_dim];
        for (src, dst) in self.iter().zip(coords.chunks_exact_mut(out_dim)) {
            f(src, dst);
        }
        PointCloud::new(out_dim, coords)
    }

    /// Removes points whose coordinates are bitwise identical to an earlier
    /// point, keeping first occurrences in order.
    pub fn dedup_exact(&self) -> PointCloud {
        let mut seen = std::collections::HashSet::with_capacity(self.len());
        let mut coords = Vec::with_capacity(self.coords.len());
        for p in self.iter() {
            let key: Vec<u64> = p.iter().map(|c| normalize_zero(*c).to_bits()).collect();
            if seen.insert(key) {
                coords.extend_from_slice(p);
            }
        }
        Self::from_raw(self.dim, coords)
    }

    /// Coordinate-wise mean. `None` for an empty cloud.
    pub fn mean(&self) -> Option<Vec<f64>> {
        if self.is_empty() {
            return None;
        }
        let mut m = vec![0.0; self.dim];
        for p in self.iter() {
            for (a, b) in m.iter_mut().zip(p) {
                *a += b;
            }
        }
        let n = self.len() as f64;
        m.iter_mut().for_each(|a| *a /= n);
        Some(m)
    }
}

// -0.0 and 0.0 denote the same point.
fn normalize_zero(c: f64) -> f64 {
    if c == 0.0 {
        0.0
    } else {
        c
    }
}
