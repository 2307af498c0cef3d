use crate::{Error, Result};

/// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn contains(&self, p: [f64; 2], tol: f64) -> bool {
        p[0] >= self.x0 - tol && p[0] <= self.x1 + tol && p[1] >= self.y0 - tol && p[1] <= self.y1 + tol
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }
}

/// Tiling of a `cells_x × cells_y` grid of square cells into `jx × jy`
/// subdomains of `cells_per_subdomain²` cells each.
///
/// Subdomain `(ix, iy)` has index `iy * jx + ix`.
#[derive(Clone, Debug, PartialEq)]
pub struct DomainDecomposition {
    pub cells_x: usize,
    pub cells_y: usize,
    pub cells_per_subdomain: usize,
    pub jx: usize,
    pub jy: usize,
    pub origin: [f64; 2],
    pub cell_size: f64,
    pub subdomain_rects: Vec<Rect>,
}

/// Decomposes a `cells_x × cells_y` grid of unit cells centred at the origin.
pub fn build_decomposition(
    cells_x: usize,
    cells_y: usize,
    cells_per_subdomain: usize,
) -> Result<DomainDecomposition> {
    DomainDecomposition::new(
        cells_x,
        cells_y,
        cells_per_subdomain,
        [-(cells_x as f64) / 2.0, -(cells_y as f64) / 2.0],
        1.0,
    )
}

impl DomainDecomposition {
    pub fn new(
        cells_x: usize,
        cells_y: usize,
        cells_per_subdomain: usize,
        origin: [f64; 2],
        cell_size: f64,
    ) -> Result<Self> {
        if cells_x == 0 || cells_y == 0 || cells_per_subdomain == 0 {
            return Err(Error::Config("cell and subdomain counts must be positive".into()));
        }
        if cells_x % cells_per_subdomain != 0 || cells_y % cells_per_subdomain != 0 {
            return Err(Error::Config(format!(
                "{cells_x}×{cells_y} cells cannot be split into subdomains of {c}×{c} cells",
                c = cells_per_subdomain
            )));
        }
        if !(cell_size > 0.0) || !origin.iter().all(|v| v.is_finite()) {
            return Err(Error::Config("cell size must be positive and origin finite".into()));
        }
        let jx = cells_x / cells_per_subdomain;
        let jy = cells_y / cells_per_subdomain;
        let side = cells_per_subdomain as f64 * cell_size;
        let mut subdomain_rects = Vec::with_capacity(jx * jy);
        for iy in 0..jy {
            for ix in 0..jx {
                subdomain_rects.push(Rect {
                    x0: origin[0] + ix as f64 * side,
                    y0: origin[1] + iy as f64 * side,
                    x1: origin[0] + (ix + 1) as f64 * side,
                    y1: origin[1] + (iy + 1) as f64 * side,
                });
            }
        }
        Ok(Self {
            cells_x,
            cells_y,
            cells_per_subdomain,
            jx,
            jy,
            origin,
            cell_size,
            subdomain_rects,
        })
    }

    /// Same decomposition with a different origin and cell size.
    pub fn with_geometry(&self, origin: [f64; 2], cell_size: f64) -> Result<Self> {
        Self::new(self.cells_x, self.cells_y, self.cells_per_subdomain, origin, cell_size)
    }

    pub fn num_subdomains(&self) -> usize {
        self.jx * self.jy
    }

    pub fn num_edges(&self) -> usize {
        self.jx * (self.jy + 1) + self.jy * (self.jx + 1)
    }

    pub fn num_vertices(&self) -> usize {
        (self.jx + 1) * (self.jy + 1)
    }

    pub fn subdomain_side(&self) -> f64 {
        self.cells_per_subdomain as f64 * self.cell_size
    }

    pub fn bounding_box(&self) -> Rect {
        Rect {
            x0: self.origin[0],
            y0: self.origin[1],
            x1: self.origin[0] + self.cells_x as f64 * self.cell_size,
            y1: self.origin[1] + self.cells_y as f64 * self.cell_size,
        }
    }

    pub fn subdomain_index(&self, ix: usize, iy: usize) -> usize {
        iy * self.jx + ix
    }

    /// Grid position `(ix, iy)` of subdomain `j`.
    pub fn subdomain_position(&self, j: usize) -> (usize, usize) {
        (j % self.jx, j / self.jx)
    }

    /// Subdomain owning the unit cell `(cx, cy)`.
    pub fn subdomain_of_cell(&self, cx: usize, cy: usize) -> usize {
        self.subdomain_index(cx / self.cells_per_subdomain, cy / self.cells_per_subdomain)
    }
}
