//! Binary portable pixmap (P6) rendering of land-cover maps.

use std::io::Write;
use std::path::Path;

use thiserror::Error;

use crate::grid::LandCoverGrid;

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("scale must be at least 1")]
    Scale,
}

/// Colour of NODATA pixels.
pub const NODATA_COLOR: [u8; 3] = [0, 0, 0];

/// Fixed class palette; classes beyond it cycle.
pub const PALETTE: [[u8; 3]; 12] = [
    [34, 102, 51],
    [140, 190, 80],
    [214, 180, 96],
    [120, 90, 50],
    [230, 230, 120],
    [90, 150, 200],
    [200, 90, 80],
    [170, 170, 170],
    [60, 60, 140],
    [240, 150, 40],
    [150, 80, 160],
    [250, 250, 250],
];

pub fn class_color(class_index: usize) -> [u8; 3] {
    PALETTE[class_index % PALETTE.len()]
}

/// Encode `grid` as P6 with each cell drawn as a `scale x scale` block.
pub fn to_ppm(grid: &LandCoverGrid, scale: usize) -> Result<Vec<u8>, RenderError> {
    if scale == 0 {
        return Err(RenderError::Scale);
    }
    let (rows, cols) = grid.dims();
    let mut out = format!("P6\n{} {}\n255\n", cols * scale, rows * scale).into_bytes();
    out.reserve(rows * cols * scale * scale * 3);
    for i in 0..rows {
        let line: Vec<u8> = (0..cols)
            .flat_map(|j| {
                let c = grid.get(i, j).map_or(NODATA_COLOR, |c| class_color(c.index()));
                std::iter::repeat_n(c, scale).flatten()
            })
            .collect();
        for _ in 0..scale {
            out.extend_from_slice(&line);
        }
    }
    Ok(out)
}

pub fn write_ppm(grid: &LandCoverGrid, scale: usize, path: &Path) -> Result<(), RenderError> {
    let bytes = to_ppm(grid, scale)?;
    let io = |source| RenderError::Io { path: path.display().to_string(), source };
    let mut f = std::fs::File::create(path).map_err(io)?;
    f.write_all(&bytes).map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_pixels() {
        let g = LandCoverGrid::from_raw(1, 2, &[1, 0]).unwrap();
        let ppm = to_ppm(&g, 2).unwrap();
        let header = b"P6\n4 2\n255\n";
        assert_eq!(&ppm[..header.len()], header);
        let body = &ppm[header.len()..];
        assert_eq!(body.len(), 4 * 2 * 3);
        assert_eq!(&body[..3], &PALETTE[0]);
        assert_eq!(&body[6..9], &NODATA_COLOR);
        assert_eq!(&body[12..15], &PALETTE[0]);
    }

    #[test]
    fn zero_scale_rejected() {
        let g = LandCoverGrid::from_raw(1, 1, &[1]).unwrap();
        assert!(to_ppm(&g, 0).is_err());
    }
}
