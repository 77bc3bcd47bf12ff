//! Slice collages with lesion contours and index numerals.

use std::collections::HashMap;
use std::ops::Range;
use std::path::Path;

use image::{Rgb, RgbImage};

use super::contour::trace_contours;
use crate::error::{Error, Result};
use crate::labeling::{LesionLabelMap, LesionRecord};
use crate::volume::Volume;

pub const CONTOUR_COLOR: Rgb<u8> = Rgb([255, 0, 0]);
pub const NUMERAL_COLOR: Rgb<u8> = Rgb([255, 255, 0]);

const GLYPH_W: usize = 3;
const GLYPH_H: usize = 5;

// 3x5 digits, one row per entry, high bit is the left column.
const DIGITS: [[u8; GLYPH_H]; 10] = [
    [0b111, 0b101, 0b101, 0b101, 0b111],
    [0b010, 0b110, 0b010, 0b010, 0b111],
    [0b111, 0b001, 0b111, 0b100, 0b111],
    [0b111, 0b001, 0b111, 0b001, 0b111],
    [0b101, 0b101, 0b111, 0b001, 0b001],
    [0b111, 0b100, 0b111, 0b001, 0b111],
    [0b111, 0b100, 0b111, 0b101, 0b111],
    [0b111, 0b001, 0b010, 0b010, 0b010],
    [0b111, 0b101, 0b111, 0b101, 0b111],
    [0b111, 0b101, 0b111, 0b001, 0b111],
];

fn text_width(n: usize) -> usize {
    let digits = n.to_string().len();
    digits * GLYPH_W + digits.saturating_sub(1)
}

fn draw_number(img: &mut RgbImage, n: usize, x0: usize, y0: usize, clip: (usize, usize, usize, usize)) {
    let (cx0, cy0, cx1, cy1) = clip;
    for (k, ch) in n.to_string().bytes().enumerate() {
        let glyph = DIGITS[(ch - b'0') as usize];
        let gx = x0 + k * (GLYPH_W + 1);
        for (row, bits) in glyph.iter().enumerate() {
            for col in 0..GLYPH_W {
                if bits & (1 << (GLYPH_W - 1 - col)) == 0 {
                    continue;
                }
                let (x, y) = (gx + col, y0 + row);
                if (cx0..cx1).contains(&x) && (cy0..cy1).contains(&y) {
                    img.put_pixel(x as u32, y as u32, NUMERAL_COLOR);
                }
            }
        }
    }
}

/// Where a lesion numeral was drawn on a tile.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NumeralPlacement {
    pub lesion_index: usize,
    /// Top-left of the numeral in tile coordinates.
    pub at: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TileInfo {
    /// `None` for blank padding tiles.
    pub slice: Option<usize>,
    pub row: usize,
    pub column: usize,
    pub contour_pixels: usize,
    pub numerals: Vec<NumeralPlacement>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollagePage {
    pub image: RgbImage,
    pub tiles: Vec<TileInfo>,
    pub tile_size: (usize, usize),
}

impl CollagePage {
    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        self.image
            .save_with_format(path, image::ImageFormat::Png)
            .map_err(|e| Error::Render(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CollageLayout {
    pub columns: usize,
    /// Rows per page; `None` puts everything on one page.
    pub rows_per_page: Option<usize>,
}

/// Renders axial slices `slices` of `volume` as a grid of tiles, outlining
/// every lesion listed in `lesions` (looked up by label) with a 1-pixel red
/// contour and writing its index next to the region.
///
/// Intensities are windowed linearly from the volume minimum to maximum. The
/// last row is padded with blank tiles.
pub fn render_collage(
    volume: &Volume,
    labels: &LesionLabelMap,
    lesions: &[LesionRecord],
    slices: Range<usize>,
    layout: &CollageLayout,
) -> Result<Vec<CollagePage>> {
    if volume.dims() != labels.dims() {
        return Err(Error::GridMismatch(format!(
            "volume {:?} vs label map {:?}",
            volume.dims(),
            labels.dims()
        )));
    }
    let [nx, ny, nz] = volume.dims();
    if slices.is_empty() || slices.end > nz {
        return Err(Error::EmptyRange(format!("{slices:?} of {nz} slices")));
    }
    if layout.columns == 0 || layout.rows_per_page == Some(0) {
        return Err(Error::InvalidConfig("columns and rows per page must be positive".into()));
    }

    let index_of: HashMap<u32, usize> = lesions.iter().map(|r| (r.label, r.index)).collect();
    let (lo, hi) = volume.min_max();
    let span = if hi > lo { f64::from(hi - lo) } else { 1.0 };
    let gray = |v: f32| -> u8 { ((f64::from(v - lo) / span) * 255.0).round().clamp(0.0, 255.0) as u8 };

    let columns = layout.columns;
    let total_rows = slices.len().div_ceil(columns);
    let rows_per_page = layout.rows_per_page.unwrap_or(total_rows).min(total_rows);
    let per_page = rows_per_page * columns;
    let slice_list: Vec<usize> = slices.collect();

    let mut pages = Vec::new();
    for chunk in slice_list.chunks(per_page) {
        let rows = chunk.len().div_ceil(columns);
        let mut img = RgbImage::new((columns * nx) as u32, (rows * ny) as u32);
        let mut tiles = Vec::with_capacity(rows * columns);
        for t in 0..rows * columns {
            let (row, column) = (t / columns, t % columns);
            let (ox, oy) = (column * nx, row * ny);
            let Some(&z) = chunk.get(t) else {
                tiles.push(TileInfo {
                    slice: None,
                    row,
                    column,
                    contour_pixels: 0,
                    numerals: Vec::new(),
                });
                continue;
            };

            for y in 0..ny {
                for x in 0..nx {
                    let g = gray(volume.get(x, y, z));
                    img.put_pixel((ox + x) as u32, (oy + y) as u32, Rgb([g, g, g]));
                }
            }

            let set = trace_contours(labels.slice_z(z), nx, ny);
            let mut drawn = vec![false; nx * ny];
            let mut numerals = Vec::new();
            for c in set.contours.iter().filter(|c| index_of.contains_key(&c.label)) {
                for &(x, y) in &c.points {
                    drawn[y * nx + x] = true;
                }
            }
            for (i, _) in drawn.iter().enumerate().filter(|(_, d)| **d) {
                img.put_pixel((ox + i % nx) as u32, (oy + i / nx) as u32, CONTOUR_COLOR);
            }
            for c in set.contours.iter().filter(|c| c.outer) {
                let Some(&index) = index_of.get(&c.label) else {
                    continue;
                };
                let (bx0, by0, _, _) = c.bounds();
                let w = text_width(index);
                let tx = bx0.saturating_sub(w + 1).min(nx.saturating_sub(w));
                let ty = by0.saturating_sub(GLYPH_H + 1).min(ny.saturating_sub(GLYPH_H));
                draw_number(&mut img, index, ox + tx, oy + ty, (ox, oy, ox + nx, oy + ny));
                numerals.push(NumeralPlacement {
                    lesion_index: index,
                    at: (tx, ty),
                });
            }
            tiles.push(TileInfo {
                slice: Some(z),
                row,
                column,
                contour_pixels: drawn.iter().filter(|d| **d).count(),
                numerals,
            });
        }
        pages.push(CollagePage {
            image: img,
            tiles,
            tile_size: (nx, ny),
        });
    }
    Ok(pages)
}
