//! Report artifacts: slice collages, volume charts, tables and bins.

mod chart;
mod collage;
mod contour;
mod tables;

pub use chart::{chart_data, render_line_chart, ChartData, ChartPair, ChartPoint, DEFAULT_CHART_FLOOR};
pub use collage::{
    render_collage, CollageLayout, CollagePage, NumeralPlacement, TileInfo, CONTOUR_COLOR, NUMERAL_COLOR,
};
pub use contour::{trace_contours, Contour, ContourSet};
pub use tables::{
    lesion_bin_stats, volume_bin_stats, volume_table, volume_table_csv, TableVolume, VolumeBin, VolumeBins,
    VolumeRow, DEFAULT_BIN_THRESHOLDS,
};
