//! Loading and slicing of gridded daily data.
//!
//! File formats (UTF-8 CSV with a header row):
//!
//! - grid catalog: `grid_id,lat,lon,zone`
//! - daily values: `date,grid_id,value` with `date` as `YYYY-MM-DD`; a missing
//!   cell is simply an absent row
//! - ENSO labels: `year,phase` with phase one of `ElNino`, `LaNina`, `Neutral`

mod calendar;
mod enso;
mod grid;
mod panel;

pub use calendar::{parse_date, CalendarIndex, DayTag, DecemberRule, Season};
pub use enso::{load_enso, EnsoPhase, EnsoTable};
pub use grid::{load_grid_metadata, GridCell, GridSet, ZONE_NAMES};
pub(crate) use grid::check_header;
pub use panel::{
    group_average_matrix, load_daily_values, select_complete, spatial_average, CompleteSelection,
    GroupBy, GroupKey, GroupMean, Panel, RawPanel, Selector,
};
