//! TS-OHLCT chart encoding.
//!
//! Each unit (a trading day, or a merged block of days) occupies three pixel
//! columns: the open tick on the left, the high-low run and the ma5 dot in the
//! centre, the close tick on the right. Below a blank divider, a
//! bottom-anchored turnover bar sits in the centre column. Dated windows get
//! a three-column background separator wherever consecutive trading days are
//! more than one calendar day apart (weekends, holidays).
//!
//! Foreground is 1, background is 0.

mod io;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::DailyBar;

pub use io::{read_image, write_image, ImageFormat};

pub const UNIT_COLS: usize = 3;
pub const SEPARATOR_COLS: usize = 3;

/// One column group of the chart: a day, or several merged days.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChartUnit {
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
    pub turnover: f64,
    pub ma5: f64,
    /// Calendar date; `None` for merged units.
    pub date: Option<NaiveDate>,
}

impl ChartUnit {
    /// A dated unit from a bar. The bar must carry `ma5`.
    pub fn from_bar(bar: &DailyBar) -> Result<Self> {
        let ma5 = bar
            .ma5
            .ok_or_else(|| Error::Feature(format!("bar on {} has no ma5", bar.date)))?;
        Ok(Self {
            open: bar.open,
            high: bar.high,
            low: bar.low,
            close: bar.close,
            turnover: bar.turnover_rate,
            ma5,
            date: Some(bar.date),
        })
    }

    pub fn from_bars(bars: &[DailyBar]) -> Result<Vec<Self>> {
        bars.iter().map(Self::from_bar).collect()
    }

    fn check_finite(&self) -> Result<()> {
        for (field, v) in [
            ("open", self.open),
            ("high", self.high),
            ("low", self.low),
            ("close", self.close),
            ("turnover", self.turnover),
            ("ma5", self.ma5),
        ] {
            if !v.is_finite() {
                return Err(Error::Encoding { field });
            }
        }
        if self.turnover < 0.0 {
            return Err(Error::Domain(format!("negative turnover {}", self.turnover)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChartGeometry {
    pub price_rows: usize,
    pub divider_rows: usize,
    pub turnover_rows: usize,
}

impl Default for ChartGeometry {
    fn default() -> Self {
        Self {
            price_rows: 48,
            divider_rows: 1,
            turnover_rows: 15,
        }
    }
}

impl ChartGeometry {
    pub fn height(&self) -> usize {
        self.price_rows + self.divider_rows + self.turnover_rows
    }

    /// Width of a dated chart of `units` days: one separator slot per week
    /// plus two units of holiday slack.
    pub fn dated_width(units: usize) -> usize {
        UNIT_COLS * (units + units.div_ceil(5) + 2)
    }

    /// Width of an undated (merged) chart: units packed with no separators.
    pub fn merged_width(units: usize) -> usize {
        UNIT_COLS * units
    }

    pub fn validate(&self) -> Result<()> {
        if self.price_rows < 2 || self.turnover_rows < 1 {
            return Err(Error::Config(format!(
                "chart geometry needs at least 2 price rows and 1 turnover row, got {self:?}"
            )));
        }
        Ok(())
    }
}

/// Horizontal placement of units and separators, right-aligned.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnPlan {
    pub width: usize,
    /// First column of each unit, in input order.
    pub unit_starts: Vec<usize>,
    /// First column of each separator.
    pub separator_starts: Vec<usize>,
    pub left_pad: usize,
}

/// Places one unit per date, with a separator between dates more than one
/// calendar day apart, right-aligned within `fixed_width`.
pub fn layout_columns(dates: &[NaiveDate], fixed_width: usize) -> Result<ColumnPlan> {
    if dates.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain("chart dates must be strictly ascending".into()));
    }
    let gaps: Vec<bool> = dates
        .windows(2)
        .map(|w| (w[1] - w[0]).num_days() > 1)
        .collect();
    let separators = gaps.iter().filter(|&&g| g).count();
    let needed = UNIT_COLS * dates.len() + SEPARATOR_COLS * separators;
    if needed > fixed_width {
        return Err(Error::Capacity {
            needed,
            available: fixed_width,
        });
    }
    let left_pad = fixed_width - needed;
    let mut col = left_pad;
    let mut unit_starts = Vec::with_capacity(dates.len());
    let mut separator_starts = Vec::with_capacity(separators);
    for i in 0..dates.len() {
        if i > 0 && gaps[i - 1] {
            separator_starts.push(col);
            col += SEPARATOR_COLS;
        }
        unit_starts.push(col);
        col += UNIT_COLS;
    }
    Ok(ColumnPlan {
        width: fixed_width,
        unit_starts,
        separator_starts,
        left_pad,
    })
}

fn packed_layout(units: usize, fixed_width: usize) -> Result<ColumnPlan> {
    let needed = UNIT_COLS * units;
    if needed > fixed_width {
        return Err(Error::Capacity {
            needed,
            available: fixed_width,
        });
    }
    let left_pad = fixed_width - needed;
    Ok(ColumnPlan {
        width: fixed_width,
        unit_starts: (0..units).map(|k| left_pad + UNIT_COLS * k).collect(),
        separator_starts: Vec::new(),
        left_pad,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ImageMeta {
    /// Units in the rendered window (days for dated charts).
    pub n: usize,
    /// Days per unit.
    pub resolution: usize,
    pub symbol: String,
    pub end_date: Option<NaiveDate>,
}

/// Row-major binary pixel matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChartImage {
    pub height: usize,
    pub width: usize,
    pub pixels: Vec<u8>,
    pub meta: ImageMeta,
}

impl ChartImage {
    pub fn blank(height: usize, width: usize, meta: ImageMeta) -> Self {
        Self {
            height,
            width,
            pixels: vec![0; height * width],
            meta,
        }
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.pixels[row * self.width + col]
    }

    fn set(&mut self, row: usize, col: usize) {
        self.pixels[row * self.width + col] = 1;
    }

    pub fn column(&self, col: usize) -> impl Iterator<Item = u8> + '_ {
        (0..self.height).map(move |r| self.get(r, col))
    }

    pub fn row(&self, row: usize) -> &[u8] {
        &self.pixels[row * self.width..(row + 1) * self.width]
    }
}

struct PriceScale {
    max: f64,
    min: f64,
    rows: usize,
}

impl PriceScale {
    fn row(&self, v: f64) -> usize {
        let last = (self.rows - 1) as f64;
        if self.max == self.min {
            return (self.rows - 1) / 2;
        }
        let r = (last * (self.max - v) / (self.max - self.min)).round();
        r.clamp(0.0, last) as usize
    }
}

/// Renders a window into a TS-OHLCT image.
///
/// Fully dated windows are laid out with calendar separators at
/// [`ChartGeometry::dated_width`]; fully undated (merged) windows are packed
/// at [`ChartGeometry::merged_width`].
pub fn render_ohlct(units: &[ChartUnit], geometry: &ChartGeometry, meta: ImageMeta) -> Result<ChartImage> {
    let width = if units.iter().all(|u| u.date.is_some()) {
        ChartGeometry::dated_width(units.len())
    } else {
        ChartGeometry::merged_width(units.len())
    };
    render_with_width(units, geometry, width, meta)
}

/// [`render_ohlct`] with an explicit canvas width.
pub fn render_with_width(
    units: &[ChartUnit],
    geometry: &ChartGeometry,
    width: usize,
    meta: ImageMeta,
) -> Result<ChartImage> {
    geometry.validate()?;
    if units.is_empty() {
        return Err(Error::Domain("cannot render an empty window".into()));
    }
    for u in units {
        u.check_finite()?;
    }
    let plan = match units.iter().filter(|u| u.date.is_some()).count() {
        0 => packed_layout(units.len(), width)?,
        k if k == units.len() => {
            let dates: Vec<NaiveDate> = units.iter().filter_map(|u| u.date).collect();
            layout_columns(&dates, width)?
        }
        _ => return Err(Error::Domain("window mixes dated and merged units".into())),
    };

    let scale = PriceScale {
        max: units.iter().flat_map(|u| [u.high, u.ma5]).fold(f64::NEG_INFINITY, f64::max),
        min: units.iter().flat_map(|u| [u.low, u.ma5]).fold(f64::INFINITY, f64::min),
        rows: geometry.price_rows,
    };
    let turnover_max = units.iter().map(|u| u.turnover).fold(0.0, f64::max);
    let height = geometry.height();
    let mut image = ChartImage::blank(height, plan.width, meta);

    for (u, &start) in units.iter().zip(&plan.unit_starts) {
        let centre = start + 1;
        image.set(scale.row(u.open), start);
        image.set(scale.row(u.close), start + 2);
        for r in scale.row(u.high)..=scale.row(u.low) {
            image.set(r, centre);
        }
        image.set(scale.row(u.ma5), centre);

        let bar = if turnover_max > 0.0 {
            ((geometry.turnover_rows - 1) as f64 * u.turnover / turnover_max).round() as usize + 1
        } else {
            1
        };
        for r in height - bar..height {
            image.set(r, centre);
        }
    }
    Ok(image)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn date(y: i32, m: u32, d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, d).unwrap()
    }

    fn flat(date: Option<NaiveDate>, v: f64, turnover: f64) -> ChartUnit {
        ChartUnit {
            open: v,
            high: v,
            low: v,
            close: v,
            turnover,
            ma5: v,
            date,
        }
    }

    #[test]
    fn consecutive_weekdays_have_no_separators() {
        // Mon 2024-03-04 .. Fri 2024-03-08
        let dates: Vec<_> = (4..=8).map(|d| date(2024, 3, d)).collect();
        let plan = layout_columns(&dates, ChartGeometry::dated_width(5)).unwrap();
        assert!(plan.separator_starts.is_empty());
        assert_eq!(plan.width, 24);
        assert_eq!(plan.unit_starts, vec![9, 12, 15, 18, 21]);
    }

    #[test]
    fn weekend_inserts_separator() {
        // Thu, Fri, Mon, Tue, Wed
        let dates = [date(2024, 3, 7), date(2024, 3, 8), date(2024, 3, 11), date(2024, 3, 12), date(2024, 3, 13)];
        let plan = layout_columns(&dates, 24).unwrap();
        assert_eq!(plan.separator_starts, vec![12]);
        assert_eq!(plan.unit_starts, vec![6, 9, 15, 18, 21]);
    }

    #[test]
    fn holiday_adds_second_separator() {
        // Fri, Mon, (Tue holiday, Wed missing), Thu
        let dates = [date(2024, 3, 8), date(2024, 3, 11), date(2024, 3, 14)];
        let plan = layout_columns(&dates, 15).unwrap();
        assert_eq!(plan.separator_starts, vec![3, 9]);
        assert_eq!(plan.left_pad, 0);
    }

    #[test]
    fn overfull_plan_is_a_capacity_error() {
        let dates: Vec<_> = (4..=8).map(|d| date(2024, 3, d)).collect();
        assert!(matches!(layout_columns(&dates, 12), Err(Error::Capacity { needed: 15, available: 12 })));
    }

    #[test]
    fn degenerate_scale_uses_middle_row() {
        let units: Vec<_> = (4..=8).map(|d| flat(Some(date(2024, 3, d)), 7.0, 1.0)).collect();
        let g = ChartGeometry::default();
        let img = render_ohlct(&units, &g, ImageMeta::default()).unwrap();
        let mid = (g.price_rows - 1) / 2;
        for r in 0..g.price_rows {
            let on = img.row(r).iter().filter(|&&p| p == 1).count();
            if r == mid {
                assert_eq!(on, 15);
            } else {
                assert_eq!(on, 0, "row {r}");
            }
        }
        // divider blank
        assert!(img.row(g.price_rows).iter().all(|&p| p == 0));
    }

    #[test]
    fn max_turnover_fills_the_turnover_region() {
        let units: Vec<_> = [1.0, 3.0, 0.0, 2.0, 4.0]
            .iter()
            .enumerate()
            .map(|(k, &t)| flat(None, 10.0 + k as f64, t))
            .collect();
        let g = ChartGeometry::default();
        let img = render_ohlct(&units, &g, ImageMeta::default()).unwrap();
        assert_eq!(img.width, 15);
        let top = g.price_rows + g.divider_rows;
        let bar_height = |col: usize| (top..g.height()).filter(|&r| img.get(r, col) == 1).count();
        assert_eq!(bar_height(13), g.turnover_rows);
        assert_eq!(bar_height(7), 1);
        assert_eq!(bar_height(1), 5); // round(14 * 1/4) + 1
    }

    #[test]
    fn zero_turnover_draws_single_pixels() {
        let units: Vec<_> = (0..5).map(|k| flat(None, 10.0 + k as f64, 0.0)).collect();
        let g = ChartGeometry::default();
        let img = render_ohlct(&units, &g, ImageMeta::default()).unwrap();
        for k in 0..5 {
            let col = 3 * k + 1;
            let on: Vec<usize> = (g.price_rows..g.height()).filter(|&r| img.get(r, col) == 1).collect();
            assert_eq!(on, vec![g.height() - 1]);
        }
    }

    #[test]
    fn non_finite_values_are_rejected() {
        let mut u = flat(None, 1.0, 1.0);
        u.ma5 = f64::NAN;
        assert!(matches!(
            render_ohlct(&[u], &ChartGeometry::default(), ImageMeta::default()),
            Err(Error::Encoding { field: "ma5" })
        ));
        assert!(render_ohlct(&[], &ChartGeometry::default(), ImageMeta::default()).is_err());
    }

    #[test]
    fn sixty_day_dated_width() {
        assert_eq!(ChartGeometry::dated_width(60), 222);
        assert_eq!(ChartGeometry::dated_width(20), 78);
    }
}
