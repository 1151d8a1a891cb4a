use std::path::Path;

use chrono::{Days, NaiveDate};
use msr_cnn::chart::{
    layout_columns, read_image, render_ohlct, write_image, ChartGeometry, ChartImage, ChartUnit, ImageFormat,
    ImageMeta,
};
use proptest::prelude::*;

mod common;
use common::{date, golden_meta, golden_units, small_geometry};

// Thu 4 Jan 2024 .. Wed 10 Jan 2024 with the weekend between Fri and Mon.
// Price v lands on row 10 - v because the scale spans exactly 1..10 over
// ten rows; turnover bars are round(3 * t / 0.04) + 1 rows tall.
const GOLDEN: [&str; 15] = [
    "................#.......",
    "................####....",
    "..........##...##..#....",
    ".......#..#.....#..#....",
    ".......#..#.....#..#..#.",
    ".......####........#..#.",
    "......##...........####.",
    ".......#..............#.",
    "......................##",
    "......................#.",
    "........................",
    "..........#.............",
    "..........#.....#.......",
    "..........#.....#..#....",
    ".......#..#.....#..#..#.",
];

fn ascii(image: &ChartImage) -> Vec<String> {
    (0..image.height)
        .map(|r| image.row(r).iter().map(|&p| if p == 1 { '#' } else { '.' }).collect())
        .collect()
}

#[test]
fn golden_five_day_chart() {
    let image = render_ohlct(&golden_units(), &small_geometry(), golden_meta()).unwrap();
    assert_eq!((image.height, image.width), (15, 24));
    assert_eq!(ascii(&image), GOLDEN.map(String::from).to_vec());

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("golden.pgm");
    write_image(&image, &out, ImageFormat::Pgm).unwrap();
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/golden_5day_weekend.pgm");
    assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(&golden).unwrap());
    assert_eq!(read_image(&golden, ImageFormat::Pgm).unwrap(), image);
}

#[test]
fn separator_and_padding_columns_are_blank() {
    let image = render_ohlct(&golden_units(), &small_geometry(), golden_meta()).unwrap();
    for col in (0..6).chain(12..15) {
        assert!(image.column(col).all(|p| p == 0), "column {col}");
    }
}

fn weekday_run(start: NaiveDate, count: usize, skips: &[usize]) -> Vec<NaiveDate> {
    let mut dates = Vec::new();
    let mut d = start;
    let mut k = 0;
    while dates.len() < count {
        use chrono::Datelike;
        let weekend = matches!(d.weekday(), chrono::Weekday::Sat | chrono::Weekday::Sun);
        if !weekend {
            if !skips.contains(&k) {
                dates.push(d);
            }
            k += 1;
        }
        d = d + Days::new(1);
    }
    dates
}

fn arb_window() -> impl Strategy<Value = Vec<ChartUnit>> {
    (1usize..=12, 0u32..365, prop::collection::vec(0usize..30, 0..3)).prop_flat_map(|(len, offset, skips)| {
        let dates = weekday_run(date(2023, 1, 2) + Days::new(offset as u64), len, &skips);
        prop::collection::vec((1.0f64..100.0, 0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0, 0.0f64..0.2), len).prop_map(
            move |raw| {
                raw.iter()
                    .zip(&dates)
                    .map(|(&(mid, a, b, m, t), &d)| {
                        let low = mid * (1.0 - 0.1 * a);
                        let high = mid * (1.0 + 0.1 * b);
                        ChartUnit {
                            open: low + (high - low) * a,
                            high,
                            low,
                            close: low + (high - low) * b,
                            turnover: t,
                            ma5: low + (high - low) * m,
                            date: Some(d),
                        }
                    })
                    .collect()
            },
        )
    })
}

proptest! {
    #[test]
    fn rendered_charts_are_well_formed(units in arb_window()) {
        let geometry = ChartGeometry { price_rows: 24, divider_rows: 1, turnover_rows: 7 };
        let image = render_ohlct(&units, &geometry, ImageMeta::default()).unwrap();
        prop_assert_eq!(image.height, 32);
        prop_assert_eq!(image.width, ChartGeometry::dated_width(units.len()));
        prop_assert!(image.pixels.iter().all(|&p| p <= 1));

        let dates: Vec<NaiveDate> = units.iter().map(|u| u.date.unwrap()).collect();
        let plan = layout_columns(&dates, image.width).unwrap();
        let blank: Vec<usize> = (0..plan.left_pad)
            .chain(plan.separator_starts.iter().flat_map(|&s| s..s + 3))
            .collect();
        for col in blank {
            prop_assert!(image.column(col).all(|p| p == 0));
        }
        // the divider row stays background
        prop_assert!(image.row(24).iter().all(|&p| p == 0));

        // one open and one close pixel per unit; the turnover bar is never empty
        for &start in &plan.unit_starts {
            let open: Vec<usize> = (0..24).filter(|&r| image.get(r, start) == 1).collect();
            let close: Vec<usize> = (0..24).filter(|&r| image.get(r, start + 2) == 1).collect();
            prop_assert_eq!(open.len(), 1);
            prop_assert_eq!(close.len(), 1);
            prop_assert!((25..32).any(|r| image.get(r, start + 1) == 1));
            prop_assert_eq!(image.get(31, start + 1), 1);
        }
    }

    #[test]
    fn higher_prices_never_sit_lower(units in arb_window()) {
        let geometry = ChartGeometry { price_rows: 24, divider_rows: 1, turnover_rows: 7 };
        let image = render_ohlct(&units, &geometry, ImageMeta::default()).unwrap();
        let dates: Vec<NaiveDate> = units.iter().map(|u| u.date.unwrap()).collect();
        let plan = layout_columns(&dates, image.width).unwrap();
        let row_of = |col: usize| (0..24).find(|&r| image.get(r, col) == 1).unwrap();
        let mut marks: Vec<(f64, usize)> = Vec::new();
        for (u, &start) in units.iter().zip(&plan.unit_starts) {
            marks.push((u.open, row_of(start)));
            marks.push((u.close, row_of(start + 2)));
        }
        for a in &marks {
            for b in &marks {
                if a.0 > b.0 {
                    prop_assert!(a.1 <= b.1, "price {} at row {} below price {} at row {}", a.0, a.1, b.0, b.1);
                }
            }
        }
    }

    #[test]
    fn image_files_round_trip(units in arb_window(), raw in any::<bool>()) {
        let meta = ImageMeta { n: units.len(), resolution: 1, symbol: "X".into(), end_date: units.last().unwrap().date };
        let image = render_ohlct(&units, &ChartGeometry::default(), meta).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let format = if raw { ImageFormat::Raw } else { ImageFormat::Pgm };
        let path = dir.path().join("chart.img");
        write_image(&image, &path, format).unwrap();
        prop_assert_eq!(read_image(&path, format).unwrap(), image);
    }
}
