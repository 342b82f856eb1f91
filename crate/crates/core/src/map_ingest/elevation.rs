//! ESRI ASCII grid reader and writer.
//!
//! Heights are node samples: `xllcenter`/`yllcenter` give the position of the
//! south-west node directly, while `xllcorner`/`yllcorner` give the corner of
//! the south-west cell, so the node sits half a cell further in. Header keys
//! are case-insensitive; `NODATA_value` is optional.

use std::fmt::Write as _;

use super::error::IngestError;
use super::types::{ElevationGrid, LocalPoint};

const NODATA_WRITE: f64 = -9999.0;

pub fn parse_elevation_grid(bytes: &[u8]) -> Result<ElevationGrid, IngestError> {
    let text = String::from_utf8_lossy(bytes);
    let mut ncols = None;
    let mut nrows = None;
    let mut xll: Option<(f64, bool)> = None;
    let mut yll: Option<(f64, bool)> = None;
    let mut cellsize = None;
    let mut nodata: Option<f64> = None;

    let mut values: Vec<(f64, usize)> = Vec::new();
    let mut in_data = false;
    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let mut tokens = line.split_whitespace().peekable();
        let Some(first) = tokens.peek().copied() else { continue };
        if !in_data && first.parse::<f64>().is_err() {
            let key = first.to_ascii_lowercase();
            tokens.next();
            let raw = tokens.next().ok_or_else(|| IngestError::Grid {
                line: lineno,
                message: format!("header key `{first}` has no value"),
            })?;
            let num = |what: &str| -> Result<f64, IngestError> {
                raw.parse::<f64>().map_err(|_| IngestError::Grid {
                    line: lineno,
                    message: format!("{what}: `{raw}` is not a number"),
                })
            };
            let count = |what: &str| -> Result<usize, IngestError> {
                raw.parse::<usize>().map_err(|_| IngestError::Grid {
                    line: lineno,
                    message: format!("{what}: `{raw}` is not a count"),
                })
            };
            match key.as_str() {
                "ncols" => ncols = Some(count("ncols")?),
                "nrows" => nrows = Some(count("nrows")?),
                "xllcorner" => xll = Some((num("xllcorner")?, true)),
                "xllcenter" => xll = Some((num("xllcenter")?, false)),
                "yllcorner" => yll = Some((num("yllcorner")?, true)),
                "yllcenter" => yll = Some((num("yllcenter")?, false)),
                "cellsize" => {
                    let c = num("cellsize")?;
                    if !(c.is_finite() && c > 0.0) {
                        return Err(IngestError::Grid {
                            line: lineno,
                            message: format!("cellsize must be positive, got {raw}"),
                        });
                    }
                    cellsize = Some(c);
                }
                "nodata_value" => nodata = Some(num("NODATA_value")?),
                _ => {
                    return Err(IngestError::Grid {
                        line: lineno,
                        message: format!("unknown header key `{first}`"),
                    })
                }
            }
            continue;
        }
        in_data = true;
        for tok in tokens {
            let v = tok.parse::<f64>().map_err(|_| IngestError::Grid {
                line: lineno,
                message: format!("`{tok}` is not a number"),
            })?;
            values.push((v, lineno));
        }
    }

    let ncols = ncols.ok_or(IngestError::MissingHeader("ncols"))?;
    let nrows = nrows.ok_or(IngestError::MissingHeader("nrows"))?;
    let (x, x_corner) = xll.ok_or(IngestError::MissingHeader("xllcorner"))?;
    let (y, y_corner) = yll.ok_or(IngestError::MissingHeader("yllcorner"))?;
    let cell_size = cellsize.ok_or(IngestError::MissingHeader("cellsize"))?;
    if ncols < 2 || nrows < 2 {
        return Err(IngestError::Grid {
            line: 1,
            message: format!("grid must be at least 2x2, got {nrows}x{ncols}"),
        });
    }
    if values.len() != nrows * ncols {
        return Err(IngestError::Grid {
            line: values.last().map_or(1, |v| v.1),
            message: format!("expected {} values, found {}", nrows * ncols, values.len()),
        });
    }

    let is_nodata = |v: f64| nodata.is_some_and(|nd| v == nd);
    // File rows run north to south; flip so row 0 is the southern edge.
    let mut heights = vec![0.0; nrows * ncols];
    let mut missing = vec![false; nrows * ncols];
    for (i, (v, lineno)) in values.iter().enumerate() {
        let file_row = i / ncols;
        let col = i % ncols;
        let idx = (nrows - 1 - file_row) * ncols + col;
        if is_nodata(*v) {
            missing[idx] = true;
        } else if !v.is_finite() {
            return Err(IngestError::Grid {
                line: *lineno,
                message: "non-finite height".into(),
            });
        } else {
            heights[idx] = *v;
        }
    }
    fill_nodata(&mut heights, &mut missing, nrows, ncols)?;

    let half = 0.5 * cell_size;
    Ok(ElevationGrid {
        origin: LocalPoint::new(
            if x_corner { x + half } else { x },
            if y_corner { y + half } else { y },
        ),
        cell_size,
        rows: nrows,
        cols: ncols,
        heights,
    })
}

/// Replaces missing cells by the mean of their valid 8-neighbors, scanning
/// row-major and updating in place, until nothing is missing.
fn fill_nodata(
    heights: &mut [f64],
    missing: &mut [bool],
    rows: usize,
    cols: usize,
) -> Result<(), IngestError> {
    let mut remaining = missing.iter().filter(|m| **m).count();
    if remaining == rows * cols {
        return Err(IngestError::UnusableGrid);
    }
    while remaining > 0 {
        for r in 0..rows {
            for c in 0..cols {
                let idx = r * cols + c;
                if !missing[idx] {
                    continue;
                }
                let (mut sum, mut n) = (0.0, 0usize);
                for dr in -1i64..=1 {
                    for dc in -1i64..=1 {
                        if dr == 0 && dc == 0 {
                            continue;
                        }
                        let (rr, cc) = (r as i64 + dr, c as i64 + dc);
                        if rr < 0 || cc < 0 || rr >= rows as i64 || cc >= cols as i64 {
                            continue;
                        }
                        let j = rr as usize * cols + cc as usize;
                        if !missing[j] {
                            sum += heights[j];
                            n += 1;
                        }
                    }
                }
                if n > 0 {
                    heights[idx] = sum / n as f64;
                    missing[idx] = false;
                    remaining -= 1;
                }
            }
        }
    }
    Ok(())
}

/// Writes `grid` so that [`parse_elevation_grid`] reproduces it exactly.
pub fn serialize_elevation_grid(grid: &ElevationGrid) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "ncols {}", grid.cols);
    let _ = writeln!(out, "nrows {}", grid.rows);
    let _ = writeln!(out, "xllcenter {:?}", grid.origin.x);
    let _ = writeln!(out, "yllcenter {:?}", grid.origin.y);
    let _ = writeln!(out, "cellsize {:?}", grid.cell_size);
    let _ = writeln!(out, "NODATA_value {:?}", NODATA_WRITE);
    for r in (0..grid.rows).rev() {
        let row: Vec<String> = (0..grid.cols).map(|c| format!("{:?}", grid.height_at(r, c))).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn flat_two_by_two() {
        let g = parse_elevation_grid(
            b"ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 1\nNODATA_value -9999\n0 0\n0 0\n",
        )
        .unwrap();
        assert_eq!((g.rows, g.cols), (2, 2));
        assert!(g.heights.iter().all(|h| *h == 0.0));
        assert_eq!(g.origin, LocalPoint::new(0.5, 0.5));
    }

    #[test]
    fn center_nodata_filled_by_neighbors() {
        let g = parse_elevation_grid(
            b"ncols 3\nnrows 3\nxllcenter 0\nyllcenter 0\ncellsize 5\nNODATA_value -9999\n\
              10 10 10\n10 -9999 10\n10 10 10\n",
        )
        .unwrap();
        assert_eq!(g.height_at(1, 1), 10.0);
    }

    #[test]
    fn first_file_row_is_north() {
        let g = parse_elevation_grid(
            b"ncols 2\nnrows 2\nxllcenter 0\nyllcenter 0\ncellsize 1\n1 2\n3 4\n",
        )
        .unwrap();
        assert_eq!(g.height_at(0, 0), 3.0);
        assert_eq!(g.height_at(1, 1), 2.0);
    }

    #[test]
    fn nodata_fill_propagates_over_passes() {
        let g = parse_elevation_grid(
            b"ncols 4\nnrows 2\nxllcenter 0\nyllcenter 0\ncellsize 1\nNODATA_value -1\n\
              -1 -1 -1 8\n-1 -1 -1 8\n",
        )
        .unwrap();
        assert!(g.heights.iter().all(|h| (*h - 8.0).abs() < 1e-12), "{:?}", g.heights);
    }

    #[test]
    fn zero_cellsize_rejected() {
        let err = parse_elevation_grid(b"ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 0\n0 0\n0 0\n")
            .unwrap_err();
        assert!(matches!(err, IngestError::Grid { line: 5, .. }), "{err}");
    }

    #[test]
    fn missing_header_key() {
        let err = parse_elevation_grid(b"ncols 2\nnrows 2\nxllcorner 0\ncellsize 1\n0 0\n0 0\n").unwrap_err();
        assert!(matches!(err, IngestError::MissingHeader("yllcorner")), "{err}");
    }

    #[test]
    fn all_nodata_is_unusable() {
        let err = parse_elevation_grid(
            b"ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 1\nNODATA_value -9999\n-9999 -9999\n-9999 -9999\n",
        )
        .unwrap_err();
        assert!(matches!(err, IngestError::UnusableGrid));
    }

    #[test]
    fn wrong_value_count() {
        let err = parse_elevation_grid(b"ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 1\n0 0 0\n")
            .unwrap_err();
        assert!(matches!(err, IngestError::Grid { .. }));
    }

    proptest! {
        #[test]
        fn serialize_round_trip(
            rows in 2usize..6,
            cols in 2usize..6,
            ox in -1e5f64..1e5,
            oy in -1e5f64..1e5,
            cell in 0.01f64..100.0,
            seed in proptest::collection::vec(-500.0f64..3000.0, 36),
        ) {
            let heights: Vec<f64> = (0..rows * cols).map(|i| seed[i]).collect();
            let g = ElevationGrid { origin: LocalPoint::new(ox, oy), cell_size: cell, rows, cols, heights };
            let back = parse_elevation_grid(serialize_elevation_grid(&g).as_bytes()).unwrap();
            prop_assert_eq!(back, g);
        }
    }
}
