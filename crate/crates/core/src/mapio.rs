//! Plain-text map files.
//!
//! ```text
//! # optional comments
//! N 4 PHI_MIN 0 PHI_MAX 100 PHI_OBS 50 PHI_U 50
//! 0 0 10 100
//! ...            (N rows, y = 1 first, N values each)
//! ```

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{OccupancyGrid, OccupancyParams};

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn parse_header(line_no: usize, line: &str) -> Result<(usize, OccupancyParams)> {
    let tokens: Vec<&str> = line.split_whitespace().collect();
    const KEYS: [&str; 5] = ["N", "PHI_MIN", "PHI_MAX", "PHI_OBS", "PHI_U"];
    if tokens.len() != 2 * KEYS.len() {
        return Err(parse_err(line_no, format!("header needs {} tokens, found {}", 2 * KEYS.len(), tokens.len())));
    }
    let mut nums = [0i64; 5];
    for (k, key) in KEYS.iter().enumerate() {
        if tokens[2 * k] != *key {
            return Err(parse_err(line_no, format!("expected key {key}, found {:?}", tokens[2 * k])));
        }
        nums[k] = tokens[2 * k + 1]
            .parse()
            .map_err(|_| parse_err(line_no, format!("{key} value {:?} is not an integer", tokens[2 * k + 1])))?;
    }
    if nums[0] <= 0 {
        return Err(parse_err(line_no, "N must be positive"));
    }
    let to_i32 = |v: i64| i32::try_from(v).map_err(|_| parse_err(line_no, format!("{v} out of range")));
    let params = OccupancyParams {
        phi_min: to_i32(nums[1])?,
        phi_max: to_i32(nums[2])?,
        phi_obs: to_i32(nums[3])?,
        phi_u: to_i32(nums[4])?,
    };
    params.validate().map_err(|e| parse_err(line_no, e.to_string()))?;
    Ok((nums[0] as usize, params))
}

pub fn parse_map(text: &str) -> Result<OccupancyGrid> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (header_line, header) = lines.next().ok_or_else(|| parse_err(1, "missing header"))?;
    let (n, params) = parse_header(header_line, header)?;
    let mut values = Vec::with_capacity(n * n);
    let mut rows = 0;
    let mut last_line = header_line;
    for (line_no, line) in lines {
        last_line = line_no;
        if rows == n {
            return Err(parse_err(line_no, format!("more than {n} rows")));
        }
        let mut count = 0;
        for tok in line.split_whitespace() {
            let v: i32 = tok.parse().map_err(|_| parse_err(line_no, format!("{tok:?} is not an integer")))?;
            if !params.in_range(v) {
                return Err(parse_err(
                    line_no,
                    format!("value {v} outside [{}, {}]", params.phi_min, params.phi_max),
                ));
            }
            values.push(v);
            count += 1;
        }
        if count != n {
            return Err(parse_err(line_no, format!("row has {count} values, expected {n}")));
        }
        rows += 1;
    }
    if rows != n {
        return Err(parse_err(last_line, format!("found {rows} rows, expected {n}")));
    }
    OccupancyGrid::from_values(n, params, values)
}

pub fn format_map(grid: &OccupancyGrid) -> String {
    let p = grid.params();
    let n = grid.size();
    let mut out = format!(
        "N {n} PHI_MIN {} PHI_MAX {} PHI_OBS {} PHI_U {}\n",
        p.phi_min, p.phi_max, p.phi_obs, p.phi_u
    );
    for row in grid.values().chunks(n) {
        let mut first = true;
        for v in row {
            if !first {
                out.push(' ');
            }
            first = false;
            write!(out, "{v}").expect("write to String");
        }
        out.push('\n');
    }
    out
}

pub fn load_map(path: impl AsRef<Path>) -> Result<OccupancyGrid> {
    parse_map(&std::fs::read_to_string(path)?)
}

pub fn save_map(grid: &OccupancyGrid, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, format_map(grid))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mapgen::{generate_maze, generate_terrain};

    #[test]
    fn roundtrip_generated_maps() {
        let params = OccupancyParams::default();
        for grid in [generate_terrain(32, 7, &params).unwrap(), generate_maze(30, 3, &params).unwrap()] {
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("m.map");
            save_map(&grid, &path).unwrap();
            assert_eq!(load_map(&path).unwrap(), grid);
        }
    }

    #[test]
    fn comments_are_ignored() {
        let text = "# a map\nN 2 PHI_MIN 0 PHI_MAX 100 PHI_OBS 50 PHI_U 50\n# row one\n0 1\n2 3\n";
        let g = parse_map(text).unwrap();
        assert_eq!(g.values(), &[0, 1, 2, 3]);
    }

    #[test]
    fn value_above_max_is_rejected() {
        let text = "N 2 PHI_MIN 0 PHI_MAX 100 PHI_OBS 50 PHI_U 50\n0 101\n2 3\n";
        match parse_map(text) {
            Err(Error::Parse { line, msg }) => {
                assert_eq!(line, 2);
                assert!(msg.contains("101"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn missing_row_is_rejected() {
        let grid = generate_terrain(32, 7, &OccupancyParams::default()).unwrap();
        let text = format_map(&grid);
        let truncated: String = text.lines().take(32).map(|l| format!("{l}\n")).collect();
        assert!(matches!(parse_map(&truncated), Err(Error::Parse { .. })));
    }

    #[test]
    fn ragged_row_is_rejected() {
        let text = "N 2 PHI_MIN 0 PHI_MAX 100 PHI_OBS 50 PHI_U 50\n0 1 2\n2 3\n";
        assert!(matches!(parse_map(text), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn malformed_header_is_rejected() {
        assert!(matches!(parse_map("N 2 PHI_MIN 0\n0 0\n0 0\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(
            parse_map("N 2 PHI_MIN 0 PHI_MAX 100 PHI_OBS 40 PHI_U 50\n0 0\n0 0\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(parse_map(""), Err(Error::Parse { .. })));
    }
}
