use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;

use super::Grid2D;
use crate::Result;

/// Writes a grid snapshot: a 3-line text header (grid size, domain bounds,
/// time) followed by the values as little-endian f64, row major.
pub fn write_grid_snapshot(
    path: &Path,
    values: &DMatrix<f64>,
    grid: &Grid2D,
    time: f64,
) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    writeln!(file, "{}", grid.n)?;
    writeln!(file, "{} {} {} {}", grid.ax, grid.bx, grid.ay, grid.by)?;
    writeln!(file, "{time}")?;
    let mut buf = Vec::with_capacity(values.len() * 8);
    for i in 0..values.nrows() {
        for j in 0..values.ncols() {
            buf.extend_from_slice(&values[(i, j)].to_le_bytes());
        }
    }
    file.write_all(&buf)?;
    Ok(())
}

/// Plain CSV companion for small grids.
pub fn write_grid_csv(path: &Path, values: &DMatrix<f64>) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    for i in 0..values.nrows() {
        let row: Vec<String> = (0..values.ncols()).map(|j| format!("{:.17e}", values[(i, j)])).collect();
        writeln!(file, "{}", row.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapshot_roundtrip() {
        let dir = std::env::temp_dir().join("lowsplit_export_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("snap.grid");
        let grid = Grid2D::periodic(3, 0.0, 1.0, 0.0, 1.0);
        let values = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.25]);
        write_grid_snapshot(&path, &values, &grid, 0.5).unwrap();

        let bytes = std::fs::read(&path).unwrap();
        let header_end = bytes
            .windows(1)
            .enumerate()
            .filter(|(_, w)| w[0] == b'\n')
            .map(|(i, _)| i)
            .nth(2)
            .unwrap()
            + 1;
        let header = std::str::from_utf8(&bytes[..header_end]).unwrap();
        let mut lines = header.lines();
        assert_eq!(lines.next().unwrap(), "3");
        assert_eq!(lines.next().unwrap(), "0 1 0 1");
        assert_eq!(lines.next().unwrap(), "0.5");
        let payload = &bytes[header_end..];
        assert_eq!(payload.len(), 9 * 8);
        // row-major: first value is (0,0), fourth is (1,0)
        let v = f64::from_le_bytes(payload[0..8].try_into().unwrap());
        assert_eq!(v, 1.0);
        let v = f64::from_le_bytes(payload[3 * 8..4 * 8].try_into().unwrap());
        assert_eq!(v, 4.0);
        let last = f64::from_le_bytes(payload[8 * 8..9 * 8].try_into().unwrap());
        assert_eq!(last, 9.25);
    }
}
