//! Witness chain files: disk chains written to CSV and read back.
//!
//! A distance bound is only as good as its witness, so the chain behind
//! every reported bound is stored completely: marked parameters, disk
//! radius, grid resolution, and every node value of every link. Node
//! values print in shortest round-trip form, so the reloaded chain
//! evaluates to exactly the stored values and re-validation reproduces
//! the original junction defects bit for bit.
//!
//! Layout: one row per grid node, with the link metadata repeated on
//! each row. Columns: link, tol, za_re, za_im, zb_re, zb_im, radius, n,
//! dim, iy, ix, c0..c{dim-1}. An empty chain writes only the header
//! (for that case the dim defaults to 2 on reload and the tolerance
//! falls back to the caller's).

use std::fs::File;
use std::path::Path;

use acx_core::chain::{ChainLink, KobayashiChain};
use acx_core::hyperbolic::DiskPoint;
use acx_core::solver::DiskMap;

use crate::csvout::{num, Table};
use crate::{CliError, CliResult};

const FIXED_COLS: usize = 11;

pub fn write_witness(dir: &Path, name: &str, chain: &KobayashiChain) -> CliResult<()> {
    let dim = chain.links.first().map(|l| l.disk.dim()).unwrap_or(2);
    let mut header: Vec<String> = [
        "link", "tol", "za_re", "za_im", "zb_re", "zb_im", "radius", "n", "dim", "iy", "ix",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for k in 0..dim {
        header.push(format!("c{k}"));
    }
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut table = Table::create(dir, name, &header_refs)?;

    for (li, link) in chain.links.iter().enumerate() {
        let d = &link.disk;
        if d.dim() != dim {
            return Err(CliError::Input(String::from(
                "chain links disagree on the chart dimension",
            )));
        }
        let n = d.grid_resolution();
        let side = d.side();
        let meta = [
            li.to_string(),
            num(chain.tolerance),
            num(link.z.z().re),
            num(link.z.z().im),
            num(link.w.z().re),
            num(link.w.z().im),
            num(d.radius()),
            n.to_string(),
            dim.to_string(),
        ];
        for iy in 0..side {
            for ix in 0..side {
                let mut row: Vec<String> = meta.to_vec();
                row.push(iy.to_string());
                row.push(ix.to_string());
                let v = d.value_at(ix, iy);
                for k in 0..dim {
                    row.push(num(v[k]));
                }
                table.row(&row)?;
            }
        }
    }
    table.finish()?;
    Ok(())
}

struct LinkAccumulator {
    za: (f64, f64),
    zb: (f64, f64),
    radius: f64,
    n: usize,
    dim: usize,
    values: Vec<f64>,
    seen: Vec<bool>,
}

impl LinkAccumulator {
    fn new(za: (f64, f64), zb: (f64, f64), radius: f64, n: usize, dim: usize) -> Self {
        let side = 2 * n + 1;
        LinkAccumulator {
            za,
            zb,
            radius,
            n,
            dim,
            values: vec![0.0; side * side * dim],
            seen: vec![false; side * side],
        }
    }

    fn finish(self) -> CliResult<ChainLink> {
        if self.seen.iter().any(|&s| !s) {
            return Err(CliError::Input(String::from(
                "witness file is missing grid nodes for a link",
            )));
        }
        let n = self.n;
        let dim = self.dim;
        let side = 2 * n + 1;
        let radius = self.radius;
        let h = radius / n as f64;
        let values = self.values;
        // from_fn calls back at exact node coordinates (i - n) * h; the
        // rounded index recovers i for any positive h.
        let disk = DiskMap::from_fn(radius, n, dim, move |x, y| {
            let ix = (x / h).round() as i64 + n as i64;
            let iy = (y / h).round() as i64 + n as i64;
            let node = (iy as usize * side + ix as usize) * dim;
            values[node..node + dim].to_vec()
        })?;
        Ok(ChainLink {
            disk,
            z: DiskPoint::from_xy(self.za.0, self.za.1)?,
            w: DiskPoint::from_xy(self.zb.0, self.zb.1)?,
        })
    }
}

pub fn read_witness(path: &Path, fallback_tol: f64) -> CliResult<KobayashiChain> {
    let file = File::open(path)
        .map_err(|e| CliError::Input(format!("cannot open {}: {e}", path.display())))?;
    let mut reader = csv::Reader::from_reader(file);

    let mut tolerance = fallback_tol;
    let mut links: Vec<ChainLink> = Vec::new();
    let mut current: Option<(usize, LinkAccumulator)> = None;

    for record in reader.records() {
        let record = record?;
        let get = |i: usize| -> CliResult<&str> {
            record
                .get(i)
                .ok_or_else(|| CliError::Input(String::from("short witness row")))
        };
        let parse_f = |i: usize| -> CliResult<f64> {
            get(i)?
                .parse()
                .map_err(|_| CliError::Input(format!("bad number in witness column {i}")))
        };
        let parse_u = |i: usize| -> CliResult<usize> {
            get(i)?
                .parse()
                .map_err(|_| CliError::Input(format!("bad index in witness column {i}")))
        };

        let li = parse_u(0)?;
        tolerance = parse_f(1)?;
        let za = (parse_f(2)?, parse_f(3)?);
        let zb = (parse_f(4)?, parse_f(5)?);
        let radius = parse_f(6)?;
        let n = parse_u(7)?;
        let dim = parse_u(8)?;
        let iy = parse_u(9)?;
        let ix = parse_u(10)?;
        if record.len() != FIXED_COLS + dim {
            return Err(CliError::Input(String::from(
                "witness row width disagrees with its dim column",
            )));
        }

        let rotate = match &current {
            Some((id, _)) if *id == li => false,
            Some((id, _)) if *id + 1 == li => true,
            None if li == links.len() => {
                current = Some((li, LinkAccumulator::new(za, zb, radius, n, dim)));
                false
            }
            _ => {
                return Err(CliError::Input(String::from(
                    "witness links must appear in order, contiguously",
                )))
            }
        };
        if rotate {
            let (_, acc) = current.take().expect("rotation follows an open link");
            links.push(acc.finish()?);
            current = Some((li, LinkAccumulator::new(za, zb, radius, n, dim)));
        }

        let (_, acc) = current.as_mut().expect("link accumulator is open");
        let side = 2 * acc.n + 1;
        if iy >= side || ix >= side || dim != acc.dim {
            return Err(CliError::Input(String::from(
                "witness node indices leave the declared grid",
            )));
        }
        let node = iy * side + ix;
        acc.seen[node] = true;
        for k in 0..dim {
            acc.values[node * dim + k] = parse_f(FIXED_COLS + k)?;
        }
    }

    if let Some((_, acc)) = current.take() {
        links.push(acc.finish()?);
    }
    Ok(KobayashiChain::new(links, tolerance))
}

#[cfg(test)]
mod tests {
    use super::*;
    use acx_core::chain::{chain_length, validate_chain};
    use acx_core::estimator::{estimate_distance, EstimatorConfig};
    use acx_core::manifold::{self, Point};

    #[test]
    fn witness_roundtrip_preserves_validation_and_length() {
        let m = manifold::unit_disk();
        let cfg = EstimatorConfig {
            waypoints: 2,
            ..EstimatorConfig::default()
        };
        let p = Point::new(vec![0.0, 0.0]).unwrap();
        let q = Point::new(vec![0.5, 0.0]).unwrap();
        let est = estimate_distance(&m, &p, &q, &cfg).unwrap();
        assert!(validate_chain(&est.chain, p.coords(), q.coords()));

        let dir = tempfile::tempdir().unwrap();
        write_witness(dir.path(), "w.csv", &est.chain).unwrap();
        let back = read_witness(&dir.path().join("w.csv"), 1.0).unwrap();

        assert_eq!(back.links.len(), est.chain.links.len());
        assert_eq!(back.tolerance, est.chain.tolerance);
        assert!(validate_chain(&back, p.coords(), q.coords()));
        assert_eq!(chain_length(&back), chain_length(&est.chain));
        assert_eq!(
            back.max_defect(p.coords(), q.coords()),
            est.chain.max_defect(p.coords(), q.coords()),
        );
    }

    #[test]
    fn empty_chain_roundtrips_with_the_fallback_tolerance() {
        let chain = KobayashiChain::empty(1e-6);
        let dir = tempfile::tempdir().unwrap();
        write_witness(dir.path(), "w.csv", &chain).unwrap();
        let back = read_witness(&dir.path().join("w.csv"), 1e-6).unwrap();
        assert!(back.links.is_empty());
        assert_eq!(back.tolerance, 1e-6);
    }
}
