//! Magnitude grids of 2-RDMs over pair space, as CSV data plus an optional
//! standalone SVG rendering.

use std::io::{BufRead, Write};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::hamiltonian::CriticalSubset;
use crate::rdm::TwoRDM;

const CSV_HEADER: &str = "# heatmap v1";
const CELL: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct HeatMapSheet {
    pub values: DMatrix<f64>,
    /// Lower triangle holds critical-subset members, upper triangle the rest.
    pub split: bool,
}

/// `|Γ_ab|` on the pair-space grid.
///
/// With `split`, entries below the diagonal are shown only for subset members
/// and entries above it only for non-members, so each triangle carries one
/// side of the partition. Diagonal entries are always shown.
pub fn emit_heatmap(rdm: &TwoRDM, subset: &CriticalSubset, split: bool) -> Result<HeatMapSheet> {
    let d = rdm.dim();
    if subset.space().dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: subset.space().dim(),
        });
    }
    if subset.basis() != rdm.basis() {
        return Err(Error::BasisMismatch {
            left: rdm.basis().to_string(),
            right: subset.basis().to_string(),
        });
    }
    let values = DMatrix::from_fn(d, d, |a, b| {
        let shown = !split || a == b || (a > b) == subset.contains(a, b);
        if shown {
            rdm.get(a, b).norm()
        } else {
            0.0
        }
    });
    Ok(HeatMapSheet { values, split })
}

impl HeatMapSheet {
    pub fn dim(&self) -> usize {
        self.values.nrows()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().fold(0.0, |m, &x| m.max(x))
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{CSV_HEADER} dim={} split={}", self.dim(), self.split)?;
        for row in self.values.row_iter() {
            let cells: Vec<String> = row.iter().map(|x| format!("{x:.16e}")).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty heatmap file".into()))??;
        let rest = header
            .strip_prefix(CSV_HEADER)
            .ok_or_else(|| Error::Parse("missing heatmap header".into()))?;
        let split = rest.contains("split=true");
        let mut rows = Vec::new();
        for line in lines {
            let line = line?;
            let row: std::result::Result<Vec<f64>, _> = line.split(',').map(str::parse).collect();
            rows.push(row.map_err(|_| Error::Parse(format!("bad heatmap row {line:?}")))?);
        }
        let d = rows.len();
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::Parse("heatmap grid is not square".into()));
        }
        Ok(Self {
            values: DMatrix::from_fn(d, d, |a, b| rows[a][b]),
            split,
        })
    }

    /// Self-contained SVG; colors are normalized to the sheet maximum.
    pub fn write_svg<W: Write>(&self, mut w: W, title: &str) -> Result<()> {
        let d = self.dim();
        let size = d * CELL;
        let top = 24;
        let max = self.max();
        writeln!(
            w,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{}" viewBox="0 0 {size} {}">"#,
            size + top,
            size + top
        )?;
        writeln!(
            w,
            r#"<text x="2" y="16" font-family="monospace" font-size="12">{}</text>"#,
            escape(title)
        )?;
        for a in 0..d {
            for b in 0..d {
                let level = if max > 0.0 {
                    self.values[(a, b)] / max
                } else {
                    0.0
                };
                writeln!(
                    w,
                    r#"<rect x="{}" y="{}" width="{CELL}" height="{CELL}" fill="{}"/>"#,
                    b * CELL,
                    top + a * CELL,
                    color(level)
                )?;
            }
        }
        if self.split {
            writeln!(
                w,
                r##"<line x1="0" y1="{top}" x2="{size}" y2="{}" stroke="#c03030" stroke-width="1"/>"##,
                top + size
            )?;
        }
        writeln!(w, "</svg>")?;
        Ok(())
    }
}

/// White to dark blue.
fn color(level: f64) -> String {
    let l = level.clamp(0.0, 1.0);
    let mix = |lo: f64, hi: f64| (hi + (lo - hi) * l).round() as u8;
    format!(
        "#{:02x}{:02x}{:02x}",
        mix(8.0, 255.0),
        mix(48.0, 255.0),
        mix(107.0, 255.0)
    )
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::enumerate_sector;
    use crate::hamiltonian::{
        critical_subset, reduce_to_two_body, BasisTag, HubbardParams, NONZERO_TOL,
    };
    use crate::rdm::two_rdm_from_state;
    use num_complex::Complex64;

    fn reference() -> (TwoRDM, CriticalSubset) {
        let basis = enumerate_sector(3, 2, 1).unwrap();
        let psi = crate::CVector::from_fn(basis.dim(), |i, _| {
            Complex64::new(1.0 + i as f64, 0.5 * i as f64)
        });
        let psi = &psi / Complex64::new(crate::linalg::norm(&psi), 0.0);
        let g = two_rdm_from_state(&psi, &basis).unwrap();
        let h2 = reduce_to_two_body(&HubbardParams::reference(), 3).unwrap();
        (g, critical_subset(&h2, NONZERO_TOL))
    }

    #[test]
    fn zero_rdm_gives_zero_sheet() {
        let (_, subset) = reference();
        let sheet = emit_heatmap(&TwoRDM::zeros(BasisTag::Site, 3, 3), &subset, true).unwrap();
        assert_eq!(sheet.dim(), 30);
        assert_eq!(sheet.max(), 0.0);
    }

    #[test]
    fn plain_sheet_is_symmetric() {
        let (g, subset) = reference();
        let sheet = emit_heatmap(&g, &subset, false).unwrap();
        assert!((&sheet.values - sheet.values.transpose()).amax() < 1e-12);
        assert!(sheet.max() > 0.0);
    }

    #[test]
    fn split_sheet_partitions_by_subset() {
        let (g, subset) = reference();
        let sheet = emit_heatmap(&g, &subset, true).unwrap();
        for a in 0..30 {
            for b in 0..30 {
                let v = sheet.values[(a, b)];
                let m = g.get(a, b).norm();
                match a.cmp(&b) {
                    std::cmp::Ordering::Greater if subset.contains(a, b) => assert_eq!(v, m),
                    std::cmp::Ordering::Less if !subset.contains(a, b) => assert_eq!(v, m),
                    std::cmp::Ordering::Equal => assert_eq!(v, m),
                    _ => assert_eq!(v, 0.0),
                }
            }
        }
    }

    #[test]
    fn csv_round_trip_and_svg() {
        let (g, subset) = reference();
        let sheet = emit_heatmap(&g, &subset, true).unwrap();
        let mut buf = Vec::new();
        sheet.write_csv(&mut buf).unwrap();
        assert_eq!(HeatMapSheet::read_csv(buf.as_slice()).unwrap(), sheet);

        let mut svg = Vec::new();
        sheet.write_svg(&mut svg, "target <site>").unwrap();
        let svg = String::from_utf8(svg).unwrap();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<rect").count(), 900);
        assert!(svg.contains("target &lt;site&gt;"));
    }

    #[test]
    fn mismatched_inputs_are_rejected() {
        let (_, subset) = reference();
        let small = TwoRDM::zeros(BasisTag::Site, 2, 2);
        assert!(emit_heatmap(&small, &subset, true).is_err());
    }
}
