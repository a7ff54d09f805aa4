use std::io::Write;

use super::StudySeries;
use crate::error::Result;
use crate::mesh::StaggeredMesh;
use crate::spaces::{evaluate_field, DofMap, FieldValues, FieldVector};

pub const CSV_HEADER: &str = "example,xi,kappa,m,n,h,dof_u,dof_p,err_u_l2,err_p_l2,rate_u,rate_p,resid,wall_ms";

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// Six significant digits, fixed or scientific like C's `%g`.
pub fn format_sig(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{v:.5e}");
    let (mant, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..6).contains(&exp) {
        trim_zeros(&format!("{:.*}", (5 - exp) as usize, v))
    } else {
        format!("{}e{exp}", trim_zeros(mant))
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(format_sig).unwrap_or_default()
}

/// One row per level; `timing = false` leaves `wall_ms` empty so output is reproducible.
pub fn write_csv(series: &[StudySeries], timing: bool, mut w: impl Write) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for s in series {
        let xi = if s.example == super::ExampleKind::Ex2 { format_sig(s.xi) } else { String::new() };
        for (i, r) in s.record.levels.iter().enumerate() {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                s.example,
                xi,
                format_sig(s.kappa),
                s.m,
                r.n,
                format_sig(r.h),
                r.dof_u,
                r.dof_p,
                format_sig(r.err_u_l2),
                format_sig(r.err_p_l2),
                opt(s.record.rate_u[i]),
                opt(s.record.rate_p[i]),
                format_sig(r.residual),
                if timing { format_sig(r.wall_ms) } else { String::new() },
            )?;
        }
    }
    Ok(())
}

/// Legacy VTK unstructured grid, one cell per triangle with its own three
/// points, carrying `Re u_h`, `Im u_h` and `|p_h|` at the cell corners.
pub fn write_vtk(
    mesh: &StaggeredMesh,
    scalar: &DofMap,
    vector: &DofMap,
    u_h: &FieldVector,
    p_h: &FieldVector,
    mut w: impl Write,
) -> Result<()> {
    let nt = mesh.triangles.len();
    let mut re = Vec::with_capacity(3 * nt);
    let mut im = Vec::with_capacity(3 * nt);
    let mut ap = Vec::with_capacity(3 * nt);
    writeln!(w, "# vtk DataFile Version 3.0\nstaggered DG solution\nASCII\nDATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {} double", 3 * nt)?;
    for t in 0..nt {
        let pts = mesh.triangle_points(t);
        for p in &pts {
            writeln!(w, "{} {} 0", p[0], p[1])?;
        }
        if let FieldValues::Scalar(s) = evaluate_field(scalar, u_h, t, &pts)? {
            re.extend(s.iter().map(|v| v.value.re));
            im.extend(s.iter().map(|v| v.value.im));
        }
        if let FieldValues::Vector(s) = evaluate_field(vector, p_h, t, &pts)? {
            ap.extend(s.iter().map(|v| (v.value[0].norm_sqr() + v.value[1].norm_sqr()).sqrt()));
        }
    }
    writeln!(w, "CELLS {nt} {}", 4 * nt)?;
    for t in 0..nt {
        writeln!(w, "3 {} {} {}", 3 * t, 3 * t + 1, 3 * t + 2)?;
    }
    writeln!(w, "CELL_TYPES {nt}")?;
    for _ in 0..nt {
        writeln!(w, "5")?;
    }
    writeln!(w, "POINT_DATA {}", 3 * nt)?;
    for (name, data) in [("re_u", &re), ("im_u", &im), ("abs_p", &ap)] {
        writeln!(w, "SCALARS {name} double 1\nLOOKUP_TABLE default")?;
        for v in data.iter() {
            writeln!(w, "{v}")?;
        }
    }
    Ok(())
}

const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Log-log plot of the errors against `h`, one solid (u) and one dashed (p)
/// line per series.
pub fn write_svg_plot(series: &[StudySeries], mut w: impl Write) -> Result<()> {
    let (width, height, margin) = (640.0, 480.0, 60.0);
    let pts: Vec<(f64, f64)> = series
        .iter()
        .flat_map(|s| s.record.levels.iter().flat_map(|r| [(r.h, r.err_u_l2), (r.h, r.err_p_l2)]))
        .filter(|&(h, e)| h > 0.0 && e > 0.0 && e.is_finite())
        .collect();
    let bounds = |f: fn(&(f64, f64)) -> f64| {
        let lo = pts.iter().map(f).fold(f64::INFINITY, f64::min).log10().floor();
        let hi = pts.iter().map(f).fold(f64::NEG_INFINITY, f64::max).log10().ceil();
        if lo.is_finite() && hi.is_finite() {
            (lo, hi.max(lo + 1.0))
        } else {
            (0.0, 1.0)
        }
    };
    let (x0, x1) = bounds(|p| p.0);
    let (y0, y1) = bounds(|p| p.1);
    let sx = |h: f64| margin + (h.log10() - x0) / (x1 - x0) * (width - 2.0 * margin);
    let sy = |e: f64| height - margin - (e.log10() - y0) / (y1 - y0) * (height - 2.0 * margin);
    writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="12">"#
    )?;
    writeln!(w, r#"<rect width="100%" height="100%" fill="white"/>"#)?;
    writeln!(
        w,
        r#"<rect x="{margin}" y="{margin}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        width - 2.0 * margin,
        height - 2.0 * margin
    )?;
    for d in (x0 as i32)..=(x1 as i32) {
        let x = sx(10f64.powi(d));
        writeln!(w, r#"<text x="{x}" y="{}" text-anchor="middle">1e{d}</text>"#, height - margin + 18.0)?;
    }
    for d in (y0 as i32)..=(y1 as i32) {
        let y = sy(10f64.powi(d));
        writeln!(w, r#"<line x1="{margin}" y1="{y}" x2="{}" y2="{y}" stroke="lightgray"/>"#, width - margin)?;
        writeln!(w, r#"<text x="{}" y="{}" text-anchor="end">1e{d}</text>"#, margin - 6.0, y + 4.0)?;
    }
    writeln!(w, r#"<text x="{}" y="{}" text-anchor="middle">h</text>"#, width / 2.0, height - 15.0)?;
    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        for (field, dash) in [("u", ""), ("p", r#" stroke-dasharray="6 3""#)] {
            let line: Vec<String> = s
                .record
                .levels
                .iter()
                .map(|r| (r.h, if field == "u" { r.err_u_l2 } else { r.err_p_l2 }))
                .filter(|&(h, e)| h > 0.0 && e > 0.0 && e.is_finite())
                .map(|(h, e)| format!("{:.2},{:.2}", sx(h), sy(e)))
                .collect();
            if line.is_empty() {
                continue;
            }
            writeln!(w, r#"<polyline points="{}" fill="none" stroke="{color}"{dash}/>"#, line.join(" "))?;
        }
        let label = format!("κ={} m={} (solid u, dashed p)", format_sig(s.kappa), s.m);
        writeln!(
            w,
            r#"<text x="{}" y="{}" fill="{color}">{label}</text>"#,
            margin + 8.0,
            margin + 16.0 * (i as f64 + 1.0)
        )?;
    }
    writeln!(w, "</svg>")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(format_sig(0.5), "0.5");
        assert_eq!(format_sig(0.015625), "0.015625");
        assert_eq!(format_sig(1.7e-4), "0.00017");
        assert_eq!(format_sig(1.234567e-7), "1.23457e-7");
        assert_eq!(format_sig(10.0), "10");
        assert_eq!(format_sig(2.0 / 3.0), "0.666667");
        assert_eq!(format_sig(1234567.0), "1.23457e6");
        assert_eq!(format_sig(9.9999996), "10");
        assert_eq!(format_sig(0.0), "0");
    }
}
