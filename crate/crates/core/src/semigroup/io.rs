//! Fixed-format serialization of semigroup outputs.
//!
//! CSV layout (one row per node, header included): the node coordinates
//! `x1[,x2[,x3]]` in flat-index order, then `value`. JSON layout: a
//! `meta` object (grid, time, scalars) and a `values` array in the same
//! node order. Floats use Rust's shortest round-trip formatting, so output
//! is bit-deterministic for identical inputs.

use serde_json::json;

use super::evolve::EvolveReport;
use super::kernel::KernelSlice;
use crate::disc::GridFunction;

/// CSV dump of a grid function: `x1[,x2[,x3]],value`, one row per node.
pub fn grid_csv(f: &GridFunction) -> String {
    let grid = f.grid();
    let d = grid.dimension();
    let mut out = String::new();
    for i in 0..d {
        out.push_str(&format!("x{}", i + 1));
        out.push(',');
    }
    out.push_str("value\n");
    let mut x = vec![0.0; d];
    for (i, v) in f.values().iter().enumerate() {
        grid.node_coord(i, &mut x);
        for xi in &x {
            out.push_str(&format!("{xi},"));
        }
        out.push_str(&format!("{v}\n"));
    }
    out
}

/// Grid metadata as a JSON object.
pub fn grid_meta(f: &GridFunction) -> serde_json::Value {
    let g = f.grid();
    json!({
        "dimension": g.dimension(),
        "half_width": g.half_width(),
        "nodes_per_axis": g.nodes_per_axis(),
        "spacing": g.spacing(),
    })
}

pub fn kernel_slice_csv(slice: &KernelSlice) -> String {
    grid_csv(&slice.density)
}

pub fn kernel_slice_json(slice: &KernelSlice) -> serde_json::Value {
    json!({
        "kind": "kernel_slice",
        "meta": {
            "grid": grid_meta(&slice.density),
            "t": slice.t,
            "source": slice.source,
            "source_node": slice.source_node,
            "mass": slice.mass,
            "max_negative_excursion": slice.max_negative_excursion,
        },
        "values": slice.density.values(),
    })
}

pub fn evolve_report_csv(report: &EvolveReport) -> String {
    grid_csv(&report.result)
}

pub fn evolve_report_json(report: &EvolveReport) -> serde_json::Value {
    json!({
        "kind": "evolve_report",
        "meta": {
            "grid": grid_meta(&report.result),
            "t": report.t,
            "path": format!("{:?}", report.path),
            "substeps": report.substeps,
            "krylov_dim": report.krylov_dim,
            "max_negative_excursion": report.max_negative_excursion,
            "sup_norm": report.sup_norm,
            "residual_estimate": report.residual_estimate,
        },
        "values": report.result.values(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::CoefficientField;
    use crate::disc::{assemble_stiffness, Grid};
    use crate::semigroup::{evolve, heat_kernel_slice, EvolveOptions};

    #[test]
    fn csv_has_fixed_columns_and_node_order() {
        let grid = Grid::build(1, 1.0, 3).unwrap();
        let f = GridFunction::from_fn(&grid, |x| x[0] + 2.0);
        let csv = grid_csv(&f);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "x1,value");
        assert_eq!(lines[1], "-1,1");
        assert_eq!(lines[2], "0,2");
        assert_eq!(lines[3], "1,3");
    }

    #[test]
    fn two_dimensional_header() {
        let grid = Grid::build(2, 1.0, 3).unwrap();
        let f = GridFunction::zeros(&grid);
        let csv = grid_csv(&f);
        assert!(csv.starts_with("x1,x2,value\n"));
        assert_eq!(csv.lines().count(), 1 + 9);
    }

    #[test]
    fn json_round_trip_is_deterministic() {
        let field = CoefficientField::identity(1);
        let grid = Grid::build(1, 4.0, 81).unwrap();
        let op = assemble_stiffness(&field, &grid, 0.0).unwrap();
        let slice = heat_kernel_slice(&op, &[0.0], 0.2, &EvolveOptions::default()).unwrap();
        let a = serde_json::to_string(&kernel_slice_json(&slice)).unwrap();
        let b = serde_json::to_string(&kernel_slice_json(&slice)).unwrap();
        assert_eq!(a, b);
        let v: serde_json::Value = serde_json::from_str(&a).unwrap();
        assert_eq!(v["kind"], "kernel_slice");
        assert_eq!(v["values"].as_array().unwrap().len(), grid.node_count());

        let v0 = GridFunction::from_fn(&grid, |x| {
            let u: f64 = 1.0 - x[0] * x[0];
            u.max(0.0)
        });
        let report = evolve(&op, &v0, 0.1, &EvolveOptions::default()).unwrap();
        let j = evolve_report_json(&report);
        assert_eq!(j["kind"], "evolve_report");
        assert!(j["meta"]["substeps"].as_u64().is_some());
    }
}
