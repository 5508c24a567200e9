use crate::error::{Error, Result};
use crate::ingest::Panel;

use super::{CorrKind, CorrelationMatrix};

/// Sample Pearson correlations between panel columns.
pub fn pearson_corr(panel: &Panel) -> Result<CorrelationMatrix> {
    let x = panel.values();
    let (n, p) = x.shape();
    if n < 2 {
        return Err(Error::InvalidArgument(format!("Pearson correlation needs >= 2 rows, got {n}")));
    }
    let mut centered = x.clone();
    let mut inv_norm = vec![0.0; p];
    for (j, inv) in inv_norm.iter_mut().enumerate() {
        let mut col = centered.column_mut(j);
        let (lo, hi) = col.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
        if lo == hi {
            return Err(Error::Degenerate(format!(
                "grid '{}' is constant over the selected days",
                panel.grids().cell(j).grid_id
            )));
        }
        let mean = col.sum() / n as f64;
        col.add_scalar_mut(-mean);
        *inv = 1.0 / col.norm();
    }
    let mut r = centered.tr_mul(&centered);
    for i in 0..p {
        for j in 0..p {
            r[(i, j)] = if i == j {
                1.0
            } else {
                (r[(i, j)] * inv_norm[i] * inv_norm[j]).clamp(-1.0, 1.0)
            };
        }
    }
    let r = (&r + r.transpose()) * 0.5;
    Ok(CorrelationMatrix {
        values: r,
        kind: CorrKind::Pearson,
        grid_ids: panel.grids().ids(),
        provenance: format!("{}x{} panel, order {}", n, p, panel.order_tag()),
    })
}
