use std::io::{self, Write};

use crate::StandardFormLp;

/// Writes `lp` in a line-oriented text form: one objective line, one line per
/// constraint, one line per column bound.
///
/// Missing names default to `x<j>` / `r<i>`.
pub fn write_lp_text<W: Write>(
    lp: &StandardFormLp,
    col_names: &[String],
    row_names: &[String],
    out: &mut W,
) -> io::Result<()> {
    let col = |j: usize| col_names.get(j).cloned().unwrap_or_else(|| format!("x{j}"));
    let terms = |pairs: &mut dyn Iterator<Item = (usize, f64)>| {
        let mut s = String::new();
        for (j, a) in pairs {
            if a >= 0.0 {
                s.push_str(&format!(" + {a} {}", col(j)));
            } else {
                s.push_str(&format!(" - {} {}", -a, col(j)));
            }
        }
        if s.is_empty() {
            s.push_str(" 0");
        }
        s
    };
    writeln!(out, "minimize")?;
    let mut obj = lp.objective.iter().copied().enumerate().filter(|&(_, c)| c != 0.0);
    writeln!(out, "obj:{}", terms(&mut obj))?;
    writeln!(out, "subject to")?;
    for (i, row) in lp.rows.iter().enumerate() {
        let name = row_names.get(i).cloned().unwrap_or_else(|| format!("r{i}"));
        let mut it = row.coeffs.iter().copied();
        writeln!(out, "{name}:{} {} {}", terms(&mut it), row.sense.symbol(), row.rhs)?;
    }
    writeln!(out, "bounds")?;
    for j in 0..lp.num_cols() {
        writeln!(out, "{} <= {} <= {}", fmt_bound(lp.lower[j]), col(j), fmt_bound(lp.upper[j]))?;
    }
    writeln!(out, "end")
}

fn fmt_bound(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v}")
    }
}
