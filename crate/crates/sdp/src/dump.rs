//! Plain-text dump of an assembled problem in the SDPA sparse format, for
//! cross-checking against external solvers.
//!
//! The file describes
//!
//! ```text
//! minimize  Σ_i c_i y_i   subject to   Σ_i F_i y_i − F_0 ⪰ 0
//! ```
//!
//! over the flat coordinates `y` (see [`crate::VariableInfo`]):
//!
//! ```text
//! " comment lines start with a double quote
//! <number of coordinates>
//! <number of blocks>
//! <block sizes, negative for diagonal blocks>
//! <c_1 ... c_m>
//! <matrix index> <block index> <row> <col> <value>     (one per nonzero)
//! ```
//!
//! Matrix index 0 is `F_0`, indices are 1-based and only the upper triangle
//! is written. Each LMI becomes one block in psd orientation with strict
//! margins folded into `F_0`. Linear equalities become a trailing diagonal
//! block holding `g·y − h ≥ 0` and `h − g·y ≥ 0`.

use std::fmt::Write as _;
use std::io::{self, Write};

use nalgebra::DMatrix;

use crate::problem::SdpProblem;

fn fmt(v: f64) -> String {
    format!("{v:.17e}")
}

fn push_upper(out: &mut String, mat: usize, blk: usize, m: &DMatrix<f64>) {
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            let v = m[(i, j)];
            if v != 0.0 {
                let _ = writeln!(out, "{} {} {} {} {}", mat, blk, i + 1, j + 1, fmt(v));
            }
        }
    }
}

pub fn to_sdpa_string(problem: &SdpProblem) -> String {
    let n = problem.n_coords();
    let mut out = String::new();
    let _ = writeln!(out, "\" LMI problem dump: minimize c'y s.t. sum_i F_i y_i - F_0 >= 0");
    for v in problem.variables() {
        let _ = writeln!(
            out,
            "\" variable {} {}x{} {:?} coordinates {}..{}",
            v.name,
            v.rows,
            v.cols,
            v.structure,
            v.offset + 1,
            v.offset + v.len()
        );
    }
    let obj = problem.objective();
    let _ = writeln!(out, "\" objective constant {}", fmt(obj.constant_part()[(0, 0)]));

    let mut eq_rows: Vec<(Vec<(usize, f64)>, f64)> = Vec::new();
    for e in problem.equalities() {
        let (r, c) = e.expr.shape();
        for i in 0..r {
            for j in 0..c {
                let g: Vec<(usize, f64)> = e
                    .expr
                    .terms()
                    .iter()
                    .map(|(&k, m)| (k, m[(i, j)]))
                    .filter(|(_, v)| *v != 0.0)
                    .collect();
                eq_rows.push((g, -e.expr.constant_part()[(i, j)]));
            }
        }
    }

    let nblocks = problem.constraints().len() + usize::from(!eq_rows.is_empty());
    let _ = writeln!(out, "{n}");
    let _ = writeln!(out, "{nblocks}");
    let mut sizes: Vec<String> = problem
        .constraints()
        .iter()
        .map(|c| c.dim().to_string())
        .collect();
    if !eq_rows.is_empty() {
        sizes.push(format!("-{}", 2 * eq_rows.len()));
    }
    let _ = writeln!(out, "{}", sizes.join(" "));
    let mut c = vec![0.0; n];
    for (&k, m) in obj.terms() {
        c[k] = m[(0, 0)];
    }
    let _ = writeln!(out, "{}", c.iter().map(|v| fmt(*v)).collect::<Vec<_>>().join(" "));

    for (bi, con) in problem.constraints().iter().enumerate() {
        let psd = con.psd_form();
        let dim = con.dim();
        let f0 = -(psd.constant_part() - DMatrix::identity(dim, dim) * problem.margin_of(con));
        push_upper(&mut out, 0, bi + 1, &f0);
        for (&k, m) in psd.terms() {
            push_upper(&mut out, k + 1, bi + 1, m);
        }
    }
    if !eq_rows.is_empty() {
        let blk = problem.constraints().len() + 1;
        for (r, (g, h)) in eq_rows.iter().enumerate() {
            let (lo, hi) = (2 * r + 1, 2 * r + 2);
            if *h != 0.0 {
                let _ = writeln!(out, "0 {blk} {lo} {lo} {}", fmt(*h));
                let _ = writeln!(out, "0 {blk} {hi} {hi} {}", fmt(-h));
            }
            for (k, v) in g {
                let _ = writeln!(out, "{} {blk} {lo} {lo} {}", k + 1, fmt(*v));
                let _ = writeln!(out, "{} {blk} {hi} {hi} {}", k + 1, fmt(-v));
            }
        }
    }
    out
}

pub fn write_sdpa<W: Write>(problem: &SdpProblem, mut w: W) -> io::Result<()> {
    w.write_all(to_sdpa_string(problem).as_bytes())
}
