//! Cross-checking the structured enumeration against brute force.
//!
//! The oracle walks a ball of the tree directly and tests every lattice with
//! the definition, and looks for Φ-stable lines by plain linear algebra.

use std::collections::BTreeMap;

use kisinlab::field::{units, FieldCtx};
use kisinlab::kisin::enumerate_admissible;
use kisinlab::latmod::{rel_phi_matrix, Lattice};
use kisinlab::oracle::{ball_enumerate, brute_admissible_in_ball, brute_stable_line, diff_reports};
use kisinlab::phimod::{NormalForm, VParams};
use kisinlab::series::TruncatedSeries;

fn main() -> kisinlab::Result<()> {
    let ctx = FieldCtx::new(3, 2)?;
    let us = units(&ctx);
    let nf = NormalForm::split(&us[0], 1, &us[0], 1)?;
    let v = VParams::new(5, 4, 0)?;
    let set = enumerate_admissible(&nf, &v)?;
    let (e, r1, r2) = (v.e, v.r1, v.r2);
    if let (Some(y), Some(center)) = (set.m_v, set.points.first()) {
        let brute = brute_admissible_in_ball(&nf.matrix(), (e, r1, r2), center, 4, y, 1 << 20)?;
        let none = BTreeMap::new();
        let diff = diff_reports(&set.points, &brute, &none, &none);
        println!(
            "{}: {} structured, {} brute force, diff size {}",
            nf.to_literal(),
            set.len(),
            brute.len(),
            diff.size()
        );
    }

    // A nonsplit extension has exactly one stable line through each lattice.
    let gamma = TruncatedSeries::parse(&ctx, "1")?;
    let nf = NormalForm::triangular(&us[0], 1, &us[0], 1, &gamma)?;
    println!("{}", nf.to_literal());
    let phi = nf.matrix();
    for l in ball_enumerate(&Lattice::standard(&ctx), 1, None, 1000)? {
        let b = rel_phi_matrix(&phi, &l);
        let vb = b.iter().flatten().filter_map(|x| x.valuation()).min().unwrap_or(0);
        let lines: Vec<String> = (vb..vb + 4)
            .filter_map(|j| brute_stable_line(&phi, &l, j, j - vb + 3).ok().flatten())
            .map(|w| format!("{}*u^{}", w.c, w.j))
            .collect();
        println!("  {l}: stable lines with eigenvalues {lines:?}");
    }
    Ok(())
}
