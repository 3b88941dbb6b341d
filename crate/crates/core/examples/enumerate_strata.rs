//! Admissible lattices and their stratification by elementary divisors.
//!
//! `cargo run --example enumerate_strata`

use kisinlab::field::{FieldCtx, FieldElem};
use kisinlab::kisin::{enumerate_admissible, predict_cardinality, stratify};
use kisinlab::phimod::{NormalForm, VParams};

fn main() -> kisinlab::Result<()> {
    let ctx = FieldCtx::new(3, 1)?;
    let nf = NormalForm::simple(&FieldElem::one(&ctx), 2)?;
    for e in 1..=4 {
        let v = VParams::new(e, e, 0)?;
        let set = enumerate_admissible(&nf, &v)?;
        println!(
            "e = {e}: m(v) = {:?}, {} lattices, predicted {:?}",
            set.m_v,
            set.len(),
            predict_cardinality(&nf, &v)
        );
        for s in stratify(&set)? {
            if s.actual_count > 0 || s.predicted_count.unwrap_or(0) > 0 {
                println!(
                    "    G({},{}): {} points, predicted {:?}, dim {:?}",
                    s.divisors.a, s.divisors.b, s.actual_count, s.predicted_count, s.predicted_dim
                );
            }
        }
    }
    Ok(())
}
