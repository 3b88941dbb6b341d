//! Minimal and maximal admissible lattices under the sum/intersection order.
//!
//! `cargo run --example extremal`

use kisinlab::field::{FieldCtx, FieldElem};
use kisinlab::phimod::NormalForm;
use kisinlab::raynaud::{descent_check, extremal_report, predict_extremal_divisors, verify_extremal, CaseTable};

fn main() -> kisinlab::Result<()> {
    let ctx = FieldCtx::new(5, 1)?;
    let one = FieldElem::one(&ctx);
    let forms = [
        NormalForm::simple(&one, 3)?,
        NormalForm::split(&one, 1, &FieldElem::from_int(&ctx, 2), 2)?,
    ];
    for nf in &forms {
        for e in 1..=5 {
            let rep = match extremal_report(nf, e) {
                Ok(r) => r,
                Err(err) => {
                    println!("{} e={e}: {err}", nf.to_literal());
                    continue;
                }
            };
            let chk = verify_extremal(nf, e, &rep, 1_000_000)?;
            let closed = predict_extremal_divisors(nf, e, CaseTable::Corrected).ok();
            println!(
                "{} e={e}: min {} {:?}, max {} {:?}, coincide {}, {} admissible, all between: {}",
                nf.to_literal(),
                rep.min,
                rep.min_div,
                rep.max,
                rep.max_div,
                rep.coincide,
                chk.admissible,
                chk.outside.is_empty()
            );
            if let Some(d) = closed {
                println!(
                    "    closed form: min {:?} ({:?}), max {:?} ({:?})",
                    d.min, d.min_row, d.max, d.max_row
                );
            }
            println!("    unchanged over F_25: {}", descent_check(nf, e, 2)?);
        }
    }
    Ok(())
}
