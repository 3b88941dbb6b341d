//! Reducing a Φ-matrix to normal form.
//!
//! `cargo run --example classify`

use kisinlab::field::FieldCtx;
use kisinlab::latmod::parse_matrix;
use kisinlab::phimod::{classify, PhiModule};

fn main() -> kisinlab::Result<()> {
    let ctx = FieldCtx::new(3, 1)?;
    for lit in [
        "0,1;u^2,0",
        "u,1;0,u^3",
        "u^4,u;0,2*u^2",
        "u^2+u^3,u;u^4,2*u",
        "u,u^2+u^5;0,u^3",
    ] {
        let phi = PhiModule::new(parse_matrix(&ctx, lit)?)?;
        match classify(&phi) {
            Ok(nf) => println!(
                "{lit:>20}  v(det) = {:<2} -> {:<12} {}",
                phi.vdet(),
                nf.case_name(),
                nf.to_literal()
            ),
            // Dense matrices without an evident stable line are refused.
            Err(e) => println!("{lit:>20}  {e}"),
        }
    }
    Ok(())
}
