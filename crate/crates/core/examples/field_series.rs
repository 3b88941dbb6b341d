//! Finite field and Laurent series arithmetic.
//!
//! `cargo run --example field_series`

use kisinlab::field::{enumerate, FieldCtx, FieldElem};
use kisinlab::series::TruncatedSeries;

fn main() -> kisinlab::Result<()> {
    let f9 = FieldCtx::new(3, 2)?;
    println!("F_9 modulus: {:?}", f9.modulus());
    let g = FieldElem::gen(&f9);
    // The modulus is the least irreducible one, not necessarily primitive.
    let order = (1..9).find(|&e| g.pow(e).map(|x| x.is_one()).unwrap_or(false)).unwrap();
    println!("g has multiplicative order {order}");
    let nonzero = enumerate(&f9).into_iter().filter(|x| !x.is_zero()).count();
    println!("{nonzero} units, Frobenius of g is {}", g.frobenius());

    let x = TruncatedSeries::parse(&f9, "1 + g*u + u^3")?;
    let y = x.inv()?.truncate(8);
    println!("({x})^-1 = {y}");
    println!("check: {}", x.mul(&y).truncate(8));
    // φ is u -> u^3 and leaves coefficients alone.
    println!("phi({x}) = {}", x.phi());
    Ok(())
}
