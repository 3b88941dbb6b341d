//! How Φ moves points of the Bruhat-Tits tree.
//!
//! The relative position of `L` and `⟨Φ(L)⟩` is a function of the distance from
//! `L` to the fixed point of Φ. This example prints both sides along a line.

use kisinlab::building::{lattice_to_point, tree_d1};
use kisinlab::field::{FieldCtx, FieldElem};
use kisinlab::kisin::{check_distance_identities, phi_divisors_nf, DistancePredictor};
use kisinlab::latmod::Lattice;
use kisinlab::phimod::NormalForm;
use kisinlab::series::TruncatedSeries;

fn main() -> kisinlab::Result<()> {
    let ctx = FieldCtx::new(5, 1)?;
    let one = FieldElem::one(&ctx);
    let nf = NormalForm::split(&one, 1, &FieldElem::from_int(&ctx, 2), 3)?;
    let fixed = nf.fixed_point();
    println!("{}: fixed point {fixed}", nf.to_literal());
    let pred = DistancePredictor::new(&nf);
    for m in -2..=4 {
        let l = Lattice::new(m, 1 - m, &TruncatedSeries::zero(&ctx))?;
        let d = phi_divisors_nf(&nf, &l)?;
        println!(
            "  {l}: dist {} a-b = {} predicted {}",
            tree_d1(&lattice_to_point(&l), &fixed),
            d.d1(),
            pred.d1(&l)
        );
    }
    let rep = check_distance_identities(&nf, 4, 1)?;
    println!(
        "ball of radius 4: {} lattices, identities hold: {}",
        rep.checked,
        rep.ok()
    );
    Ok(())
}
