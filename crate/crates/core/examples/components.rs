//! Labels by s-rank, the ordinary components and the pieces of X0.
//!
//! `cargo run --example components`

use kisinlab::field::{units, FieldCtx};
use kisinlab::kisin::{
    check_decomposition, components, connectivity_certificate, enumerate_admissible, predict_components,
    predict_x0_decomposition,
};
use kisinlab::latmod::Lattice;
use kisinlab::phimod::{NormalForm, VParams};

fn main() -> kisinlab::Result<()> {
    let ctx = FieldCtx::new(3, 1)?;
    let us = units(&ctx);
    let nf = NormalForm::split(&us[0], 1, &us[0], 1)?;
    let v = VParams::new(5, 4, 0)?;
    let set = enumerate_admissible(&nf, &v)?;
    let rep = components(&set)?;
    println!("{}, {} admissible lattices", nf.to_literal(), set.len());
    for (l, lab) in &rep.labels {
        println!("  {l}  {lab}");
    }

    let pred = predict_components(&nf, &v)?;
    for c in &pred {
        println!("X[{}] predicted {:?} with {} points", c.label, c.shape, c.count());
    }

    let dec = predict_x0_decomposition(&nf, &v)?;
    for b in &dec.balls {
        println!(
            "{}: radius {} around {}{}",
            b.name,
            b.radius,
            b.center,
            if b.flagged { "" } else { " (omitted)" }
        );
    }
    let ordinary: Vec<Lattice> = pred.iter().flat_map(|c| c.points.iter().cloned()).collect();
    let chk = check_decomposition(&dec, &rep.x0, &ordinary, ctx.size() as u64)?;
    println!("X0 has {} points; union of balls matches: {}", rep.x0.len(), chk.ok());
    if !rep.x0.is_empty() {
        println!("X0 connected: {}", connectivity_certificate(&rep.x0)?.connected);
    }
    Ok(())
}
