//! Drawing the admissible set inside the tree, as text or Graphviz.
//!
//! `cargo run --example render -- dot > tree.dot`

use kisinlab::cli::render_building;
use kisinlab::field::{FieldCtx, FieldElem};
use kisinlab::kisin::enumerate_admissible;
use kisinlab::phimod::{NormalForm, VParams};

fn main() -> kisinlab::Result<()> {
    let dot = std::env::args().nth(1).as_deref() == Some("dot");
    let ctx = FieldCtx::new(2, 1)?;
    let nf = NormalForm::simple(&FieldElem::one(&ctx), 1)?;
    let set = enumerate_admissible(&nf, &VParams::new(3, 3, 0)?)?;
    print!("{}", render_building(&set, 3, dot)?);
    Ok(())
}
