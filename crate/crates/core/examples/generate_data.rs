//! Regenerate the simulated datasets under `data/`.
//!
//! cargo run -p superchain --example generate_data

use std::fs;
use std::path::Path;

use superchain::targets::data::{
    german_credit_synthetic, irt_sim_csv, pk_sim_csv, GERMAN_SEED, IRT_SEED, PK_SEED,
};

fn main() -> std::io::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    fs::create_dir_all(&dir)?;
    fs::write(dir.join("pk_sim.csv"), pk_sim_csv(PK_SEED))?;
    fs::write(dir.join("irt_sim.csv"), irt_sim_csv(IRT_SEED))?;
    fs::write(
        dir.join("german_credit_synthetic.data-numeric"),
        german_credit_synthetic(GERMAN_SEED),
    )?;
    println!("wrote datasets to {}", dir.display());
    Ok(())
}
