//! Rewrites the bundled field maps in `data/fieldmaps`.
//!
//! Run with `cargo run -p surfloss-core --example regenerate_fieldmaps`.

use std::path::PathBuf;

use surfloss::fields::export_field_map;
use surfloss::geometry::{builtin_designs, reference_dataset};
use surfloss::participation::{invert_reference_map, reference_scaling_factors};

fn main() -> surfloss::Result<()> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/fieldmaps");
    let ds = reference_dataset();
    for d in builtin_designs() {
        let index = ds.design_index(&d.design_label).expect("bundled design");
        let factors = reference_scaling_factors(&d.design_label).expect("bundled design");
        let map = invert_reference_map(&d, index, &factors)?;
        let path = dir.join(format!("{}.csv", d.design_label));
        export_field_map(&map, &path)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
