//! Reynolds, capillary and Weber numbers and neighbour proximity for the
//! reference fluids.
//!
//! `cargo run --example dimensionless`

use viscnet::analysis::{dimensionless_numbers, proximity, GeometrySpec};
use viscnet::dataset::fluid_table;

fn main() -> anyhow::Result<()> {
    let table = fluid_table();
    let geom = GeometrySpec::default();
    let d = proximity(&table.iter().map(|f| f.kinematic_viscosity).collect::<Vec<_>>())?;
    println!("class  nu (m^2/s)   D (m^2/s)    Re@270     Re@450     Ca@450     We@450");
    for (f, d) in table.iter().zip(&d) {
        let lo = dimensionless_numbers(f, 270.0, &geom)?;
        let hi = dimensionless_numbers(f, 450.0, &geom)?;
        println!(
            "{:>5}  {:.4e}  {:.4e}  {:.3e}  {:.3e}  {:.3e}  {:.3e}",
            f.class_id, f.kinematic_viscosity, d, lo.re, hi.re, hi.ca, hi.we
        );
    }
    Ok(())
}
