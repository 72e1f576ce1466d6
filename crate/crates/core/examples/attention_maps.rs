//! Runs a checkpoint over the validation split, bins the attention maps by
//! Reynolds number and writes each bin's mean spatial map as a grayscale PNG.
//!
//! `cargo run --release --example attention_maps -- <checkpoint> <manifest> [out_dir]`

use std::path::PathBuf;

use anyhow::Context;
use viscnet::analysis::{
    bin_attention, center_of_mass_radius, dimensionless_numbers, grid_center, radial_attention_profile,
    save_attention_png, GeometrySpec,
};
use viscnet::dataset::{fluid_table, load_manifest, FluidSpec, Split};
use viscnet::model::ViscNet;
use viscnet::train::load_split;

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let checkpoint = PathBuf::from(args.next().context("checkpoint path")?);
    let manifest_path = PathBuf::from(args.next().context("manifest path")?);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "target/attention_maps".into()));
    std::fs::create_dir_all(&out)?;

    let (model, _) = ViscNet::load(&checkpoint)?;
    let manifest = load_manifest(&manifest_path)?;
    let clips = load_split(&manifest_path, &manifest, Split::Val)?;
    let table = fluid_table();
    let mut records = Vec::new();
    let mut re = Vec::new();
    for c in &clips {
        records.push(model.forward(c.frames.view(), c.omega_rpm)?.attention);
        let fluid = FluidSpec {
            kinematic_viscosity: c.nu,
            ..table[usize::from(c.class_id)]
        };
        re.push(dimensionless_numbers(&fluid, c.omega_rpm, &GeometrySpec::default())?.re);
    }

    for (i, bin) in bin_attention(&records, &re, 5)?.iter().enumerate() {
        let Some(mean) = &bin.mean else {
            println!("bin {i}: empty");
            continue;
        };
        let com = center_of_mass_radius(&radial_attention_profile(mean, grid_center(mean)));
        let path = out.join(format!("re_bin{i}.png"));
        save_attention_png(&mean.spatial, 16, &path)?;
        println!(
            "bin {i}: Re in [{:.3e}, {:.3e}], {} clips, centre-of-mass radius {com:.3}, {}",
            bin.lower,
            bin.upper,
            bin.count,
            path.display()
        );
    }
    Ok(())
}
