//! Equilibrium and normal modes of a Be⁺–Mg⁺ pair, with and without a
//! 200 V/m radial stray field.

use ionchain::chain::{find_equilibrium, normal_modes};
use ionchain::trap::{be_mg_reference_trap, IonSpecies};

fn main() -> ionchain::Result<()> {
    let species = [IonSpecies::beryllium9(), IonSpecies::magnesium24()];
    for field in [0.0, 200.0] {
        let trap = be_mg_reference_trap().with_uniform_field([0.0, field, 0.0]);
        let config = find_equilibrium(&trap, &species, None)?;
        let modes = normal_modes(&trap, &config)?;
        println!("E_y = {field} V/m");
        for (j, s) in species.iter().enumerate() {
            let r = config.position(j).map(|x| x * 1e6);
            println!("  {:<3} at ({:+.3}, {:+.3}, {:+.3}) µm", s.name, r[0], r[1], r[2]);
        }
        println!(
            "  {:>8}  {:>7} {:>7} {:>7} {:>7} {:>7} {:>7}",
            "f (MHz)", "x1", "y1", "z1", "x2", "y2", "z2"
        );
        for m in (0..modes.n_modes()).rev() {
            let v: Vec<String> = modes.mode_column(m).iter().map(|c| format!("{c:+7.3}")).collect();
            println!("  {:8.3}  {}", modes.frequency_hz(m) * 1e-6, v.join(" "));
        }
    }
    Ok(())
}
