//! Mode frequencies of the Be⁺–Mg⁺ pair as a radial field is swept, with
//! modes tracked through crossings by eigenvector overlap.

use ionchain::chain::scan_field;
use ionchain::trap::{be_mg_reference_trap, Axis, IonSpecies};

fn main() -> ionchain::Result<()> {
    let species = [IonSpecies::beryllium9(), IonSpecies::magnesium24()];
    let fields: Vec<f64> = (0..=10).map(|i| -500.0 + 100.0 * i as f64).collect();
    let scan = scan_field(&be_mg_reference_trap(), &species, Axis::Y, &fields)?;
    let tracks: Vec<Vec<f64>> = (0..scan.n_modes()).map(|m| scan.tracked_frequencies_hz(m)).collect();
    print!("{:>8}", "E (V/m)");
    for m in 0..scan.n_modes() {
        print!("  mode {m}");
    }
    println!();
    for (i, e) in scan.field_values.iter().enumerate() {
        print!("{e:8.0}");
        for t in &tracks {
            print!("  {:6.3}", t[i] * 1e-6);
        }
        println!();
    }
    Ok(())
}
