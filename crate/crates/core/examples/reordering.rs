//! Ion-order control: a symmetric four-ion ramp that sorts Be⁺Be⁺Mg⁺Mg⁺
//! into Be–Mg–Mg–Be from every start, and the field-plus-twist sequence
//! that swaps a two-ion pair.

use ionchain::reorder::{
    critical_radial_field, ramp_all_orders, run_asymmetric_reorder, symmetric_reorder_schedule, DEFAULT_RAMP_STEPS,
};
use ionchain::trap::{be_mg_reference_trap, Axis, IonSpecies};

fn main() -> ionchain::Result<()> {
    let (be, mg) = (IonSpecies::beryllium9(), IonSpecies::magnesium24());
    let schedule = symmetric_reorder_schedule(&be, DEFAULT_RAMP_STEPS)?;
    for (start, run) in ramp_all_orders(&schedule, &[be.clone(), be.clone(), mg.clone(), mg.clone()])? {
        let end = run.final_class.order_string().unwrap_or_else(|| "off-axis".into());
        println!("{:<12} -> {end}", start.join(","));
    }

    let trap = be_mg_reference_trap();
    let pair = [be, mg];
    println!(
        "radial alignment needs {:.0} V/m along y",
        critical_radial_field(&trap, &pair, Axis::Y)?
    );
    for twist in [2e7, -2e7] {
        let r = run_asymmetric_reorder(&trap, &pair, 1200.0, twist, None, DEFAULT_RAMP_STEPS)?;
        println!(
            "twist {twist:+.0e} V/m²: {} -> {}",
            r.initial_order.join(","),
            r.final_order.join(",")
        );
    }
    Ok(())
}
