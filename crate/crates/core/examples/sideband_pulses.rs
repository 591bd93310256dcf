//! Transfers an Al⁺ clock excitation onto a Be⁺ logic ion through the
//! shared motional mode (red sideband π on each ion), then displaces the
//! motion coherently.

use std::f64::consts::PI;

use ionchain::qls::{apply_pulse, required_n_max, InternalLevelSet, JointState, Pulse, PulseTarget};
use num_complex::Complex64;

fn show(label: &str, s: &JointState) {
    let fock: Vec<String> = s.fock_populations().iter().map(|p| format!("{p:.3}")).collect();
    println!(
        "{label:<22} Al {:?}  Be {:?}  n {}",
        s.level_populations(0)
            .iter()
            .map(|p| (p * 1e3).round() / 1e3)
            .collect::<Vec<_>>(),
        s.level_populations(1)
            .iter()
            .map(|p| (p * 1e3).round() / 1e3)
            .collect::<Vec<_>>(),
        fock.join(" ")
    );
}

fn main() -> ionchain::Result<()> {
    let ions = vec![
        InternalLevelSet::new("Al", &["S", "P"]),
        InternalLevelSet::new("Be", &["down", "up"]),
    ];
    let mut s = JointState::basis(ions.clone(), 4, Some(&[1, 0]), 0)?;
    show("Al excited, n = 0", &s);
    // |P,0⟩ → |S,1⟩ on Al, then |down,1⟩ → |up,0⟩ on Be
    apply_pulse(&mut s, &Pulse::red(vec![PulseTarget::new(0, 0, 1)], PI))?;
    show("after Al red π", &s);
    apply_pulse(&mut s, &Pulse::red(vec![PulseTarget::new(1, 0, 1)], PI))?;
    show("after Be red π", &s);

    let alpha = Complex64::new(0.8, 0.3);
    let n_max = required_n_max(alpha);
    let mut d = JointState::ground(ions, n_max)?;
    apply_pulse(&mut d, &Pulse::displacement(alpha))?;
    println!(
        "displacement α = {alpha}, n_max {n_max}: ⟨n⟩ = {:.4} (|α|² = {:.4})",
        d.mean_occupation(),
        alpha.norm_sqr()
    );
    Ok(())
}
