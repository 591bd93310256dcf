//! Repeated quantum-nondemolition readout of a clock ion through a logic
//! ion, with adaptive Bayesian stopping.

use ionchain::qls::{qnd_monte_carlo, DetectionModel, QndConfig};

fn main() -> ionchain::Result<()> {
    let config = QndConfig {
        detection: DetectionModel {
            logic_ion: 1,
            bright_level: 0,
            lambda_bright: 10.0,
            lambda_dark: 0.1,
            window: 2e-4,
        },
        mapping_fidelity: 0.85,
        p_des: 0.9998,
        max_rounds: 60,
        upper_lifetime: Some(21.0),
        round_duration: 0.01,
        model_decay: true,
        nbar_init: 0.0,
    };
    let (summary, records) = qnd_monte_carlo(&config, 10_000, 2024)?;
    println!("trajectories        {}", summary.trajectories);
    println!("single-round error  {:.4}", summary.single_round_error_rate);
    println!("adaptive error      {:.4}", summary.error_rate);
    println!("mean rounds         {:.2}", summary.mean_rounds);
    println!("timeouts            {}", summary.timeouts);
    let r = &records[1];
    println!(
        "trajectory 1: true {}, counts {:?} -> {}",
        r.true_label, r.counts, r.decision
    );
    Ok(())
}
