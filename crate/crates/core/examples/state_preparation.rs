//! Logic-assisted state preparation and readout: single-shot readout via
//! the motional bus, a two-ion Dicke state from one shared quantum, and an
//! irreversible optical-pumping ladder.

use ionchain::qls::{
    dicke_mean_fidelity, pumping_ladder_monte_carlo, schmidt_monte_carlo, DetectionModel, DickeConfig, PumpingConfig,
    SchmidtConfig, DEFAULT_N_MAX,
};

fn main() -> ionchain::Result<()> {
    let detection = DetectionModel {
        logic_ion: 1,
        bright_level: 0,
        lambda_bright: 10.0,
        lambda_dark: 0.1,
        window: 2e-4,
    };
    let ideal = schmidt_monte_carlo(&SchmidtConfig::ideal(detection.clone()), 2000, 7)?;
    let realistic = SchmidtConfig {
        nbar_init: 0.05,
        angle_error: 0.05,
        ..SchmidtConfig::ideal(detection)
    };
    let noisy = schmidt_monte_carlo(&realistic, 2000, 7)?;
    println!(
        "readout accuracy: ideal {:.4}, with imperfections {:.4}",
        ideal.accuracy, noisy.accuracy
    );

    let dicke = DickeConfig {
        nbar_init: 0.06,
        intensity_noise: 0.2,
        ..DickeConfig::ideal()
    };
    println!(
        "Dicke fidelity: ideal {:.4}, noisy {:.4}",
        dicke_mean_fidelity(&DickeConfig::ideal(), 200, 11)?,
        dicke_mean_fidelity(&dicke, 2000, 11)?
    );

    let ladder = PumpingConfig {
        steps: 5,
        angle_error: 0.05,
        nbar_cool: 0.02,
        n_max: DEFAULT_N_MAX,
    };
    let pops = pumping_ladder_monte_carlo(&ladder, 2000, 3)?;
    let shown: Vec<String> = pops.iter().map(|p| format!("{p:.3}")).collect();
    println!("pumping ladder populations [m0..m5, aux]: {}", shown.join(" "));
    Ok(())
}
