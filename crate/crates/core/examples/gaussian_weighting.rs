//! Soft weights for self-training: confident nodes get full weight, the rest
//! decay with a Gaussian tracked by moving averages.

use gttt::ttt::{gaussian_weight, update_weight_state, GaussianWeightState};

pub fn run_example() -> gttt::Result<()> {
    let mut st = GaussianWeightState::new(4, 0.5, 1.0)?;
    let batches = [
        vec![0.30, 0.45, 0.52, 0.61, 0.70],
        vec![0.50, 0.66, 0.72, 0.80, 0.91],
        vec![0.70, 0.82, 0.88, 0.93, 0.97],
    ];
    for (epoch, batch) in batches.iter().enumerate() {
        st = update_weight_state(&st, batch)?;
        let w: Vec<String> = [0.1, 0.25, 0.4, 0.6]
            .iter()
            .map(|&p| format!("{p}:{:.3}", gaussian_weight(p, &st)))
            .collect();
        println!("epoch {epoch}: mu {:.4} sigma2 {:.4}  weights {}", st.mu, st.sigma2, w.join(" "));
    }
    Ok(())
}

fn main() -> gttt::Result<()> {
    run_example()
}
