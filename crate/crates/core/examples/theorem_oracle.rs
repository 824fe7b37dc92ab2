//! The projector construction and its nuclear-norm bound, on a matrix whose
//! spectrum decays fast enough for the conditioning event to hold.

use indef_nystrom::data::{synth_matrix, EigvecSpec, SpectrumSpec};
use indef_nystrom::theory::{
    conditional_study, epsilon_r_a, lemma_expectation_check, mixed_norm_bounds, omega_f_probability_lower_bound,
    theorem_trial, TheoremParams,
};

fn main() -> indef_nystrom::Result<()> {
    let a = synth_matrix(&SpectrumSpec::geometric(400, 1.0, 1e-30), &EigvecSpec::Haar, 9)?;
    let p = TheoremParams::new(10, 1.5, 2.5, 3)?;

    let art = theorem_trial(&a, &p)?;
    let e = art.errors.expect("evaluated");
    println!("b = {}, eps_rA = {:.4}", art.b, art.eps_ra);
    println!(
        "one trial: omega_F {} omega_2 {}  |S B|_F^2 = {:.3e}  error {:.4e}  bound {:.4e}  best {:.4e}",
        art.omega_f, art.omega_2, art.sb_frob_sq, e.nuclear, art.bound_nuclear, art.best_r_nuclear
    );

    let s = conditional_study(&a, &p, 100, 300)?;
    println!(
        "{} of {} trials in omega_F: mean error {:.4e} <= bound {:.4e}",
        s.kept, s.trials_run, s.mean_err_nuclear, s.bound_nuclear
    );
    let (b2, bf) = mixed_norm_bounds(&a, &p)?;
    println!(
        "spectral {:.4e} <= {b2:.4e}, Frobenius {:.4e} <= {bf:.4e}",
        s.mean_err_spectral, s.mean_err_frobenius
    );
    let (lb, holds) = omega_f_probability_lower_bound(&a, &p, 2.0, 4.0)?;
    println!("P(omega_F) >= {lb:.4} (condition holds: {holds}), eps via closed form {:.4}", epsilon_r_a(&a, &p)?);

    let (emp, pred) = lemma_expectation_check(&vec![1.0; 385], &p, 500)?;
    println!("E|SB|_F^2: empirical {emp:.3} vs b|S|_F^2 = {pred:.3}");
    Ok(())
}
