//! Print oracle evaluations (run manually with --nocapture).
mod support;

#[test]
#[ignore]
fn print_dqpsk_oracle_values() {
    for gamma in [0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0] {
        println!("gamma={gamma}: oracle={:.15e}", support::dqpsk_ber_oracle(gamma));
    }
}
