mod common;

use common::gradient_errors;
use edbench::models::nn::Modality;

fn check(modality: Modality) {
    let errors = gradient_errors(modality);
    assert_eq!(errors[0].1, 0.0, "masked entry received gradient");
    for (name, err) in &errors[1..] {
        assert!(*err < 1e-3, "{modality:?} {name}: rel error {err}");
    }
}

#[test]
fn waveform_network_gradients() {
    check(Modality::Waveform);
}

#[test]
fn tabular_network_gradients() {
    check(Modality::Tabular);
}

#[test]
fn fusion_network_gradients() {
    check(Modality::Fusion);
}
