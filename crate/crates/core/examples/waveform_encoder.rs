//! A synthetic 12-lead recording taken through decimation, per-lead scaling
//! and the state-space encoder to a fixed-size embedding.

use edbench::models::nn::{DeepNet, Modality, NetInput, NetworkShape};
use edbench::models::preprocess::{decimate, LeadStats};
use edbench::synthgen::{generate_waveform, BaseRhythm, PlantedComponent};

fn main() -> edbench::Result<()> {
    let planted = [PlantedComponent {
        frequency: 6.5,
        amplitude: 0.3,
    }];
    let raw = generate_waveform(&BaseRhythm::new(72.0), &planted, 0.1, 100.0, 11);
    let mut x = decimate(raw.view(), 100.0, 25.0)?;
    println!("raw {:?} -> decimated {:?}", raw.dim(), x.dim());

    let stats = LeadStats::fit([x.view()])?;
    stats.apply(&mut x)?;

    let shape = NetworkShape {
        modality: Modality::Waveform,
        leads: 12,
        d_model: 32,
        d_state: 8,
        n_blocks: 2,
        numeric_dim: 0,
        cardinalities: [3, 6, 6],
        embed_dim: 8,
        mlp_layers: 3,
        n_labels: 4,
    };
    let net = DeepNet::new(shape);
    let params = net.init(0);
    println!("{} parameters", net.num_params());

    let encoder = net.wave_encoder().expect("waveform model");
    let (emb, _) = encoder.forward(&params, x.view())?;
    println!("embedding width {}, first values {:.3?}", emb.len(), &emb.as_slice().unwrap()[..4]);

    let input = NetInput {
        waveform: Some(x.view()),
        tabular: None,
    };
    let (logits, _) = net.forward(&params, input)?;
    println!("untrained logits {logits:.3?}");
    Ok(())
}
