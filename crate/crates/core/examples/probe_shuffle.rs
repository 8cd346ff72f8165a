//! Scratch probe: shuffled-label control accuracy across shuffle seeds.
use latent_steer::rng::{stream, Stream};
use latent_steer::toyworld::*;
use rand::Rng;

fn main() {
    for n in [160usize, 400] {
        let data = synth_proxy_dataset(n, 2).unwrap();
        let config = ClassifierConfig { epochs: 200, ..Default::default() };
        for seed in 0..12u64 {
            let mut shuffled = data.clone();
            let mut labels: Vec<ProxyLabel> = shuffled.iter().map(|e| e.label).collect();
            let mut rng = stream(seed, Stream::Other(77));
            for i in (1..labels.len()).rev() {
                let j = rng.random_range(0..=i);
                labels.swap(i, j);
            }
            for (e, l) in shuffled.iter_mut().zip(labels) {
                e.label = l;
            }
            let (_, report) = train_assessor_classifier(&shuffled, 2, &config).unwrap();
            print!("n={n} seed={seed}: {:.3}  ", report.val_accuracy);
        }
        println!();
    }
}
