//! Scratch probe: per-class feature statistics of the proxy dataset.
use latent_steer::metrics::compute_all;
use latent_steer::toyworld::{synth_proxy_dataset, ProxySource};

fn main() {
    let data = synth_proxy_dataset(400, 0).unwrap();
    for source in [ProxySource::HighAncestor, ProxySource::ZeroAncestor, ProxySource::RawGenerator] {
        let vals: Vec<_> = data.iter().filter(|e| e.source == source).collect();
        let mut sums = vec![0.0; 7];
        for e in &vals {
            let m = compute_all(&e.image, 0.5);
            for (s, v) in sums.iter_mut().zip([
                m.redness, m.colorfulness, m.brightness, m.simplicity,
                m.object_size, m.centeredness.unwrap_or(0.0), m.squareness.unwrap_or(0.0),
            ]) {
                *s += v;
            }
        }
        let n = vals.len() as f64;
        println!(
            "{source:?}: red={:.3} color={:.1} bright={:.3} simp={:.3} objsz={:.3} cent={:.3} sq={:.3}",
            sums[0]/n, sums[1]/n, sums[2]/n, sums[3]/n, sums[4]/n, sums[5]/n, sums[6]/n
        );
    }
}
