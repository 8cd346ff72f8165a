//! Scratch probe for training dynamics (not part of the deliverable tests).
use latent_steer::direction::*;
use latent_steer::optim::OptimConfig;
use latent_steer::rng::{stream, Stream};
use latent_steer::toyworld::{SmoothColorfulness, ToyGenerator, ToyGeneratorConfig};

fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    let rank = |v: &[f64]| -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        for (rank, &i) in idx.iter().enumerate() {
            r[i] = rank as f64;
        }
        r
    };
    let rx = rank(xs);
    let ry = rank(ys);
    let n = xs.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx) * (a - mx)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my) * (b - my)).sum();
    cov / (vx.sqrt() * vy.sqrt())
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let iters: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(1000);
    let side: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(64);
    let n_sweep: usize = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(100);

    let generator = ToyGenerator::new(ToyGeneratorConfig { side, ..Default::default() }).unwrap();
    let assessor = SmoothColorfulness::default();
    let config = TrainConfig {
        iterations: iters,
        batch_size: 8,
        optimizer: OptimConfig { lr: 1e-3, ..Default::default() },
        seed: 0,
        ..Default::default()
    };

    let t0 = std::time::Instant::now();
    for kind in [ModelKind::Noise, ModelKind::Fixed] {
        let mut rng = stream(0, Stream::WeightInit);
        let model = DirectionModel::init(kind, 16, 8, None, 256, &mut rng);
        let t1 = std::time::Instant::now();
        let out = train_direction(model, &generator, &assessor, &config).unwrap();
        let train_time = t1.elapsed();
        let samples = SweepSample::sample_set(n_sweep, 16, 8, out.model.eps_dims(), 0);
        let grid = default_alpha_grid();
        let t2 = std::time::Instant::now();
        let report = alpha_sweep(&out.model, &samples, &grid, &generator, &assessor, 0.5, None).unwrap();
        let sweep_time = t2.elapsed();
        let means: Vec<f64> = report.score.iter().map(|s| s.0).collect();
        let rho = spearman(&grid, &means);
        let head: f64 = out.loss_trace[..50].iter().sum::<f64>() / 50.0;
        let k = out.loss_trace.len();
        let tail: f64 = out.loss_trace[k - 50..].iter().sum::<f64>() / 50.0;
        println!("kind={kind:?} iters={iters} side={side}");
        println!("  loss: {head:.5} -> {tail:.5}   train {train_time:?} sweep {sweep_time:?}");
        println!("  curve: {:?}", means.iter().map(|m| (m * 1000.0).round() / 1000.0).collect::<Vec<_>>());
        println!("  spearman={rho:.4} spread={:.4}", report.spread());
    }
    println!("total {:?}", t0.elapsed());
}
