//! Mode dispatch and artifact emission.

use std::path::{Path, PathBuf};

use super::config::{Mode, RunConfig};
use super::manifest::{ingest_manifest, write_manifest, ManifestRecord, RecordLabel};
use super::PipelineError;
use crate::autodiff::{gradient_check, Tensor};
use crate::direction::{
    alpha_sweep, default_alpha_grid, load_model, save_model, train_direction, Assessor,
    DirectionModel, DirectionNet, Generator, Sample, SweepReport, SweepSample, TrainConfig,
};
use crate::explorer::{embedding_report, pca_fit_transform, tsne_embed, EmbeddingConfig};
use crate::metrics::{compute_all, load_image, save_png, MetricValues, METRIC_NAMES};
use crate::numfmt::f64_17;
use crate::rng::{normal_vec, stable_hash, stream, Stream};
use crate::svg::{line_chart, Series};
use crate::toyworld::{
    save_classifier, synth_proxy_dataset_sized, train_assessor_classifier, load_classifier,
    ProxyExample, ProxyLabel, ProxySource, SmoothColorfulness, BrightnessAssessor, ToyGenerator,
};

/// Paths produced by a successful run.
#[derive(Clone, Debug, Default)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub outputs: Vec<PathBuf>,
}

/// Exclusive ownership of an output directory for the duration of a run.
struct DirLock {
    path: PathBuf,
}

impl DirLock {
    fn acquire(dir: &Path) -> Result<DirLock, PipelineError> {
        let path = dir.join(".lock");
        match std::fs::OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(DirLock { path }),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                Err(PipelineError::LockHeld(path))
            }
            Err(e) => Err(e.into()),
        }
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.path);
    }
}

/// Tracks written outputs; on failure they are renamed to `<name>.partial`.
struct Stage {
    files: Vec<PathBuf>,
}

impl Stage {
    fn new() -> Stage {
        Stage { files: Vec::new() }
    }

    fn record(&mut self, path: PathBuf) -> PathBuf {
        self.files.push(path.clone());
        path
    }

    fn write(&mut self, path: PathBuf, contents: &str) -> Result<PathBuf, PipelineError> {
        std::fs::write(&path, contents)?;
        Ok(self.record(path))
    }

    fn abandon(&self) {
        for file in &self.files {
            if file.exists() {
                let mut os = file.as_os_str().to_os_string();
                os.push(".partial");
                let _ = std::fs::rename(file, PathBuf::from(os));
            }
        }
    }
}

/// Builds the assessor named by a config id: `smooth_colorfulness`,
/// `brightness`, or `classifier:<path>`.
pub fn assessor_by_id(id: &str) -> Result<Box<dyn Assessor>, PipelineError> {
    if let Some(path) = id.strip_prefix("classifier:") {
        let classifier = load_classifier(Path::new(path))?;
        return Ok(Box::new(classifier));
    }
    match id {
        "smooth_colorfulness" => Ok(Box::new(SmoothColorfulness::default())),
        "brightness" => Ok(Box::new(BrightnessAssessor)),
        other => Err(PipelineError::Config(format!("unknown assessor id '{other}'"))),
    }
}

/// Runs one mode end to end. Artifacts land in `config.out_dir`; the resolved
/// config is frozen into `config.json` beside them.
pub fn run(config: &RunConfig) -> Result<RunOutcome, PipelineError> {
    let out_dir = config
        .out_dir
        .clone()
        .ok_or_else(|| PipelineError::MissingInput("output directory (--out)".into()))?;
    std::fs::create_dir_all(&out_dir)?;
    let _lock = DirLock::acquire(&out_dir)?;

    let mut stage = Stage::new();
    let result = dispatch(config, &out_dir, &mut stage);
    match result {
        Ok(()) => Ok(RunOutcome { out_dir, outputs: stage.files }),
        Err(e) => {
            stage.abandon();
            Err(e)
        }
    }
}

fn dispatch(config: &RunConfig, out: &Path, stage: &mut Stage) -> Result<(), PipelineError> {
    stage.write(out.join("config.json"), &config.sidecar_json())?;
    match config.mode {
        Mode::Train => run_train(config, out, stage),
        Mode::Sweep => run_sweep(config, out, stage),
        Mode::Metrics => run_metrics(config, out, stage),
        Mode::Embed => run_embed(config, out, stage),
        Mode::Assessor => run_assessor(config, out, stage),
        Mode::Synth => run_synth(config, out, stage),
        Mode::Gradcheck => run_gradcheck(config, out, stage),
    }
}

fn build_generator(config: &RunConfig) -> Result<ToyGenerator, PipelineError> {
    Ok(ToyGenerator::new(config.generator.clone())?)
}

fn train_config(config: &RunConfig, out: &Path) -> TrainConfig {
    TrainConfig {
        iterations: config.training.iterations,
        batch_size: config.training.batch_size,
        alpha_low: config.training.alpha_low,
        alpha_high: config.training.alpha_high,
        clamp_targets: config.training.clamp_targets,
        normalize_direction: config.training.normalize_direction,
        optimizer: config.optimizer.clone(),
        seed: config.seed,
        checkpoint_dir: Some(out.to_path_buf()),
    }
}

fn loss_trace_csv(trace: &[f64]) -> String {
    let mut csv = String::from("iteration,loss\n");
    for (i, loss) in trace.iter().enumerate() {
        csv.push_str(&format!("{i},{}\n", f64_17(*loss)));
    }
    csv
}

fn run_train(config: &RunConfig, out: &Path, stage: &mut Stage) -> Result<(), PipelineError> {
    let generator = build_generator(config)?;
    let assessor = assessor_by_id(&config.assessor)?;
    let mut rng = stream(config.seed, Stream::WeightInit);
    let model = DirectionModel::init(
        config.model.kind,
        generator.latent_dim(),
        generator.n_classes(),
        config.model.noise_dim,
        config.model.hidden_dim,
        &mut rng,
    );
    let outcome = train_direction(model, &generator, assessor.as_ref(), &train_config(config, out))?;

    let model_path = out.join("model.lsdm");
    let sidecar = serde_json::json!({
        "seed": config.seed,
        "config": serde_json::to_value(config).expect("config serializes"),
    });
    save_model(&model_path, &outcome.model, &sidecar)?;
    stage.record(model_path.clone());
    stage.record(crate::direction::model_sidecar_path(&model_path));

    stage.write(out.join("loss_trace.csv"), &loss_trace_csv(&outcome.loss_trace))?;

    // Coarse loss curve (mean per 1% bucket) for a readable plot.
    let bucket = (outcome.loss_trace.len() / 100).max(1);
    let xs: Vec<f64> = (0..outcome.loss_trace.len())
        .step_by(bucket)
        .map(|i| i as f64)
        .collect();
    let values: Vec<Option<f64>> = outcome
        .loss_trace
        .chunks(bucket)
        .map(|chunk| Some(chunk.iter().sum::<f64>() / chunk.len() as f64))
        .collect();
    let svg = line_chart(
        "training loss",
        "iteration",
        "batch loss",
        &xs,
        &[Series { name: "loss", values }],
    );
    stage.write(out.join("loss.svg"), &svg)?;
    Ok(())
}

fn sweep_grid(config: &RunConfig) -> Vec<f64> {
    config.sweep.alpha_grid.clone().unwrap_or_else(default_alpha_grid)
}

fn write_sweep_artifacts(
    report: &SweepReport,
    out: &Path,
    stage: &mut Stage,
) -> Result<(), PipelineError> {
    stage.write(out.join("sweep.csv"), &report.to_csv())?;

    // One panel per curve: assessor score plus each image metric.
    let score_series = Series {
        name: "score",
        values: report.score.iter().map(|s| Some(s.0)).collect(),
    };
    let svg = line_chart("assessor score", "alpha", "mean", &report.alpha_grid, &[score_series]);
    stage.write(out.join("score.svg"), &svg)?;
    for name in METRIC_NAMES {
        let values: Vec<Option<f64>> = report
            .alpha_grid
            .iter()
            .map(|alpha| report.metrics.row(*alpha, name).and_then(|r| r.mean))
            .collect();
        let svg = line_chart(name, "alpha", "mean", &report.alpha_grid, &[Series { name, values }]);
        stage.write(out.join(format!("{name}.svg")), &svg)?;
    }
    for (_, paths) in &report.sample_images {
        for p in paths {
            stage.record(p.clone());
        }
    }
    Ok(())
}

fn run_sweep(config: &RunConfig, out: &Path, stage: &mut Stage) -> Result<(), PipelineError> {
    let model_path = config
        .model
        .path
        .clone()
        .ok_or_else(|| PipelineError::MissingInput("model.path for sweep mode".into()))?;
    let model = load_model(&model_path)?;
    let generator = build_generator(config)?;
    let assessor = assessor_by_id(&config.assessor)?;
    let samples = SweepSample::sample_set(
        config.sweep.num_samples,
        generator.latent_dim(),
        generator.n_classes(),
        model.eps_dims(),
        config.seed,
    );
    let sample_dir = out.join("samples");
    let save = if config.sweep.save_samples > 0 {
        Some((sample_dir.as_path(), config.sweep.save_samples))
    } else {
        None
    };
    let report = alpha_sweep(
        &model,
        &samples,
        &sweep_grid(config),
        &generator,
        assessor.as_ref(),
        config.sweep.segment_threshold,
        save,
    )?;
    write_sweep_artifacts(&report, out, stage)
}

fn metric_values_row(id: &str, values: &MetricValues) -> String {
    let field = |v: Option<f64>| v.map(f64_17).unwrap_or_default();
    format!(
        "{id},{},{},{},{},{},{},{},{},{}\n",
        f64_17(values.redness),
        f64_17(values.colorfulness),
        f64_17(values.brightness),
        f64_17(values.entropy_bits),
        f64_17(values.simplicity),
        f64_17(values.object_size),
        field(values.centeredness),
        field(values.squareness),
        values.squareness_degenerate,
    )
}

fn run_metrics(config: &RunConfig, out: &Path, stage: &mut Stage) -> Result<(), PipelineError> {
    let manifest = config
        .manifest
        .clone()
        .ok_or_else(|| PipelineError::MissingInput("manifest for metrics mode".into()))?;
    let ingest = ingest_manifest(&manifest, config.strict)?;

    let mut per_image = String::from(
        "image_id,redness,colorfulness,brightness,entropy_bits,simplicity,object_size,\
         centeredness,squareness,squareness_degenerate\n",
    );
    let mut all = Vec::new();
    for record in ingest.records.iter().filter(|r| r.path_exists) {
        let image = load_image(&record.resolved_path)?;
        let values = compute_all(&image, config.sweep.segment_threshold);
        per_image.push_str(&metric_values_row(&record.record.image_id, &values));
        all.push(values);
    }
    if all.is_empty() {
        return Err(PipelineError::MissingInput("no readable images in manifest".into()));
    }
    stage.write(out.join("per_image_metrics.csv"), &per_image)?;
    let report = crate::metrics::metric_report(&[(0.0, all)])?;
    stage.write(out.join("metrics.csv"), &report.to_csv())?;
    if !ingest.warnings.is_empty() {
        let mut w = String::from("line,warning\n");
        for (line, message) in &ingest.warnings {
            w.push_str(&format!("{line},{}\n", message.replace(',', ";")));
        }
        stage.write(out.join("warnings.csv"), &w)?;
    }
    Ok(())
}

/// Latent rows for embedding: (image id, user id, vector).
type LatentRows = Vec<(String, String, Vec<f64>)>;

fn load_latents_csv(path: &Path) -> Result<LatentRows, PipelineError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| PipelineError::MissingInput(format!("latents {}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if idx == 0 || line.trim().is_empty() {
            continue; // header
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 3 {
            return Err(PipelineError::Parse(format!("latents row {} too short", idx + 1)));
        }
        let values: Result<Vec<f64>, _> = fields[2..].iter().map(|f| f.parse::<f64>()).collect();
        let values =
            values.map_err(|e| PipelineError::Parse(format!("latents row {}: {e}", idx + 1)))?;
        rows.push((fields[0].to_string(), fields[1].to_string(), values));
    }
    Ok(rows)
}

fn load_latents_from_manifest(path: &Path, strict: bool) -> Result<LatentRows, PipelineError> {
    let ingest = ingest_manifest(path, strict)?;
    let mut rows = Vec::new();
    for record in &ingest.records {
        let Some(latent_path) = &record.resolved_latent else { continue };
        let text = std::fs::read_to_string(latent_path).map_err(|e| {
            PipelineError::MissingInput(format!("latent {}: {e}", latent_path.display()))
        })?;
        let values: Result<Vec<f64>, _> =
            text.trim().split(',').map(|f| f.trim().parse::<f64>()).collect();
        let values = values
            .map_err(|e| PipelineError::Parse(format!("latent {}: {e}", latent_path.display())))?;
        rows.push((record.record.image_id.clone(), record.record.user_id.clone(), values));
    }
    if rows.is_empty() {
        return Err(PipelineError::MissingInput("manifest has no latent vectors".into()));
    }
    Ok(rows)
}

/// Synthetic user sizes for self-contained demo data: some inside the
/// default [50, 100] report window, some outside.
const DEMO_USER_SIZES: [usize; 5] = [60, 75, 90, 45, 110];

fn demo_user_assignment(n: usize) -> Vec<String> {
    let mut users = Vec::with_capacity(n);
    let mut user = 0usize;
    let mut left = DEMO_USER_SIZES[0];
    for _ in 0..n {
        if left == 0 {
            user += 1;
            left = DEMO_USER_SIZES[user % DEMO_USER_SIZES.len()];
        }
        users.push(format!("user_{user:02}"));
        left -= 1;
    }
    users
}

fn generate_latents(config: &RunConfig) -> Result<LatentRows, PipelineError> {
    let generator = build_generator(config)?;
    let n = config.embedding.generate_n;
    let users = demo_user_assignment(n);
    let mut rng = stream(config.seed, Stream::SweepSamples);
    Ok((0..n)
        .map(|i| {
            let z = normal_vec(&mut rng, generator.latent_dim());
            (format!("gen_{i:05}"), users[i].clone(), z)
        })
        .collect())
}

fn run_embed(config: &RunConfig, out: &Path, stage: &mut Stage) -> Result<(), PipelineError> {
    let rows = if let Some(csv) = &config.embedding.latents_csv {
        load_latents_csv(csv)?
    } else if let Some(manifest) = &config.manifest {
        load_latents_from_manifest(manifest, config.strict)?
    } else {
        generate_latents(config)?
    };
    let dim = rows.first().map(|r| r.2.len()).unwrap_or(0);
    if rows.iter().any(|r| r.2.len() != dim) {
        return Err(PipelineError::Parse("latent vectors have inconsistent dimensions".into()));
    }

    let vectors: Vec<Vec<f64>> = rows.iter().map(|r| r.2.clone()).collect();
    let n = vectors.len();
    let mut tsne_config: EmbeddingConfig = config.embedding.tsne.clone();
    tsne_config.seed = config.seed;

    // PCA first when it actually reduces.
    let k = tsne_config.pca_dims.min(dim).min(n.saturating_sub(1));
    let reduced = if k >= 1 && k < dim {
        pca_fit_transform(&vectors, k)?.projected
    } else {
        vectors
    };

    let keys: Vec<u64> = rows.iter().map(|r| stable_hash(&r.0)).collect();
    let result = tsne_embed(&reduced, &tsne_config, Some(&keys))?;

    let mut kl = String::from("iteration,kl\n");
    for (i, v) in result.kl_trace.iter().enumerate() {
        kl.push_str(&format!("{i},{}\n", f64_17(*v)));
    }
    stage.write(out.join("kl_trace.csv"), &kl)?;

    let users: Vec<String> = rows.iter().map(|r| r.1.clone()).collect();
    let ids: Vec<String> = rows.iter().map(|r| r.0.clone()).collect();
    let report = embedding_report(
        &result.embedding,
        &users,
        &ids,
        config.embedding.min_images_per_user,
        config.embedding.max_images_per_user,
    )?;
    stage.write(out.join("embedding.csv"), &report.to_csv())?;
    stage.write(out.join("embedding.svg"), &report.to_svg())?;
    Ok(())
}

fn run_assessor(config: &RunConfig, out: &Path, stage: &mut Stage) -> Result<(), PipelineError> {
    let dataset: Vec<ProxyExample> = if let Some(manifest) = &config.manifest {
        let ingest = ingest_manifest(manifest, config.strict)?;
        let mut data = Vec::new();
        for record in ingest.records.iter().filter(|r| r.path_exists) {
            // Records between the thresholds stay out of classifier training.
            let label = match record.label {
                RecordLabel::Creative => ProxyLabel::Creative,
                RecordLabel::NonCreative => ProxyLabel::NonCreative,
                RecordLabel::Unlabeled => continue,
            };
            let source = if record.record.ancestor_count > 0 {
                ProxySource::HighAncestor
            } else {
                ProxySource::ZeroAncestor
            };
            data.push(ProxyExample {
                image: load_image(&record.resolved_path)?,
                ancestor_count: record.record.ancestor_count,
                label,
                source,
                latent: Vec::new(),
            });
        }
        data
    } else {
        synth_proxy_dataset_sized(config.dataset.n, config.seed, config.dataset.image_side)?
    };

    let mut train = config.classifier.train.clone();
    train.seed = config.seed;
    let (classifier, report) =
        train_assessor_classifier(&dataset, config.classifier.split_seed, &train)?;

    let path = out.join("classifier.json");
    save_classifier(&path, &classifier)?;
    stage.record(path);
    let report_json =
        serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    stage.write(out.join("accuracy.json"), &report_json)?;
    Ok(())
}

fn run_synth(config: &RunConfig, out: &Path, stage: &mut Stage) -> Result<(), PipelineError> {
    let data = synth_proxy_dataset_sized(config.dataset.n, config.seed, config.dataset.image_side)?;
    let images_dir = out.join("images");
    let latents_dir = out.join("latents");
    std::fs::create_dir_all(&images_dir)?;
    std::fs::create_dir_all(&latents_dir)?;

    let users = demo_user_assignment(data.len());
    let mut records = Vec::with_capacity(data.len());
    for (i, example) in data.iter().enumerate() {
        let id = format!("img_{i:05}");
        let image_rel = format!("images/{id}.png");
        let latent_rel = format!("latents/{id}.txt");
        let image_path = out.join(&image_rel);
        save_png(&example.image, &image_path)?;
        stage.record(image_path);
        let latent_text: Vec<String> = example.latent.iter().map(|v| f64_17(*v)).collect();
        stage.write(out.join(&latent_rel), &(latent_text.join(",") + "\n"))?;
        records.push(ManifestRecord {
            image_id: id,
            path: image_rel.into(),
            ancestor_count: example.ancestor_count,
            user_id: users[i].clone(),
            width: example.image.width() as u32,
            height: example.image.height() as u32,
            latent_path: Some(latent_rel.into()),
        });
    }
    let manifest_path = out.join("manifest.jsonl");
    write_manifest(&manifest_path, &records)?;
    stage.record(manifest_path);

    // Matching latents CSV for embed mode (raw-generator rows share one dim).
    let mut csv = String::from("image_id,user_id,latents...\n");
    for (record, example) in records.iter().zip(&data) {
        if example.source == ProxySource::RawGenerator {
            let values: Vec<String> = example.latent.iter().map(|v| f64_17(*v)).collect();
            csv.push_str(&format!(
                "{},{},{}\n",
                record.image_id,
                record.user_id,
                values.join(",")
            ));
        }
    }
    stage.write(out.join("latents.csv"), &csv)?;
    Ok(())
}

fn run_gradcheck(config: &RunConfig, out: &Path, stage: &mut Stage) -> Result<(), PipelineError> {
    let mut rows = Vec::new();

    // Primitive compositions over 20 seeds, away from relu/clamp kinks.
    for seed in 0..20u64 {
        let mut rng = stream(seed, Stream::Other(90));
        let mut vals = normal_vec(&mut rng, 6);
        for v in vals.iter_mut() {
            if v.abs() < 0.05 {
                *v += 0.1;
            }
        }
        let x = Tensor::from_vec(vals).map_err(crate::direction::DirectionError::from)?;
        let err = gradient_check(
            |x| {
                let a = x.tanh()?.mul(&x.sigmoid()?)?;
                let b = a.square()?.scale(0.5)?.exp()?;
                Tensor::concat(&[&a, &b])?.mean()
            },
            &x,
            1e-6,
        )
        .map_err(crate::direction::DirectionError::from)?;
        rows.push((format!("primitive_composition_{seed}"), err, 1e-6));
    }

    // Full toy-stack losses at small and default latent widths.
    for (d_z, blobs) in [(4usize, 1usize), (16, 4)] {
        let generator = ToyGenerator::new(crate::toyworld::ToyGeneratorConfig {
            side: 16,
            blobs,
            latent_dim: d_z,
            ..config.generator.clone()
        })?;
        let assessor = SmoothColorfulness::default();
        let mut rng = stream(config.seed, Stream::WeightInit);
        let z_net = DirectionNet::init(d_z, d_z, 32, &mut rng);
        let y_net = DirectionNet::init(generator.n_classes(), generator.n_classes(), 32, &mut rng);
        for (name, model) in [
            (format!("loss_eq1_dz{d_z}"), DirectionModel::Noise(z_net.clone())),
            (
                format!("loss_eq2_dz{d_z}"),
                DirectionModel::Joint { z_net: z_net.clone(), y_net: y_net.clone() },
            ),
        ] {
            let batch: Vec<Sample> = {
                let (ez, ey) = model.eps_dims();
                let mut rng = stream(config.seed, Stream::TrainBatch);
                (0..2)
                    .map(|_| {
                        let z = normal_vec(&mut rng, d_z);
                        let mut y = vec![0.0; generator.n_classes()];
                        y[0] = 1.0;
                        Sample {
                            z,
                            y,
                            alpha: 0.3,
                            eps_z: normal_vec(&mut rng, ez),
                            eps_y: normal_vec(&mut rng, ey),
                        }
                    })
                    .collect()
            };
            let params = Tensor::from_vec(model.params_flat())
                .map_err(crate::direction::DirectionError::from)?;
            let err = gradient_check(
                |p| {
                    model
                        .batch_loss(p, &batch, &generator, &assessor, false)
                        .map_err(|_| crate::autodiff::AdError::NonFinite { op: "loss" })
                },
                &params,
                1e-6,
            )
            .map_err(crate::direction::DirectionError::from)?;
            rows.push((name, err, 1e-5));
        }
    }

    let mut csv = String::from("check,error,threshold,pass\n");
    let mut failed = 0usize;
    for (name, err, threshold) in &rows {
        let pass = err < threshold;
        if !pass {
            failed += 1;
        }
        csv.push_str(&format!("{name},{},{},{pass}\n", f64_17(*err), f64_17(*threshold)));
    }
    stage.write(out.join("gradcheck.csv"), &csv)?;
    if failed > 0 {
        return Err(PipelineError::CheckFailed { failed, total: rows.len() });
    }
    Ok(())
}
