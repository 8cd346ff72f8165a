//! Python bindings: the toy generator, assessors, image metrics, direction
//! models, the PCA/t-SNE embedding, and the full pipeline runner.
//!
//! Images cross the boundary as planar `[3, H, W]` float lists in [0, 1].

use std::path::{Path, PathBuf};

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use latent_steer::autodiff::Tensor;
use latent_steer::direction::{
    load_model, Assessor as _, DirectionModel, Generator as _, ModelKind,
};
use latent_steer::explorer::{pca_fit_transform, tsne_embed, EmbeddingConfig};
use latent_steer::metrics::{compute_all, load_image, save_png, METRIC_NAMES};
use latent_steer::pipeline::{run as run_pipeline, Mode, RunConfig};
use latent_steer::toyworld::{
    BrightnessAssessor, SmoothColorfulness, ToyGenerator as CoreGenerator, ToyGeneratorConfig,
};

fn value_error<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn io_error<E: std::fmt::Display>(e: E) -> PyErr {
    PyIOError::new_err(e.to_string())
}

/// An RGB raster in [0, 1], stored planar (R plane, G plane, B plane).
#[pyclass(name = "Image", from_py_object)]
#[derive(Clone)]
struct PyImage {
    inner: latent_steer::metrics::Image,
}

#[pymethods]
impl PyImage {
    /// Builds an image from planar data of length 3*height*width.
    #[staticmethod]
    fn from_planar(height: usize, width: usize, data: Vec<f64>) -> PyResult<PyImage> {
        let inner = latent_steer::metrics::Image::from_planar(height, width, data)
            .map_err(value_error)?;
        Ok(PyImage { inner })
    }

    /// Loads a PNG or PPM file.
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<PyImage> {
        Ok(PyImage { inner: load_image(&path).map_err(io_error)? })
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.height()
    }

    #[getter]
    fn width(&self) -> usize {
        self.inner.width()
    }

    /// Planar pixel data (R plane, then G, then B).
    fn to_planar(&self) -> Vec<f64> {
        self.inner.planar().to_vec()
    }

    fn save_png(&self, path: PathBuf) -> PyResult<()> {
        save_png(&self.inner, &path).map_err(io_error)
    }

    /// The emitted metric columns as a dict; mask-dependent metrics are None
    /// when the mask is empty.
    #[pyo3(signature = (segment_threshold = 0.5))]
    fn metrics<'py>(&self, py: Python<'py>, segment_threshold: f64) -> PyResult<Bound<'py, PyDict>> {
        let values = compute_all(&self.inner, segment_threshold);
        let dict = PyDict::new(py);
        for name in METRIC_NAMES {
            dict.set_item(name, values.get(name))?;
        }
        dict.set_item("squareness_degenerate", values.squareness_degenerate)?;
        Ok(dict)
    }

    fn __repr__(&self) -> String {
        format!("Image({}x{})", self.inner.height(), self.inner.width())
    }
}

/// The differentiable blob generator G(z, y).
#[pyclass(name = "ToyGenerator")]
struct PyToyGenerator {
    inner: CoreGenerator,
}

#[pymethods]
impl PyToyGenerator {
    /// `config_json` takes the same generator section as the run config.
    #[new]
    #[pyo3(signature = (config_json = None))]
    fn new(config_json: Option<&str>) -> PyResult<Self> {
        let config: ToyGeneratorConfig = match config_json {
            Some(text) => serde_json::from_str(text).map_err(value_error)?,
            None => ToyGeneratorConfig::default(),
        };
        Ok(PyToyGenerator { inner: CoreGenerator::new(config).map_err(value_error)? })
    }

    #[getter]
    fn latent_dim(&self) -> usize {
        self.inner.latent_dim()
    }

    #[getter]
    fn n_classes(&self) -> usize {
        self.inner.n_classes()
    }

    #[getter]
    fn image_size(&self) -> (usize, usize) {
        self.inner.image_size()
    }

    fn generate(&self, z: Vec<f64>, y: Vec<f64>) -> PyResult<PyImage> {
        let z = Tensor::from_vec(z).map_err(value_error)?;
        let y = Tensor::from_vec(y).map_err(value_error)?;
        let image = self.inner.generate(&z, &y).map_err(value_error)?;
        let inner = latent_steer::direction::tensor_to_image(&image).map_err(value_error)?;
        Ok(PyImage { inner })
    }
}

/// A trained (or freshly loaded) direction model.
#[pyclass(name = "DirectionModel")]
struct PyDirectionModel {
    inner: DirectionModel,
}

#[pymethods]
impl PyDirectionModel {
    /// Loads a model file written by a train run.
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyDirectionModel { inner: load_model(&path).map_err(io_error)? })
    }

    #[getter]
    fn kind(&self) -> &'static str {
        match self.inner.kind() {
            ModelKind::Fixed => "fixed",
            ModelKind::Noise => "noise",
            ModelKind::Joint => "joint",
        }
    }

    #[getter]
    fn n_params(&self) -> usize {
        self.inner.n_params()
    }

    /// Noise dimensions consumed per sample: (eps_z, eps_y).
    #[getter]
    fn eps_dims(&self) -> (usize, usize) {
        self.inner.eps_dims()
    }

    /// Applies the transform to a latent/class pair. `eps_z`/`eps_y` default
    /// to zero vectors of the model's noise widths.
    #[pyo3(signature = (z, y, alpha, eps_z = None, eps_y = None))]
    fn transform(
        &self,
        z: Vec<f64>,
        y: Vec<f64>,
        alpha: f64,
        eps_z: Option<Vec<f64>>,
        eps_y: Option<Vec<f64>>,
    ) -> PyResult<(Vec<f64>, Vec<f64>)> {
        let (dz, dy) = self.inner.eps_dims();
        let z = Tensor::from_vec(z).map_err(value_error)?;
        let y = Tensor::from_vec(y).map_err(value_error)?;
        let eps_z = Tensor::from_vec(eps_z.unwrap_or_else(|| vec![0.0; dz])).map_err(value_error)?;
        let eps_y = Tensor::from_vec(eps_y.unwrap_or_else(|| vec![0.0; dy])).map_err(value_error)?;
        let (tz, ty) =
            self.inner.transform_plain(&z, &y, alpha, &eps_z, &eps_y).map_err(value_error)?;
        Ok((tz.data().to_vec(), ty.data().to_vec()))
    }
}

/// Scores an image with a named assessor: `smooth_colorfulness`,
/// `brightness`, or `classifier:<path>`.
#[pyfunction]
#[pyo3(signature = (image, assessor = "smooth_colorfulness"))]
fn score(image: &PyImage, assessor: &str) -> PyResult<f64> {
    if let Some(path) = assessor.strip_prefix("classifier:") {
        let classifier =
            latent_steer::toyworld::load_classifier(Path::new(path)).map_err(io_error)?;
        return classifier.score_image(&image.inner).map_err(value_error);
    }
    match assessor {
        "smooth_colorfulness" => {
            SmoothColorfulness::default().score_image(&image.inner).map_err(value_error)
        }
        "brightness" => BrightnessAssessor.score_image(&image.inner).map_err(value_error),
        other => Err(PyValueError::new_err(format!("unknown assessor '{other}'"))),
    }
}

/// PCA fit+transform. Returns (components, projected, explained_variance_ratio).
#[pyfunction]
fn pca(x: Vec<Vec<f64>>, k: usize) -> PyResult<(Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<f64>)> {
    let result = pca_fit_transform(&x, k).map_err(value_error)?;
    Ok((result.components, result.projected, result.explained_variance_ratio))
}

/// Exact t-SNE to 2-D. Returns the embedding as [[x, y], ...].
#[pyfunction]
#[pyo3(signature = (x, perplexity = 30.0, iterations = 1000, seed = 0, learning_rate = 200.0))]
fn tsne(
    x: Vec<Vec<f64>>,
    perplexity: f64,
    iterations: usize,
    seed: u64,
    learning_rate: f64,
) -> PyResult<Vec<[f64; 2]>> {
    let config = EmbeddingConfig {
        perplexity,
        iterations,
        seed,
        learning_rate,
        ..EmbeddingConfig::default()
    };
    let result = tsne_embed(&x, &config, None).map_err(value_error)?;
    Ok(result.embedding)
}

/// Runs one pipeline mode (train, sweep, metrics, embed, assessor, synth,
/// gradcheck) with a JSON run config. Returns the written file paths.
#[pyfunction]
#[pyo3(signature = (mode, out_dir, config_json = None, seed = None))]
fn run(
    mode: &str,
    out_dir: PathBuf,
    config_json: Option<&str>,
    seed: Option<u64>,
) -> PyResult<Vec<String>> {
    let mode: Mode = mode.parse().map_err(value_error)?;
    let base = match config_json {
        Some(text) => RunConfig::from_json(text).map_err(value_error)?,
        None => RunConfig::default(),
    };
    let config = base.resolve(Some(mode), seed, Some(out_dir), false);
    let outcome = run_pipeline(&config).map_err(value_error)?;
    Ok(outcome.outputs.iter().map(|p| p.display().to_string()).collect())
}

#[pymodule]
fn latentsteer(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyImage>()?;
    m.add_class::<PyToyGenerator>()?;
    m.add_class::<PyDirectionModel>()?;
    m.add_function(wrap_pyfunction!(score, m)?)?;
    m.add_function(wrap_pyfunction!(pca, m)?)?;
    m.add_function(wrap_pyfunction!(tsne, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add("METRIC_NAMES", METRIC_NAMES.to_vec())?;
    Ok(())
}
