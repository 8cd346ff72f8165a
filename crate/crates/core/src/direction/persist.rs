//! Flat binary model files.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic   4 bytes  "LSDM"
//! version u32      1
//! kind    u32      0 = fixed, 1 = noise net, 3 = joint (z net + y net)
//! n_dims  u32
//! dims    n_dims x u32   fixed: [d_z]
//!                        noise: [input, noise, hidden]
//!                        joint: [z_in, z_noise, z_hidden, y_in, y_noise, y_hidden]
//! count   u64      parameter count
//! params  count x f64
//! ```
//!
//! A JSON sidecar at `<path>.json` records the run config and seed.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::model::{DirectionModel, DirectionNet, FixedDirection};
use super::DirectionError;

pub const MODEL_MAGIC: &[u8; 4] = b"LSDM";
const MODEL_VERSION: u32 = 1;

fn kind_tag(model: &DirectionModel) -> u32 {
    match model {
        DirectionModel::Fixed(_) => 0,
        DirectionModel::Noise(_) => 1,
        DirectionModel::Joint { .. } => 3,
    }
}

/// Writes the model file plus a `<path>.json` sidecar with config and seed.
pub fn save_model(
    path: &Path,
    model: &DirectionModel,
    sidecar: &serde_json::Value,
) -> Result<(), DirectionError> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MODEL_MAGIC)?;
    w.write_all(&MODEL_VERSION.to_le_bytes())?;
    w.write_all(&kind_tag(model).to_le_bytes())?;
    let dims: Vec<u32> = match model {
        DirectionModel::Fixed(f) => vec![f.dim() as u32],
        DirectionModel::Noise(n) => {
            vec![n.input_dim as u32, n.noise_dim as u32, n.hidden_dim as u32]
        }
        DirectionModel::Joint { z_net, y_net } => vec![
            z_net.input_dim as u32,
            z_net.noise_dim as u32,
            z_net.hidden_dim as u32,
            y_net.input_dim as u32,
            y_net.noise_dim as u32,
            y_net.hidden_dim as u32,
        ],
    };
    w.write_all(&(dims.len() as u32).to_le_bytes())?;
    for d in &dims {
        w.write_all(&d.to_le_bytes())?;
    }
    let params = model.params_flat();
    w.write_all(&(params.len() as u64).to_le_bytes())?;
    for p in &params {
        w.write_all(&p.to_le_bytes())?;
    }
    w.flush()?;

    let sidecar_path = sidecar_path(path);
    let json = serde_json::to_string_pretty(sidecar)
        .map_err(|e| DirectionError::BadModelFile(format!("sidecar: {e}")))?;
    std::fs::write(sidecar_path, json + "\n")?;
    Ok(())
}

pub fn sidecar_path(model_path: &Path) -> std::path::PathBuf {
    let mut os = model_path.as_os_str().to_os_string();
    os.push(".json");
    std::path::PathBuf::from(os)
}

pub fn load_model(path: &Path) -> Result<DirectionModel, DirectionError> {
    let mut r = BufReader::new(File::open(path)?);
    let bad = |msg: &str| DirectionError::BadModelFile(msg.to_string());

    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MODEL_MAGIC {
        return Err(bad("wrong magic"));
    }
    if read_u32(&mut r)? != MODEL_VERSION {
        return Err(bad("unsupported version"));
    }
    let kind = read_u32(&mut r)?;
    let n_dims = read_u32(&mut r)? as usize;
    let mut dims = Vec::with_capacity(n_dims);
    for _ in 0..n_dims {
        dims.push(read_u32(&mut r)? as usize);
    }
    let count = {
        let mut buf = [0u8; 8];
        r.read_exact(&mut buf)?;
        u64::from_le_bytes(buf) as usize
    };
    let mut params = Vec::with_capacity(count);
    let mut buf = [0u8; 8];
    for _ in 0..count {
        r.read_exact(&mut buf)?;
        let v = f64::from_le_bytes(buf);
        if !v.is_finite() {
            return Err(bad("non-finite parameter"));
        }
        params.push(v);
    }

    match (kind, dims.as_slice()) {
        (0, [d_z]) => {
            if params.len() != *d_z {
                return Err(bad("fixed-direction parameter count mismatch"));
            }
            Ok(DirectionModel::Fixed(FixedDirection { theta: params }))
        }
        (1, [input, noise, hidden]) => {
            if params.len() != DirectionNet::param_count(*input, *noise, *hidden) {
                return Err(bad("noise-net parameter count mismatch"));
            }
            Ok(DirectionModel::Noise(DirectionNet {
                input_dim: *input,
                noise_dim: *noise,
                hidden_dim: *hidden,
                params,
            }))
        }
        (3, [zi, zn, zh, yi, yn, yh]) => {
            let nz = DirectionNet::param_count(*zi, *zn, *zh);
            let ny = DirectionNet::param_count(*yi, *yn, *yh);
            if params.len() != nz + ny {
                return Err(bad("joint parameter count mismatch"));
            }
            let y_params = params.split_off(nz);
            Ok(DirectionModel::Joint {
                z_net: DirectionNet { input_dim: *zi, noise_dim: *zn, hidden_dim: *zh, params },
                y_net: DirectionNet {
                    input_dim: *yi,
                    noise_dim: *yn,
                    hidden_dim: *yh,
                    params: y_params,
                },
            })
        }
        _ => Err(bad("unknown model kind or dim layout")),
    }
}

fn read_u32(r: &mut impl Read) -> Result<u32, std::io::Error> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}
