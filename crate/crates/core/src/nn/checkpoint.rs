//! Model checkpoints: a fixed header describing the architecture,
//! followed by every parameter (including batch-norm running statistics)
//! as little-endian f32. Round-trips are bit-exact for f32 models.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::nn::layers::{Dense, KERNEL};
use crate::nn::model::{DannModel, FILTERS, HIDDEN, POOL_STAGES};
use crate::nn::NnError;
use crate::real::Real;

const MAGIC: &[u8; 4] = b"DANN";
const VERSION: u16 = 1;

fn push_params<R: Real>(out: &mut Vec<f32>, slice: &[R]) {
    out.extend(slice.iter().map(|v| v.as_f32()));
}

fn head_params<R: Real>(out: &mut Vec<f32>, fc1: &Dense<R>, fc2: &Dense<R>) {
    push_params(out, &fc1.w);
    push_params(out, &fc1.b);
    push_params(out, &fc2.w);
    push_params(out, &fc2.b);
}

fn collect_params<R: Real>(model: &DannModel<R>) -> Vec<f32> {
    let mut out = Vec::new();
    for s in &model.stages {
        push_params(&mut out, &s.conv.w);
        push_params(&mut out, &s.conv.b);
        push_params(&mut out, &s.bn.gamma);
        push_params(&mut out, &s.bn.beta);
        push_params(&mut out, &s.bn.running_mean);
        push_params(&mut out, &s.bn.running_var);
    }
    head_params(&mut out, &model.discriminator.fc1, &model.discriminator.fc2);
    head_params(&mut out, &model.adversary.fc1, &model.adversary.fc2);
    out
}

fn restore_params<R: Real>(model: &mut DannModel<R>, params: &[f32]) {
    let mut it = params.iter();
    let mut take = |slice: &mut [R]| {
        for v in slice {
            *v = R::of(*it.next().expect("length checked by caller") as f64);
        }
    };
    for s in &mut model.stages {
        take(&mut s.conv.w);
        take(&mut s.conv.b);
        take(&mut s.bn.gamma);
        take(&mut s.bn.beta);
        take(&mut s.bn.running_mean);
        take(&mut s.bn.running_var);
    }
    for h in [&mut model.discriminator, &mut model.adversary] {
        take(&mut h.fc1.w);
        take(&mut h.fc1.b);
        take(&mut h.fc2.w);
        take(&mut h.fc2.b);
    }
}

fn param_count(pad_length: usize) -> usize {
    let feature_len = FILTERS * pad_length / 81;
    let mut n = 0;
    for s in 0..POOL_STAGES {
        let c_in = if s == 0 { 1 } else { FILTERS };
        n += FILTERS * c_in * KERNEL + FILTERS; // conv
        n += 4 * FILTERS; // bn gamma/beta/running mean/var
    }
    // two identical heads
    n + 2 * (HIDDEN * feature_len + HIDDEN + 2 * HIDDEN + 2)
}

pub fn save_checkpoint<R: Real>(model: &DannModel<R>, path: &Path) -> Result<(), NnError> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    for v in [
        model.n_sites as u32,
        model.input_dim as u32,
        model.pad_length as u32,
        POOL_STAGES as u32,
        FILTERS as u32,
        KERNEL as u32,
        HIDDEN as u32,
    ] {
        w.write_all(&v.to_le_bytes())?;
    }
    for v in [
        model.lambda().as_f64(),
        model.dropout_p,
        model.bn_momentum,
        model.bn_stabilizer,
    ] {
        w.write_all(&v.to_le_bytes())?;
    }
    w.write_all(&model.init_seed.to_le_bytes())?;
    for p in collect_params(model) {
        w.write_all(&p.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn read_exact_or_truncated(
    r: &mut impl Read,
    buf: &mut [u8],
    expected: u64,
    read_so_far: &mut u64,
) -> Result<(), NnError> {
    match r.read_exact(buf) {
        Ok(()) => {
            *read_so_far += buf.len() as u64;
            Ok(())
        }
        Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => Err(NnError::Truncated {
            expected,
            found: *read_so_far,
        }),
        Err(e) => Err(e.into()),
    }
}

pub fn load_checkpoint<R: Real>(path: &Path) -> Result<DannModel<R>, NnError> {
    let file_len = std::fs::metadata(path)?.len();
    let mut r = BufReader::new(File::open(path)?);
    let mut seen = 0u64;

    let mut magic = [0u8; 4];
    read_exact_or_truncated(&mut r, &mut magic, 6, &mut seen)?;
    if &magic != MAGIC {
        return Err(NnError::BadMagic);
    }
    let mut u16buf = [0u8; 2];
    read_exact_or_truncated(&mut r, &mut u16buf, 6, &mut seen)?;
    let version = u16::from_le_bytes(u16buf);
    if version != VERSION {
        return Err(NnError::UnsupportedVersion(version));
    }

    let mut u32s = [0u32; 7];
    let mut u32buf = [0u8; 4];
    for v in &mut u32s {
        read_exact_or_truncated(&mut r, &mut u32buf, 74, &mut seen)?;
        *v = u32::from_le_bytes(u32buf);
    }
    let [n_sites, input_dim, pad_length, stages, filters, kernel, hidden] = u32s;
    if (stages, filters, kernel, hidden)
        != (
            POOL_STAGES as u32,
            FILTERS as u32,
            KERNEL as u32,
            HIDDEN as u32,
        )
    {
        return Err(NnError::InvalidConfig(format!(
            "checkpoint architecture {stages} stages / {filters} filters / kernel {kernel} / hidden {hidden} does not match this build"
        )));
    }

    let mut f64s = [0f64; 4];
    let mut f64buf = [0u8; 8];
    for v in &mut f64s {
        read_exact_or_truncated(&mut r, &mut f64buf, 74, &mut seen)?;
        *v = f64::from_le_bytes(f64buf);
    }
    let [lambda, dropout_p, bn_momentum, bn_stabilizer] = f64s;
    let mut u64buf = [0u8; 8];
    read_exact_or_truncated(&mut r, &mut u64buf, 74, &mut seen)?;
    let init_seed = u64::from_le_bytes(u64buf);

    let n_params = param_count(pad_length as usize);
    let expected = seen + 4 * n_params as u64;
    if file_len != expected {
        return Err(NnError::Truncated {
            expected,
            found: file_len,
        });
    }
    let mut params = vec![0f32; n_params];
    let mut f32buf = [0u8; 4];
    for p in &mut params {
        read_exact_or_truncated(&mut r, &mut f32buf, expected, &mut seen)?;
        *p = f32::from_le_bytes(f32buf);
    }

    let mut model = DannModel::new(
        n_sites as usize,
        input_dim as usize,
        dropout_p,
        bn_momentum,
        bn_stabilizer,
        lambda,
        init_seed,
    );
    if model.pad_length != pad_length as usize {
        return Err(NnError::InvalidConfig(format!(
            "checkpoint pad_length {} does not match input dimension {}",
            pad_length, input_dim
        )));
    }
    restore_params(&mut model, &params);
    Ok(model)
}
