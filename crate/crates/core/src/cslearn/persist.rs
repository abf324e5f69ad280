//! Binary model format, little-endian throughout:
//!
//! ```text
//! "L2S1" | version u8 | bits u8 | k u32 | eta f64
//! | label count u32 | (byte length u32, utf-8 bytes)*
//! | entry count u64 | (action u32, index u64, weight f64, grad_sq f64)*
//! ```

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::LinearCSModel;
use crate::dataio::LabelDict;
use crate::error::{L2sError, Result};

pub const MODEL_MAGIC: &[u8; 4] = b"L2S1";
pub const MODEL_VERSION: u8 = 1;

pub fn write_model<W: Write>(model: &LinearCSModel, mut out: W) -> Result<()> {
    out.write_all(MODEL_MAGIC)?;
    out.write_all(&[MODEL_VERSION, model.bits])?;
    out.write_all(&(model.num_actions as u32).to_le_bytes())?;
    out.write_all(&model.eta.to_le_bytes())?;
    let labels = model.labels.labels();
    out.write_all(&(labels.len() as u32).to_le_bytes())?;
    for l in labels {
        out.write_all(&(l.len() as u32).to_le_bytes())?;
        out.write_all(l.as_bytes())?;
    }
    let count = model.nonzero_entries().count() as u64;
    out.write_all(&count.to_le_bytes())?;
    for (a, i, w, g) in model.nonzero_entries() {
        out.write_all(&(a as u32).to_le_bytes())?;
        out.write_all(&u64::from(i).to_le_bytes())?;
        out.write_all(&w.to_le_bytes())?;
        out.write_all(&g.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub fn save_model(model: &LinearCSModel, path: impl AsRef<Path>) -> Result<()> {
    write_model(model, BufWriter::new(File::create(path)?))
}

fn read_array<R: Read, const N: usize>(r: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => L2sError::model("truncated model file"),
        _ => L2sError::Io(e),
    })?;
    Ok(buf)
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    Ok(u32::from_le_bytes(read_array(r)?))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    Ok(u64::from_le_bytes(read_array(r)?))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    Ok(f64::from_le_bytes(read_array(r)?))
}

pub fn read_model<R: Read>(mut r: R) -> Result<LinearCSModel> {
    let magic: [u8; 4] = read_array(&mut r)?;
    if &magic != MODEL_MAGIC {
        return Err(L2sError::model("not a model file (bad magic)"));
    }
    let [version, bits] = read_array::<_, 2>(&mut r)?;
    if version != MODEL_VERSION {
        return Err(L2sError::model(format!(
            "unsupported model version {version} (this build reads version {MODEL_VERSION})"
        )));
    }
    let k = read_u32(&mut r)? as usize;
    let eta = read_f64(&mut r)?;
    let mut model = LinearCSModel::new(bits, k, eta)
        .map_err(|e| L2sError::model(format!("invalid model header: {e}")))?;

    let nlabels = read_u32(&mut r)?;
    let mut labels = LabelDict::new();
    for _ in 0..nlabels {
        let len = read_u32(&mut r)? as usize;
        let mut bytes = Vec::new();
        (&mut r).take(len as u64).read_to_end(&mut bytes)?;
        if bytes.len() != len {
            return Err(L2sError::model("truncated model file"));
        }
        let label = String::from_utf8(bytes).map_err(|_| L2sError::model("label is not utf-8"))?;
        labels.get_or_insert(&label);
    }
    model.labels = labels;

    let count = read_u64(&mut r)?;
    let limit = 1u64 << bits;
    for _ in 0..count {
        let a = read_u32(&mut r)? as usize;
        let i = read_u64(&mut r)?;
        let w = read_f64(&mut r)?;
        let g = read_f64(&mut r)?;
        if a >= k || i >= limit {
            return Err(L2sError::model(format!("entry ({a}, {i}) outside model dimensions")));
        }
        model.set_entry(a, i as u32, w, g);
    }
    Ok(model)
}

pub fn load_model(path: impl AsRef<Path>) -> Result<LinearCSModel> {
    read_model(BufReader::new(File::open(path)?))
}
