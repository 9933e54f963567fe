//! C ABI for marketguard.
//!
//! Models and rulesets are opaque handles created by `mg_*_load` /
//! `mg_train` and released with the matching `*_free`. Every fallible call
//! returns an [`MgStatus`]; on failure a message describing the error is
//! available from [`mg_last_error_message`] on the same thread. Results are
//! written through out-pointers only on success.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use marketguard::features::{apply_scaling, FeatureVector, FEATURE_MANIFEST};
use marketguard::model_file::ModelDocument;
use marketguard::rules::{load_ruleset, RuleSet};
use marketguard::svm::{train_smo, Kernel, Label, Sample, TrainConfig};
use marketguard::Error;

/// Result code of every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Parse = 3,
    Io = 4,
    Config = 5,
    DegenerateLabels = 6,
    Convergence = 7,
    DegenerateModel = 8,
    Unsupported = 9,
    ManifestMismatch = 10,
    Internal = 11,
}

/// Kernel family selector for [`MgKernel`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MgKernelType {
    Linear = 0,
    Polynomial = 1,
    Rbf = 2,
}

/// Kernel description. `degree` and `offset` apply to polynomial kernels,
/// `gamma` to RBF kernels; other fields are ignored.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct MgKernel {
    pub kind: MgKernelType,
    pub degree: u32,
    pub offset: f64,
    pub gamma: f64,
}

/// Training parameters; see [`mg_train_config_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct MgTrainConfig {
    pub c: f64,
    pub kkt_tol: f64,
    pub value_eps: f64,
    pub max_passes: usize,
    pub rng_seed: u64,
}

/// Trained SVM model, optionally with feature scaling.
pub struct MgModel {
    doc: ModelDocument,
}

/// Weighted ruleset over the seller feature manifest.
pub struct MgRuleSet {
    rules: RuleSet,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(MgStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::InvalidInput(_) | Error::SizeLimit { .. } | Error::Validation(_) | Error::NotFound(_) => {
                MgStatus::InvalidInput
            }
            Error::DegenerateLabels => MgStatus::DegenerateLabels,
            Error::Convergence { .. } => MgStatus::Convergence,
            Error::DegenerateModel(_) => MgStatus::DegenerateModel,
            Error::Unsupported(_) => MgStatus::Unsupported,
            Error::Parse { .. } => MgStatus::Parse,
            Error::Config(_) => MgStatus::Config,
            Error::ManifestMismatch { .. } => MgStatus::ManifestMismatch,
            Error::Io { .. } => MgStatus::Io,
            Error::Oracle(_) => MgStatus::Internal,
        };
        Failure(status, e.to_string())
    }
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard<F>(body: F) -> MgStatus
where
    F: FnOnce() -> Result<(), Failure>,
{
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => MgStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(_) => {
            set_last_error("internal error: panic inside marketguard");
            MgStatus::Internal
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(MgStatus::NullPointer, format!("{what} is null"))
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, Failure> {
    if p.is_null() {
        return Err(null("path"));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(MgStatus::InvalidInput, "path is not valid UTF-8".into()))?;
    Ok(PathBuf::from(s))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(value);
    Ok(())
}

fn sample(values: &[f64]) -> Result<Sample, Failure> {
    Ok(Sample::new(values.to_vec())?)
}

fn kernel_from(k: &MgKernel) -> Kernel {
    match k.kind {
        MgKernelType::Linear => Kernel::Linear,
        MgKernelType::Polynomial => Kernel::Polynomial {
            degree: k.degree,
            offset: k.offset,
        },
        MgKernelType::Rbf => Kernel::Rbf { gamma: k.gamma },
    }
}

/// Message for the last failed call on this thread, or null if none.
/// The pointer stays valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn mg_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Number of features in the seller feature manifest.
#[no_mangle]
pub extern "C" fn mg_feature_count() -> usize {
    FEATURE_MANIFEST.len()
}

#[no_mangle]
pub extern "C" fn mg_train_config_default() -> MgTrainConfig {
    let d = TrainConfig::default();
    MgTrainConfig {
        c: d.c,
        kkt_tol: d.kkt_tol,
        value_eps: d.value_eps,
        max_passes: d.max_passes,
        rng_seed: d.rng_seed,
    }
}

/// Evaluates `kernel` on two vectors of length `dim`.
#[no_mangle]
pub unsafe extern "C" fn mg_kernel_eval(
    kernel: *const MgKernel,
    a: *const f64,
    b: *const f64,
    dim: usize,
    out: *mut f64,
) -> MgStatus {
    guard(|| {
        let k = kernel_from(handle(kernel, "kernel")?);
        k.validate()?;
        let a = slice_arg(a, dim, "a")?;
        let b = slice_arg(b, dim, "b")?;
        write_out(out, k.eval_slices(a, b)?)
    })
}

/// Trains on `n` row-major samples of `dim` features. Labels are +1
/// (fraudulent) or -1 (normal). `config` may be null for defaults.
#[no_mangle]
pub unsafe extern "C" fn mg_train(
    samples: *const f64,
    n: usize,
    dim: usize,
    labels: *const i8,
    kernel: *const MgKernel,
    config: *const MgTrainConfig,
    out: *mut *mut MgModel,
) -> MgStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("output pointer"));
        }
        if dim == 0 {
            return Err(Failure(MgStatus::InvalidInput, "dim must be > 0".into()));
        }
        let total = n
            .checked_mul(dim)
            .ok_or_else(|| Failure(MgStatus::InvalidInput, "n * dim overflows".into()))?;
        let flat = slice_arg(samples, total, "samples")?;
        let ys = slice_arg(labels, n, "labels")?;
        let kernel = kernel_from(handle(kernel, "kernel")?);
        let cfg = match config.as_ref() {
            Some(c) => TrainConfig {
                c: c.c,
                kkt_tol: c.kkt_tol,
                value_eps: c.value_eps,
                max_passes: c.max_passes,
                rng_seed: c.rng_seed,
            },
            None => TrainConfig::default(),
        };
        let xs = flat.chunks(dim).map(sample).collect::<Result<Vec<_>, _>>()?;
        let ys = ys
            .iter()
            .map(|&l| Label::from_i8(l).map_err(Failure::from))
            .collect::<Result<Vec<_>, _>>()?;
        let svm = train_smo(&xs, &ys, kernel, &cfg)?;
        let doc = ModelDocument::raw(svm, cfg, dim);
        out.write(Box::into_raw(Box::new(MgModel { doc })));
        Ok(())
    })
}

/// Loads a model file.
#[no_mangle]
pub unsafe extern "C" fn mg_model_load(path: *const c_char, out: *mut *mut MgModel) -> MgStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("output pointer"));
        }
        let doc = ModelDocument::load(&path_arg(path)?)?;
        out.write(Box::into_raw(Box::new(MgModel { doc })));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn mg_model_save(model: *const MgModel, path: *const c_char) -> MgStatus {
    guard(|| {
        let m = handle(model, "model")?;
        m.doc.save(&path_arg(path)?)?;
        Ok(())
    })
}

/// Releases a model. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn mg_model_free(model: *mut MgModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Input dimension of the model, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn mg_model_dimension(model: *const MgModel) -> usize {
    model.as_ref().map_or(0, |m| m.doc.dimension)
}

/// Number of support vectors, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn mg_model_support_vector_count(model: *const MgModel) -> usize {
    model.as_ref().map_or(0, |m| m.doc.svm.alphas.len())
}

/// Signed decision value f(x) for a sample in the model's input space.
#[no_mangle]
pub unsafe extern "C" fn mg_model_decision_value(
    model: *const MgModel,
    x: *const f64,
    dim: usize,
    out: *mut f64,
) -> MgStatus {
    guard(|| {
        let m = handle(model, "model")?;
        let x = sample(slice_arg(x, dim, "x")?)?;
        write_out(out, m.doc.svm.decision_value(&x)?)
    })
}

/// Writes +1 (fraudulent) or -1 (normal); a zero decision value is +1.
#[no_mangle]
pub unsafe extern "C" fn mg_model_classify(
    model: *const MgModel,
    x: *const f64,
    dim: usize,
    out: *mut i8,
) -> MgStatus {
    guard(|| {
        let m = handle(model, "model")?;
        let x = sample(slice_arg(x, dim, "x")?)?;
        write_out(out, m.doc.svm.classify(&x)?.as_i8())
    })
}

/// Geometric margin 1/‖w‖ in feature space.
#[no_mangle]
pub unsafe extern "C" fn mg_model_margin(model: *const MgModel, out: *mut f64) -> MgStatus {
    guard(|| {
        let m = handle(model, "model")?;
        write_out(out, m.doc.svm.margin(m.doc.train_config.value_eps)?)
    })
}

/// Decision value for unscaled seller features in manifest order
/// (`mg_feature_count()` values). Requires a model trained by the pipeline.
#[no_mangle]
pub unsafe extern "C" fn mg_model_score_features(
    model: *const MgModel,
    features: *const f64,
    len: usize,
    out: *mut f64,
) -> MgStatus {
    guard(|| {
        let m = handle(model, "model")?;
        let scaling = m.doc.scaling.as_ref().ok_or_else(|| {
            Failure(MgStatus::Unsupported, "model has no feature scaling; use mg_model_decision_value".into())
        })?;
        let fv = feature_vector(features, len)?;
        let x = apply_scaling(scaling, &fv);
        write_out(out, m.doc.svm.decision_value(&x)?)
    })
}

unsafe fn feature_vector(features: *const f64, len: usize) -> Result<FeatureVector, Failure> {
    let values = slice_arg(features, len, "features")?;
    let values: [f64; FEATURE_MANIFEST.len()] = values.try_into().map_err(|_| {
        Failure(
            MgStatus::InvalidInput,
            format!("expected {} features, got {len}", FEATURE_MANIFEST.len()),
        )
    })?;
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Failure(MgStatus::InvalidInput, "features must be finite".into()));
    }
    Ok(FeatureVector::from_values(values, true))
}

/// Loads a TOML ruleset.
#[no_mangle]
pub unsafe extern "C" fn mg_ruleset_load(path: *const c_char, out: *mut *mut MgRuleSet) -> MgStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("output pointer"));
        }
        let rules = load_ruleset(&path_arg(path)?)?;
        out.write(Box::into_raw(Box::new(MgRuleSet { rules })));
        Ok(())
    })
}

/// The bundled illustrative ruleset.
#[no_mangle]
pub unsafe extern "C" fn mg_ruleset_default(out: *mut *mut MgRuleSet) -> MgStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("output pointer"));
        }
        let rules = RuleSet::default_ruleset();
        out.write(Box::into_raw(Box::new(MgRuleSet { rules })));
        Ok(())
    })
}

/// Releases a ruleset. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn mg_ruleset_free(rules: *mut MgRuleSet) {
    if !rules.is_null() {
        drop(Box::from_raw(rules));
    }
}

/// Aggregate score of the rules firing on `features` (manifest order) and
/// whether it reaches the ruleset's decision threshold.
#[no_mangle]
pub unsafe extern "C" fn mg_ruleset_evaluate(
    rules: *const MgRuleSet,
    features: *const f64,
    len: usize,
    out_score: *mut f64,
    out_flagged: *mut bool,
) -> MgStatus {
    guard(|| {
        let r = handle(rules, "ruleset")?;
        if out_score.is_null() || out_flagged.is_null() {
            return Err(null("output pointer"));
        }
        let outcome = r.rules.evaluate(&feature_vector(features, len)?);
        out_score.write(outcome.aggregate_score);
        out_flagged.write(outcome.flagged);
        Ok(())
    })
}
