//! C ABI over the trustfuse library.
//!
//! Every function returns a [`TfStatus`]; on failure a message is kept per
//! thread and can be read with [`tf_last_error`]. Opinions cross the
//! boundary as a belief array of length K plus an uncertainty, with uniform
//! base rates. Several opinions are passed as an `n × K` row-major belief
//! array and an array of `n` uncertainties.
//!
//! Models are opaque [`TfModel`] handles from [`tf_model_load`], released
//! with [`tf_model_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use trustfuse::opinion::{
    bcf_fuse_all, discounted_fuse, evidence_to_opinion, trust_discount, DirichletEvidence,
    MultinomialOpinion, ReferralOpinion,
};
use trustfuse::{Error, Model};

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TfStatus {
    Ok = 0,
    NullPointer = 1,
    /// An argument is out of its domain (negative mass, bad sum, bad trust).
    Domain = 2,
    /// Array lengths do not match.
    Dimension = 3,
    /// Fusion hit total conflict.
    Conflict = 4,
    /// A non-finite value came up.
    Numeric = 5,
    Undefined = 6,
    Singular = 7,
    Io = 8,
    /// A file could not be parsed.
    Parse = 9,
    /// Internal panic; the library state is unchanged.
    Panic = 10,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let message = CString::new(message.replace('\0', " ")).expect("NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(message));
}

fn status_of(err: &Error) -> TfStatus {
    match err {
        Error::Domain(_) => TfStatus::Domain,
        Error::Singular(_) => TfStatus::Singular,
        Error::Conflict(_) => TfStatus::Conflict,
        Error::Dimension { .. } => TfStatus::Dimension,
        Error::Numeric(_) => TfStatus::Numeric,
        Error::Undefined(_) => TfStatus::Undefined,
        Error::Load { .. } | Error::Config(_) => TfStatus::Parse,
        Error::Io { .. } => TfStatus::Io,
    }
}

/// Failure inside a call: a status and its message.
struct Fail(TfStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> TfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TfStatus::Ok,
        Ok(Err(Fail(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            TfStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(TfStatus::NullPointer, format!("{what} is null"))
}

unsafe fn input<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn output<'a>(p: *mut f64, len: usize, what: &str) -> Result<&'a mut [f64], Fail> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts_mut(p, len))
}

unsafe fn write<T>(p: *mut T, value: T, what: &str) -> Result<(), Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    *p = value;
    Ok(())
}

unsafe fn opinions(
    beliefs: *const f64,
    uncertainties: *const f64,
    n: usize,
    k: usize,
) -> Result<Vec<MultinomialOpinion>, Fail> {
    let size = n
        .checked_mul(k)
        .ok_or_else(|| Fail(TfStatus::Dimension, "n × K overflows".into()))?;
    let b = input(beliefs, size, "beliefs")?;
    let u = input(uncertainties, n, "uncertainties")?;
    if k == 0 {
        return Err(Fail(TfStatus::Dimension, "K must be at least 1".into()));
    }
    Ok((0..n)
        .map(|i| MultinomialOpinion::new(b[i * k..(i + 1) * k].to_vec(), u[i]))
        .collect::<trustfuse::Result<_>>()?)
}

unsafe fn emit(
    op: &MultinomialOpinion,
    out_belief: *mut f64,
    out_uncertainty: *mut f64,
) -> Result<(), Fail> {
    output(out_belief, op.num_classes(), "out_belief")?.copy_from_slice(op.belief());
    write(out_uncertainty, op.uncertainty(), "out_uncertainty")
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn tf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Degree of trust `b_t + a_t·u` of a referral opinion.
///
/// # Safety
/// `out` must be null or valid for one write.
#[no_mangle]
pub unsafe extern "C" fn tf_degree_of_trust(
    belief_trust: f64,
    belief_distrust: f64,
    uncertainty: f64,
    base_rate_trust: f64,
    out: *mut f64,
) -> TfStatus {
    guard(|| {
        let r = ReferralOpinion::with_base_rate(
            belief_trust,
            belief_distrust,
            uncertainty,
            base_rate_trust,
        )?;
        write(out, r.degree_of_trust(), "out")
    })
}

/// Opinion of K evidence values.
///
/// # Safety
/// `evidence` and `out_belief` must be valid for K reads / writes,
/// `out_uncertainty` for one write.
#[no_mangle]
pub unsafe extern "C" fn tf_evidence_to_opinion(
    evidence: *const f64,
    k: usize,
    out_belief: *mut f64,
    out_uncertainty: *mut f64,
) -> TfStatus {
    guard(|| {
        let ev = DirichletEvidence::new(input(evidence, k, "evidence")?.to_vec())?;
        emit(&evidence_to_opinion(&ev), out_belief, out_uncertainty)
    })
}

/// Discounts one opinion by a degree of trust in [0, 1].
///
/// # Safety
/// `belief` and `out_belief` must be valid for K reads / writes,
/// `out_uncertainty` for one write.
#[no_mangle]
pub unsafe extern "C" fn tf_trust_discount(
    belief: *const f64,
    uncertainty: f64,
    k: usize,
    trust: f64,
    out_belief: *mut f64,
    out_uncertainty: *mut f64,
) -> TfStatus {
    guard(|| {
        let op = opinions(belief, &uncertainty, 1, k)?.remove(0);
        emit(&trust_discount(&op, trust)?, out_belief, out_uncertainty)
    })
}

/// Belief-constraint fusion of n ≥ 1 opinions, left to right.
///
/// # Safety
/// `beliefs` must be valid for n·K reads, `uncertainties` for n,
/// `out_belief` for K writes and `out_uncertainty` for one.
#[no_mangle]
pub unsafe extern "C" fn tf_bcf_fuse(
    beliefs: *const f64,
    uncertainties: *const f64,
    n: usize,
    k: usize,
    out_belief: *mut f64,
    out_uncertainty: *mut f64,
) -> TfStatus {
    guard(|| {
        let ops = opinions(beliefs, uncertainties, n, k)?;
        emit(&bcf_fuse_all(&ops)?, out_belief, out_uncertainty)
    })
}

/// Discounts opinion i by `trusts[i]`, then fuses them all.
///
/// # Safety
/// As [`tf_bcf_fuse`], plus `trusts` valid for n reads.
#[no_mangle]
pub unsafe extern "C" fn tf_discounted_fuse(
    beliefs: *const f64,
    uncertainties: *const f64,
    trusts: *const f64,
    n: usize,
    k: usize,
    out_belief: *mut f64,
    out_uncertainty: *mut f64,
) -> TfStatus {
    guard(|| {
        let ops = opinions(beliefs, uncertainties, n, k)?;
        let trusts = input(trusts, n, "trusts")?;
        emit(&discounted_fuse(&ops, trusts)?, out_belief, out_uncertainty)
    })
}

/// A trained model.
pub struct TfModel {
    model: Model,
}

/// Loads a checkpoint written by `trustfuse train`.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn tf_model_load(path: *const c_char, out: *mut *mut TfModel) -> TfStatus {
    guard(|| {
        if path.is_null() {
            return Err(null("path"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| Fail(TfStatus::Domain, "path is not UTF-8".into()))?;
        let model = Model::load(path)?;
        *out = Box::into_raw(Box::new(TfModel { model }));
        Ok(())
    })
}

/// Releases a model; null is ignored.
///
/// # Safety
/// `model` must come from [`tf_model_load`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tf_model_free(model: *mut TfModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

unsafe fn model_ref<'a>(model: *const TfModel) -> Result<&'a Model, Fail> {
    model
        .as_ref()
        .map(|m| &m.model)
        .ok_or_else(|| null("model"))
}

/// Number of classes K.
///
/// # Safety
/// `model` must be a live handle; `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn tf_model_num_classes(model: *const TfModel, out: *mut usize) -> TfStatus {
    guard(|| write(out, model_ref(model)?.nets.num_classes, "out"))
}

/// Number of input views V the caller supplies to [`tf_model_predict`].
///
/// # Safety
/// `model` must be a live handle; `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn tf_model_num_views(model: *const TfModel, out: *mut usize) -> TfStatus {
    guard(|| write(out, model_ref(model)?.num_input_views(), "out"))
}

/// Feature dimension of input view `view` (0-based).
///
/// # Safety
/// `model` must be a live handle; `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn tf_model_view_dim(
    model: *const TfModel,
    view: usize,
    out: *mut usize,
) -> TfStatus {
    guard(|| {
        let dims = model_ref(model)?.input_dims();
        let dim = dims.get(view).ok_or_else(|| {
            Fail(
                TfStatus::Dimension,
                format!("view {view} out of range for {} views", dims.len()),
            )
        })?;
        write(out, *dim, "out")
    })
}

/// Predicts one instance from raw features.
///
/// `views[v]` points at `view_dims[v]` features of view v. Writes the label,
/// the fused belief (K values) and uncertainty. `out_trust` receives the
/// degree of trust of each model view (V, plus one with a pseudo-view) and
/// may be null.
///
/// # Safety
/// All pointers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn tf_model_predict(
    model: *const TfModel,
    views: *const *const f64,
    view_dims: *const usize,
    num_views: usize,
    out_label: *mut usize,
    out_belief: *mut f64,
    out_uncertainty: *mut f64,
    out_trust: *mut f64,
) -> TfStatus {
    guard(|| {
        let model = model_ref(model)?;
        if num_views != model.num_input_views() {
            return Err(Fail(
                TfStatus::Dimension,
                format!(
                    "model takes {} views, got {num_views}",
                    model.num_input_views()
                ),
            ));
        }
        if views.is_null() || view_dims.is_null() {
            return Err(null("views"));
        }
        let ptrs = slice::from_raw_parts(views, num_views);
        let dims = slice::from_raw_parts(view_dims, num_views);
        let rows = ptrs
            .iter()
            .zip(dims)
            .map(|(&p, &d)| input(p, d, "view"))
            .collect::<Result<Vec<_>, _>>()?;
        let p = model.predict_raw(&rows)?;
        write(out_label, p.label, "out_label")?;
        emit(&p.fused, out_belief, out_uncertainty)?;
        if !out_trust.is_null() {
            output(out_trust, p.view_trust.len(), "out_trust")?.copy_from_slice(&p.view_trust);
        }
        Ok(())
    })
}

/// Number of trust values [`tf_model_predict`] writes to `out_trust`.
///
/// # Safety
/// `model` must be a live handle; `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn tf_model_num_trust(model: *const TfModel, out: *mut usize) -> TfStatus {
    guard(|| write(out, model_ref(model)?.nets.num_views(), "out"))
}
