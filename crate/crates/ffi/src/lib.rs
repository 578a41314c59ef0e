//! C ABI over the syntaxprobe core.
//!
//! Conventions:
//! - every fallible function returns an `SpStatus` and writes its result
//!   through an out-pointer;
//! - on failure `sp_last_error()` describes the most recent error on the
//!   calling thread;
//! - handles (`SpTree`, `SpTable`) and strings returned by the library are
//!   released with the matching `*_free` function;
//! - matrices are dense, row-major `double` buffers.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use nalgebra::DMatrix;
use syntaxprobe::features::{cosine_similarity, EmbeddingTable, FeatureError};
use syntaxprobe::probekit::{r2_score, ridge_fit, ProbeError};
use syntaxprobe::treebank::{delexicalize, parse_ptb, tree_depth, ConstituencyTree};
use syntaxprobe::treekernel::{gram_matrix, normalized_kernel, raw_kernel, KernelError, KernelParams};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ParseError = 3,
    IoError = 4,
    FormatError = 5,
    NumericalError = 6,
    Panic = 7,
}

/// Opaque constituency tree.
pub struct SpTree(ConstituencyTree);

/// Opaque embedding table with its utterance IDs.
pub struct SpTable(EmbeddingTable);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure(SpStatus, String);

impl From<KernelError> for Failure {
    fn from(e: KernelError) -> Self {
        Failure(SpStatus::InvalidArgument, e.to_string())
    }
}

impl From<FeatureError> for Failure {
    fn from(e: FeatureError) -> Self {
        let status = match e {
            FeatureError::Io { .. } => SpStatus::IoError,
            FeatureError::ZeroVector => SpStatus::NumericalError,
            FeatureError::LengthMismatch(..) | FeatureError::InvalidArgument(_) => SpStatus::InvalidArgument,
            _ => SpStatus::FormatError,
        };
        Failure(status, e.to_string())
    }
}

impl From<ProbeError> for Failure {
    fn from(e: ProbeError) -> Self {
        let status = match e {
            ProbeError::SingularSystem | ProbeError::NaNInput | ProbeError::ZeroVariance => {
                SpStatus::NumericalError
            }
            _ => SpStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            SpStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("internal panic: {msg}"));
            SpStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(SpStatus::NullPointer, format!("{what} is NULL"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(SpStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

fn params(lambda: f64) -> Result<KernelParams, Failure> {
    Ok(KernelParams::new(lambda)?)
}

fn into_c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Failure(SpStatus::FormatError, "string contains NUL".into()))
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn sp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn sp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses one bracketed tree.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out_tree` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sp_tree_parse(text: *const c_char, out_tree: *mut *mut SpTree) -> SpStatus {
    guard(|| {
        let out_tree = out(out_tree, "out_tree")?;
        *out_tree = ptr::null_mut();
        let tree = parse_ptb(c_str(text, "text")?).map_err(|e| Failure(SpStatus::ParseError, e.to_string()))?;
        *out_tree = Box::into_raw(Box::new(SpTree(tree)));
        Ok(())
    })
}

/// Releases a tree. NULL is ignored.
///
/// # Safety
/// `tree` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn sp_tree_free(tree: *mut SpTree) {
    if !tree.is_null() {
        drop(Box::from_raw(tree));
    }
}

/// Nodes on the longest root-to-leaf path.
///
/// # Safety
/// `tree` must be a live handle; `out_depth` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sp_tree_depth(tree: *const SpTree, out_depth: *mut usize) -> SpStatus {
    guard(|| {
        *out(out_depth, "out_depth")? = tree_depth(&deref(tree, "tree")?.0);
        Ok(())
    })
}

/// # Safety
/// `tree` must be a live handle; `out_count` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sp_tree_node_count(tree: *const SpTree, out_count: *mut usize) -> SpStatus {
    guard(|| {
        *out(out_count, "out_count")? = deref(tree, "tree")?.0.node_count();
        Ok(())
    })
}

/// New tree without terminal words; the input is left untouched.
///
/// # Safety
/// `tree` must be a live handle; `out_tree` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sp_tree_delexicalize(tree: *const SpTree, out_tree: *mut *mut SpTree) -> SpStatus {
    guard(|| {
        let out_tree = out(out_tree, "out_tree")?;
        *out_tree = Box::into_raw(Box::new(SpTree(delexicalize(&deref(tree, "tree")?.0))));
        Ok(())
    })
}

/// Canonical bracketing; free with `sp_string_free`.
///
/// # Safety
/// `tree` must be a live handle; `out_text` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sp_tree_to_string(tree: *const SpTree, out_text: *mut *mut c_char) -> SpStatus {
    guard(|| {
        let out_text = out(out_text, "out_text")?;
        *out_text = into_c_string(deref(tree, "tree")?.0.to_string())?;
        Ok(())
    })
}

/// Unnormalized subset-tree kernel of two delexicalized trees.
///
/// # Safety
/// Both handles must be live; `out_value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sp_kernel_raw(
    a: *const SpTree,
    b: *const SpTree,
    lambda: f64,
    out_value: *mut f64,
) -> SpStatus {
    guard(|| {
        *out(out_value, "out_value")? = raw_kernel(&deref(a, "a")?.0, &deref(b, "b")?.0, params(lambda)?)?;
        Ok(())
    })
}

/// Kernel normalized to 1 on identical trees.
///
/// # Safety
/// Both handles must be live; `out_value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sp_kernel_normalized(
    a: *const SpTree,
    b: *const SpTree,
    lambda: f64,
    out_value: *mut f64,
) -> SpStatus {
    guard(|| {
        *out(out_value, "out_value")? =
            normalized_kernel(&deref(a, "a")?.0, &deref(b, "b")?.0, params(lambda)?)?;
        Ok(())
    })
}

/// Normalized Gram matrix of `n` trees into `out_matrix` (`n * n`).
///
/// # Safety
/// `trees` must point to `n` live handles; `out_matrix` to `n * n` doubles.
#[no_mangle]
pub unsafe extern "C" fn sp_gram_matrix(
    trees: *const *const SpTree,
    n: usize,
    lambda: f64,
    out_matrix: *mut f64,
) -> SpStatus {
    guard(|| {
        let handles = slice(trees, n, "trees")?;
        let owned: Vec<ConstituencyTree> = handles
            .iter()
            .enumerate()
            .map(|(i, &h)| deref(h, &format!("trees[{i}]")).map(|t| t.0.clone()))
            .collect::<Result<_, _>>()?;
        let gram = gram_matrix(&owned, params(lambda)?)?;
        let dst = slice_mut(out_matrix, n * n, "out_matrix")?;
        for i in 0..n {
            for j in 0..n {
                dst[i * n + j] = gram[(i, j)];
            }
        }
        Ok(())
    })
}

/// Reads a WEMB file and its JSONL manifest (`<path>.jsonl` next to it, or
/// `manifest.jsonl` in the same directory).
///
/// # Safety
/// `path` must be a NUL-terminated string; `out_table` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sp_table_read(path: *const c_char, out_table: *mut *mut SpTable) -> SpStatus {
    guard(|| {
        let out_table = out(out_table, "out_table")?;
        *out_table = ptr::null_mut();
        let table = EmbeddingTable::load(Path::new(c_str(path, "path")?))?;
        *out_table = Box::into_raw(Box::new(SpTable(table)));
        Ok(())
    })
}

/// Releases a table. NULL is ignored.
///
/// # Safety
/// `table` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn sp_table_free(table: *mut SpTable) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}

/// Writes rows, dim and layer id; any out-pointer may be NULL.
///
/// # Safety
/// `table` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sp_table_shape(
    table: *const SpTable,
    out_rows: *mut usize,
    out_dim: *mut usize,
    out_layer_id: *mut u32,
) -> SpStatus {
    guard(|| {
        let t = &deref(table, "table")?.0;
        if let Some(r) = out_rows.as_mut() {
            *r = t.rows();
        }
        if let Some(d) = out_dim.as_mut() {
            *d = t.dim();
        }
        if let Some(l) = out_layer_id.as_mut() {
            *l = t.layer_id();
        }
        Ok(())
    })
}

/// Copies row `row` into `out_values`, which must hold `len == dim` floats.
///
/// # Safety
/// `table` must be a live handle; `out_values` must hold `len` floats.
#[no_mangle]
pub unsafe extern "C" fn sp_table_row(
    table: *const SpTable,
    row: usize,
    out_values: *mut f32,
    len: usize,
) -> SpStatus {
    guard(|| {
        let t = &deref(table, "table")?.0;
        if row >= t.rows() {
            return Err(Failure(SpStatus::InvalidArgument, format!("row {row} out of range ({} rows)", t.rows())));
        }
        if len != t.dim() {
            return Err(Failure(SpStatus::InvalidArgument, format!("buffer holds {len} floats, dim is {}", t.dim())));
        }
        slice_mut(out_values, len, "out_values")?.copy_from_slice(t.row(row));
        Ok(())
    })
}

/// Utterance ID of row `row`; free with `sp_string_free`.
///
/// # Safety
/// `table` must be a live handle; `out_id` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sp_table_id(table: *const SpTable, row: usize, out_id: *mut *mut c_char) -> SpStatus {
    guard(|| {
        let t = &deref(table, "table")?.0;
        let id = t
            .manifest()
            .get(row)
            .ok_or_else(|| Failure(SpStatus::InvalidArgument, format!("row {row} out of range ({} rows)", t.rows())))?;
        *out(out_id, "out_id")? = into_c_string(id.clone())?;
        Ok(())
    })
}

/// Cosine similarity of two length-`n` vectors.
///
/// # Safety
/// `u` and `v` must hold `n` doubles; `out_value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sp_cosine(u: *const f64, v: *const f64, n: usize, out_value: *mut f64) -> SpStatus {
    guard(|| {
        *out(out_value, "out_value")? = cosine_similarity(slice(u, n, "u")?, slice(v, n, "v")?)?;
        Ok(())
    })
}

/// Ridge regression of `y` (`n x q`) on `x` (`n x p`) with centering.
/// Writes `p * q` weights and `q` intercepts.
///
/// # Safety
/// All buffers must have the stated sizes.
#[no_mangle]
pub unsafe extern "C" fn sp_ridge_fit(
    x: *const f64,
    n: usize,
    p: usize,
    y: *const f64,
    q: usize,
    alpha: f64,
    out_weights: *mut f64,
    out_intercept: *mut f64,
) -> SpStatus {
    guard(|| {
        let xm = DMatrix::from_row_slice(n, p, slice(x, n * p, "x")?);
        let ym = DMatrix::from_row_slice(n, q, slice(y, n * q, "y")?);
        let model = ridge_fit(&xm, &ym, alpha)?;
        let w = slice_mut(out_weights, p * q, "out_weights")?;
        for i in 0..p {
            for j in 0..q {
                w[i * q + j] = model.weights[(i, j)];
            }
        }
        slice_mut(out_intercept, q, "out_intercept")?.copy_from_slice(model.intercept.as_slice());
        Ok(())
    })
}

/// R² averaged uniformly over the `q` columns; constant columns score 0.
///
/// # Safety
/// `y_true` and `y_pred` must hold `n * q` doubles.
#[no_mangle]
pub unsafe extern "C" fn sp_r2_score(
    y_true: *const f64,
    y_pred: *const f64,
    n: usize,
    q: usize,
    out_value: *mut f64,
) -> SpStatus {
    guard(|| {
        if n == 0 || q == 0 {
            return Err(Failure(SpStatus::InvalidArgument, "empty score matrix".into()));
        }
        let t = DMatrix::from_row_slice(n, q, slice(y_true, n * q, "y_true")?);
        let p = DMatrix::from_row_slice(n, q, slice(y_pred, n * q, "y_pred")?);
        *out(out_value, "out_value")? = r2_score(&t, &p).value;
        Ok(())
    })
}
