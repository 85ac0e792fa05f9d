//! C ABI over `insitu-core`.
//!
//! Every fallible function returns an [`InsituStatus`]; on failure a message
//! is available from [`insitu_last_error`] until the next call on the same
//! thread. Handles are opaque and must be released with their `_free`
//! function. Strings returned as `char*` are owned by the caller and released
//! with [`insitu_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::OnceLock;

use insitu_core::design::{set_parameter, set_pose, Configuration, Design, DesignError, EditMode, ParamValue};
use insitu_core::dsl::{builtin, list_builtin};
use insitu_core::environment::{load_scene, EnvironmentScene, ScanFormat, SupportPlane};
use insitu_core::estimators::{check_requirements, estimate_stability, estimate_stability_in, RequirementSpec};
use insitu_core::geometry::{export_stl, generate_mesh};
use insitu_core::math::Vec3;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InsituStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    UnknownDesign = 3,
    UnknownParameter = 4,
    KindMismatch = 5,
    InvalidArgument = 6,
    Geometry = 7,
    Parse = 8,
    Estimation = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InsituScanFormat {
    Obj = 0,
    Ply = 1,
}

/// A design plus its committed configuration.
pub struct InsituSession {
    design: &'static Design,
    config: Configuration,
}

/// An imported environment scan with detected support planes.
pub struct InsituScene {
    scene: EnvironmentScene,
}

/// Heap bytes owned by the caller; release with [`insitu_buffer_free`].
#[repr(C)]
pub struct InsituBuffer {
    pub data: *mut u8,
    pub len: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct InsituStability {
    pub toppled: bool,
    pub settled: bool,
    pub tilt_deg: f64,
    pub quasi_static_margin: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure(InsituStatus, String);

impl From<DesignError> for Failure {
    fn from(e: DesignError) -> Self {
        let status = match e {
            DesignError::UnknownDesign(_) => InsituStatus::UnknownDesign,
            DesignError::UnknownParameter(_) => InsituStatus::UnknownParameter,
            DesignError::KindMismatch { .. } | DesignError::NonLengthParameter(_) => InsituStatus::KindMismatch,
            _ => InsituStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn fail(status: InsituStatus, e: impl ToString) -> Failure {
    Failure(status, e.to_string())
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> InsituStatus {
    set_error("");
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => InsituStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            InsituStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(fail(InsituStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(p).to_str().map_err(|e| fail(InsituStatus::InvalidUtf8, e))
}

unsafe fn handle<'a, T>(p: *const T) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| fail(InsituStatus::NullPointer, "null handle"))
}

unsafe fn handle_mut<'a, T>(p: *mut T) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| fail(InsituStatus::NullPointer, "null handle"))
}

unsafe fn out<'a, T>(p: *mut T) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| fail(InsituStatus::NullPointer, "null output pointer"))
}

fn owned_string(s: String) -> Result<*mut c_char, Failure> {
    Ok(CString::new(s).map_err(|e| fail(InsituStatus::InvalidArgument, e))?.into_raw())
}

/// Message for the last failed call on this thread; empty after success.
/// Valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn insitu_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

#[no_mangle]
pub extern "C" fn insitu_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

fn design_ids() -> &'static [CString] {
    static IDS: OnceLock<Vec<CString>> = OnceLock::new();
    IDS.get_or_init(|| list_builtin().iter().map(|d| CString::new(d.id.as_str()).unwrap()).collect())
}

#[no_mangle]
pub extern "C" fn insitu_design_count() -> usize {
    design_ids().len()
}

/// Catalog id at `index`, or null when out of range. Static storage.
#[no_mangle]
pub extern "C" fn insitu_design_id(index: usize) -> *const c_char {
    design_ids().get(index).map_or(ptr::null(), |c| c.as_ptr())
}

/// # Safety
/// `design_id` must be a NUL-terminated string; `out_session` must be writable.
#[no_mangle]
pub unsafe extern "C" fn insitu_session_new(design_id: *const c_char, out_session: *mut *mut InsituSession) -> InsituStatus {
    guard(|| {
        let out_session = out(out_session)?;
        let id = str_arg(design_id)?;
        let design = builtin(id).ok_or_else(|| fail(InsituStatus::UnknownDesign, format!("unknown design {id}")))?;
        *out_session = Box::into_raw(Box::new(InsituSession { design, config: design.default_configuration() }));
        Ok(())
    })
}

/// # Safety
/// `session` must come from [`insitu_session_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn insitu_session_free(session: *mut InsituSession) {
    if !session.is_null() {
        drop(Box::from_raw(session));
    }
}

unsafe fn commit(
    session: *mut InsituSession,
    name: *const c_char,
    value: ParamValue,
    snapped_back: *mut bool,
) -> InsituStatus {
    guard(|| {
        let s = handle_mut(session)?;
        let name = str_arg(name)?;
        let outcome = set_parameter(s.design, &s.config, name, value, EditMode::Commit)?;
        if let Some(c) = outcome.committed() {
            s.config = c.clone();
        }
        if let Some(flag) = snapped_back.as_mut() {
            *flag = outcome.is_snapped_back();
        }
        Ok(())
    })
}

/// Commits a numeric value. A rejected value leaves the configuration
/// unchanged, returns `Ok` and sets `*snapped_back` (which may be null).
///
/// # Safety
/// Pointers must be valid; `name` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn insitu_session_set_number(
    session: *mut InsituSession,
    name: *const c_char,
    value: f64,
    snapped_back: *mut bool,
) -> InsituStatus {
    commit(session, name, ParamValue::Number(value), snapped_back)
}

/// # Safety
/// Pointers must be valid; `name` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn insitu_session_set_bool(
    session: *mut InsituSession,
    name: *const c_char,
    value: bool,
    snapped_back: *mut bool,
) -> InsituStatus {
    commit(session, name, ParamValue::Bool(value), snapped_back)
}

/// # Safety
/// Pointers must be valid; `name` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn insitu_session_get_number(
    session: *const InsituSession,
    name: *const c_char,
    value: *mut f64,
) -> InsituStatus {
    guard(|| {
        let s = handle(session)?;
        let name = str_arg(name)?;
        let v = match s.config.value(name) {
            None => return Err(fail(InsituStatus::UnknownParameter, format!("unknown parameter {name}"))),
            Some(v) => v.as_number().ok_or_else(|| fail(InsituStatus::KindMismatch, format!("{name} is not numeric")))?,
        };
        *out(value)? = v;
        Ok(())
    })
}

/// # Safety
/// `session` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn insitu_session_set_pose(session: *mut InsituSession, x: f64, y: f64, z: f64, yaw: f64) -> InsituStatus {
    guard(|| {
        let s = handle_mut(session)?;
        if ![x, y, z, yaw].iter().all(|v| v.is_finite()) {
            return Err(fail(InsituStatus::InvalidArgument, "pose must be finite"));
        }
        s.config = set_pose(&s.config, Vec3::new(x, y, z), yaw);
        Ok(())
    })
}

/// Committed configuration as JSON. Free with [`insitu_string_free`].
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn insitu_session_config_json(session: *const InsituSession, json: *mut *mut c_char) -> InsituStatus {
    guard(|| {
        let s = handle(session)?;
        let text = serde_json::to_string(&s.config).map_err(|e| fail(InsituStatus::InvalidArgument, e))?;
        *out(json)? = owned_string(text)?;
        Ok(())
    })
}

/// Binary STL of the posed design.
///
/// # Safety
/// Pointers must be valid. Free the buffer with [`insitu_buffer_free`].
#[no_mangle]
pub unsafe extern "C" fn insitu_session_export_stl(session: *const InsituSession, buffer: *mut InsituBuffer) -> InsituStatus {
    guard(|| {
        let s = handle(session)?;
        let buffer = out(buffer)?;
        let mesh = generate_mesh(s.design, &s.config).map_err(|e| fail(InsituStatus::Geometry, e))?;
        let bytes = export_stl(&mesh).map_err(|e| fail(InsituStatus::Geometry, e))?.into_boxed_slice();
        buffer.len = bytes.len();
        buffer.data = Box::into_raw(bytes).cast();
        Ok(())
    })
}

/// # Safety
/// `buffer` must have been filled by this library or zeroed.
#[no_mangle]
pub unsafe extern "C" fn insitu_buffer_free(buffer: *mut InsituBuffer) {
    if let Some(b) = buffer.as_mut() {
        if !b.data.is_null() {
            drop(Box::from_raw(ptr::slice_from_raw_parts_mut(b.data, b.len)));
        }
        b.data = ptr::null_mut();
        b.len = 0;
    }
}

/// # Safety
/// `s` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn insitu_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Imports a Y-up scan and detects support planes. `format` is an
/// [`InsituScanFormat`] value.
///
/// # Safety
/// `data` must point to `len` readable bytes; `out_scene` must be writable.
#[no_mangle]
pub unsafe extern "C" fn insitu_scene_load(
    data: *const u8,
    len: usize,
    format: u32,
    out_scene: *mut *mut InsituScene,
) -> InsituStatus {
    guard(|| {
        let out_scene = out(out_scene)?;
        if data.is_null() {
            return Err(fail(InsituStatus::NullPointer, "null scan data"));
        }
        let bytes = std::slice::from_raw_parts(data, len);
        let format = match format {
            f if f == InsituScanFormat::Obj as u32 => ScanFormat::Obj,
            f if f == InsituScanFormat::Ply as u32 => ScanFormat::Ply,
            f => return Err(fail(InsituStatus::InvalidArgument, format!("unknown scan format {f}"))),
        };
        let scene = load_scene(bytes, format).map_err(|e| fail(InsituStatus::Parse, e))?;
        *out_scene = Box::into_raw(Box::new(InsituScene { scene }));
        Ok(())
    })
}

/// # Safety
/// `scene` must come from [`insitu_scene_load`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn insitu_scene_free(scene: *mut InsituScene) {
    if !scene.is_null() {
        drop(Box::from_raw(scene));
    }
}

/// Number of detected support planes; 0 for a null handle.
///
/// # Safety
/// `scene` must be a valid handle or null.
#[no_mangle]
pub unsafe extern "C" fn insitu_scene_plane_count(scene: *const InsituScene) -> usize {
    scene.as_ref().map_or(0, |s| s.scene.planes.len())
}

/// Drops the design onto the support plane below it. With a null scene
/// the design stands on a level floor at its lowest point.
///
/// # Safety
/// `session` and `report` must be valid; `scene` valid or null.
#[no_mangle]
pub unsafe extern "C" fn insitu_estimate_stability(
    session: *const InsituSession,
    scene: *const InsituScene,
    report: *mut InsituStability,
) -> InsituStatus {
    guard(|| {
        let s = handle(session)?;
        let report = out(report)?;
        let mesh = generate_mesh(s.design, &s.config).map_err(|e| fail(InsituStatus::Geometry, e))?;
        let r = match scene.as_ref() {
            Some(sc) => estimate_stability_in(&mesh, &sc.scene),
            None => estimate_stability(&mesh, &SupportPlane::horizontal(mesh.bbox().min.y)),
        }
        .map_err(|e| fail(InsituStatus::Estimation, e))?;
        *report = InsituStability {
            toppled: r.toppled,
            settled: r.settled,
            tilt_deg: r.tilt_deg,
            quasi_static_margin: r.quasi_static_margin,
        };
        Ok(())
    })
}

/// Evaluates a requirement spec given as JSON. Results are written as a
/// JSON array to `*results_json` (free with [`insitu_string_free`]).
///
/// # Safety
/// Pointers must be valid; `scene` may be null.
#[no_mangle]
pub unsafe extern "C" fn insitu_check_requirements(
    session: *const InsituSession,
    scene: *const InsituScene,
    spec_json: *const c_char,
    all_passed: *mut bool,
    results_json: *mut *mut c_char,
) -> InsituStatus {
    guard(|| {
        let s = handle(session)?;
        let spec: RequirementSpec =
            serde_json::from_str(str_arg(spec_json)?).map_err(|e| fail(InsituStatus::Parse, e))?;
        let mesh = generate_mesh(s.design, &s.config).map_err(|e| fail(InsituStatus::Geometry, e))?;
        let results = check_requirements(s.design, &s.config, &mesh, scene.as_ref().map(|sc| &sc.scene), &spec)
            .map_err(|e| fail(InsituStatus::Estimation, e))?;
        let text = serde_json::to_string(&results).map_err(|e| fail(InsituStatus::InvalidArgument, e))?;
        *out(all_passed)? = results.iter().all(|r| r.passed);
        *out(results_json)? = owned_string(text)?;
        Ok(())
    })
}
