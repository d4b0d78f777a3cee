//! C ABI over the slideloop library.
//!
//! Documents cross the boundary as opaque [`SlDoc`] handles. Every fallible
//! function returns an [`SlStatus`]; on failure the message is available from
//! [`sl_last_error`] on the same thread until the next call. Strings handed
//! out by the library are NUL-terminated UTF-8 and must be released with
//! [`sl_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use slideloop::model::{from_json, to_json, validate, Deck, SlideDoc, Status};
use slideloop::orchestrator::{refine, RefineOptions};
use slideloop::perturb::{perturb, reverse_replay, PerturbConfig, PerturbationLog};
use slideloop::pptx::{export_pptx, load_pptx};
use slideloop::render::{render_svg, RenderOptions};
use slideloop::roles::{HeuristicContributor, HeuristicReviewer};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    InvalidJson = 3,
    InvalidDocument = 4,
    Perturb = 5,
    Ingest = 6,
    Export = 7,
    Backend = 8,
    Panic = 9,
}

/// Opaque slide document.
pub struct SlDoc {
    doc: SlideDoc,
}

/// Owned byte buffer returned by [`sl_doc_export_pptx`].
#[repr(C)]
pub struct SlBytes {
    pub data: *mut u8,
    pub len: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

type Fallible = Result<(), (SlStatus, String)>;

fn guard(f: impl FnOnce() -> Fallible) -> SlStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SlStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            SlStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, (SlStatus, String)> {
    if p.is_null() {
        return Err((SlStatus::NullArgument, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| (SlStatus::InvalidUtf8, format!("{name}: {e}")))
}

unsafe fn doc_arg<'a>(p: *const SlDoc) -> Result<&'a SlideDoc, (SlStatus, String)> {
    p.as_ref()
        .map(|d| &d.doc)
        .ok_or((SlStatus::NullArgument, "doc is null".into()))
}

fn out_null(name: &str) -> (SlStatus, String) {
    (SlStatus::NullArgument, format!("{name} is null"))
}

fn into_c(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).map_or(ptr::null_mut(), CString::into_raw)
}

fn boxed(doc: SlideDoc) -> *mut SlDoc {
    Box::into_raw(Box::new(SlDoc { doc }))
}

/// Message of the last failed call on this thread, or null. Owned by the
/// library and valid until the next call.
#[no_mangle]
pub extern "C" fn sl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Static name of a status code.
#[no_mangle]
pub extern "C" fn sl_status_name(status: SlStatus) -> *const c_char {
    let s: &'static CStr = match status {
        SlStatus::Ok => c"ok",
        SlStatus::NullArgument => c"null_argument",
        SlStatus::InvalidUtf8 => c"invalid_utf8",
        SlStatus::InvalidJson => c"invalid_json",
        SlStatus::InvalidDocument => c"invalid_document",
        SlStatus::Perturb => c"perturb",
        SlStatus::Ingest => c"ingest",
        SlStatus::Export => c"export",
        SlStatus::Backend => c"backend",
        SlStatus::Panic => c"panic",
    };
    s.as_ptr()
}

/// Parses canonical slide JSON.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn sl_doc_from_json(json: *const c_char, out: *mut *mut SlDoc) -> SlStatus {
    guard(|| {
        let text = str_arg(json, "json")?;
        if out.is_null() {
            return Err(out_null("out"));
        }
        let doc = from_json(text).map_err(|e| (SlStatus::InvalidJson, e.to_string()))?;
        *out = boxed(doc);
        Ok(())
    })
}

/// Writes the canonical JSON of `doc` to `*out`.
///
/// # Safety
/// `doc` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn sl_doc_to_json(doc: *const SlDoc, out: *mut *mut c_char) -> SlStatus {
    guard(|| {
        let doc = doc_arg(doc)?;
        if out.is_null() {
            return Err(out_null("out"));
        }
        let text = to_json(doc).map_err(|e| (SlStatus::InvalidDocument, e.to_string()))?;
        *out = into_c(text);
        Ok(())
    })
}

/// Number of elements, or 0 for a null handle.
///
/// # Safety
/// `doc` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sl_doc_element_count(doc: *const SlDoc) -> usize {
    doc.as_ref().map_or(0, |d| d.doc.elements.len())
}

/// Number of TENTATIVE elements, or 0 for a null handle.
///
/// # Safety
/// `doc` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sl_doc_tentative_count(doc: *const SlDoc) -> usize {
    doc.as_ref()
        .map_or(0, |d| d.doc.elements.iter().filter(|e| e.status == Status::Tentative).count())
}

/// Writes the validation violations of `doc` to `*out` as a JSON array of
/// strings; an empty array means the document is valid.
///
/// # Safety
/// `doc` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn sl_doc_validate(doc: *const SlDoc, out: *mut *mut c_char) -> SlStatus {
    guard(|| {
        let doc = doc_arg(doc)?;
        if out.is_null() {
            return Err(out_null("out"));
        }
        let v: Vec<String> = validate(doc).iter().map(ToString::to_string).collect();
        *out = into_c(serde_json::to_string(&v).expect("strings serialize"));
        Ok(())
    })
}

/// Renders `doc` to SVG. `pixels_per_inch <= 0` selects 96.
///
/// # Safety
/// `doc` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn sl_doc_render_svg(
    doc: *const SlDoc,
    pixels_per_inch: f64,
    highlight_tentative: bool,
    out: *mut *mut c_char,
) -> SlStatus {
    guard(|| {
        let doc = doc_arg(doc)?;
        if out.is_null() {
            return Err(out_null("out"));
        }
        let mut opts = RenderOptions {
            highlight_tentative,
            ..RenderOptions::default()
        };
        if pixels_per_inch > 0.0 {
            opts.pixels_per_inch = pixels_per_inch;
        }
        *out = into_c(render_svg(doc, &opts));
        Ok(())
    })
}

/// Perturbs `doc` with every kind enabled. The draft goes to `*out_doc` and
/// the perturbation log, as JSON, to `*out_log`.
///
/// # Safety
/// `doc` must be a live handle; `out_doc` and `out_log` writable pointers.
#[no_mangle]
pub unsafe extern "C" fn sl_doc_perturb(
    doc: *const SlDoc,
    seed: u64,
    severity: f64,
    out_doc: *mut *mut SlDoc,
    out_log: *mut *mut c_char,
) -> SlStatus {
    guard(|| {
        let doc = doc_arg(doc)?;
        if out_doc.is_null() || out_log.is_null() {
            return Err(out_null("output pointer"));
        }
        let (draft, log) = perturb(doc, &PerturbConfig::new(seed, severity)).map_err(|e| (SlStatus::Perturb, e.to_string()))?;
        *out_doc = boxed(draft);
        *out_log = into_c(log.to_json());
        Ok(())
    })
}

/// Undoes a perturbation given its log JSON.
///
/// # Safety
/// `doc` must be a live handle, `log_json` a NUL-terminated string and `out`
/// a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn sl_doc_reverse_replay(doc: *const SlDoc, log_json: *const c_char, out: *mut *mut SlDoc) -> SlStatus {
    guard(|| {
        let doc = doc_arg(doc)?;
        let text = str_arg(log_json, "log_json")?;
        if out.is_null() {
            return Err(out_null("out"));
        }
        let log = PerturbationLog::from_json(text).map_err(|e| (SlStatus::InvalidJson, e.to_string()))?;
        let original = reverse_replay(doc, &log).map_err(|e| (SlStatus::Perturb, e.to_string()))?;
        *out = boxed(original);
        Ok(())
    })
}

/// Runs the heuristic refinement loop. The final doc goes to `*out_doc`;
/// when `out_trace` is not null the trace JSON is written there too.
///
/// # Safety
/// `doc` must be a live handle and `out_doc` a writable pointer; `out_trace`
/// may be null.
#[no_mangle]
pub unsafe extern "C" fn sl_doc_refine(
    doc: *const SlDoc,
    max_iterations: u32,
    out_doc: *mut *mut SlDoc,
    out_trace: *mut *mut c_char,
) -> SlStatus {
    guard(|| {
        let doc = doc_arg(doc)?;
        if out_doc.is_null() {
            return Err(out_null("out_doc"));
        }
        let opts = RefineOptions {
            max_iterations: max_iterations as usize,
            ..RefineOptions::default()
        };
        let trace = refine(doc, &HeuristicReviewer::default(), &HeuristicContributor::default(), &opts);
        if let Some(e) = &trace.error {
            return Err((SlStatus::Backend, e.clone()));
        }
        *out_doc = boxed(trace.final_doc().clone());
        if !out_trace.is_null() {
            *out_trace = into_c(trace.to_json());
        }
        Ok(())
    })
}

/// Reads slide `index` of a .pptx archive.
///
/// # Safety
/// `bytes` must point to `len` readable bytes and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn sl_doc_from_pptx(bytes: *const u8, len: usize, index: usize, out: *mut *mut SlDoc) -> SlStatus {
    guard(|| {
        if bytes.is_null() || out.is_null() {
            return Err(out_null("bytes or out"));
        }
        let data = std::slice::from_raw_parts(bytes, len);
        let (deck, _) = load_pptx(data).map_err(|e| (SlStatus::Ingest, e.to_string()))?;
        let count = deck.slides.len();
        let doc = deck
            .slides
            .into_iter()
            .nth(index)
            .ok_or_else(|| (SlStatus::Ingest, format!("slide {index} out of range ({count} slides)")))?;
        *out = boxed(doc);
        Ok(())
    })
}

/// Exports `doc` as a one-slide .pptx archive. Release with
/// [`sl_bytes_free`].
///
/// # Safety
/// `doc` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn sl_doc_export_pptx(doc: *const SlDoc, out: *mut SlBytes) -> SlStatus {
    guard(|| {
        let doc = doc_arg(doc)?;
        if out.is_null() {
            return Err(out_null("out"));
        }
        let deck = Deck {
            title: doc.source_id.clone(),
            slides: vec![doc.clone()],
        };
        let bytes = export_pptx(&deck).map_err(|e| (SlStatus::Export, e.to_string()))?;
        let boxed = bytes.into_boxed_slice();
        let len = boxed.len();
        *out = SlBytes {
            data: Box::into_raw(boxed) as *mut u8,
            len,
        };
        Ok(())
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `doc` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sl_doc_free(doc: *mut SlDoc) {
    if !doc.is_null() {
        drop(Box::from_raw(doc));
    }
}

/// Releases a string returned by the library. Null is ignored.
///
/// # Safety
/// `s` must be null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Releases a buffer from [`sl_doc_export_pptx`] and resets it.
///
/// # Safety
/// `bytes` must be null or point to a buffer from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sl_bytes_free(bytes: *mut SlBytes) {
    let Some(b) = bytes.as_mut() else { return };
    if !b.data.is_null() {
        drop(Box::from_raw(ptr::slice_from_raw_parts_mut(b.data, b.len)));
    }
    b.data = ptr::null_mut();
    b.len = 0;
}
