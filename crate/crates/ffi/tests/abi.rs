use std::ffi::{CStr, CString};
use std::ptr;

use slideloop_ffi::*;

const SLIDE: &str = r#"{"source_id":"t","canvas_width":12192000,"canvas_height":6858000,"elements":[{"id":"e0","kind":{"auto_shape":"rectangle"},"position":{"x":914400,"y":914400,"width":3657600,"height":914400,"rotation":0.0},"fill":{"mode":"solid","colors":[{"rgb":"1F3A5F"}],"transparency":0.0},"text":{"runs":[{"text":"Title","font_name":"Lato","font_size":28.0,"color":{"rgb":"FFFFFF"}}],"line_spacing":1.0,"alignment":"left"}},{"id":"e1","kind":{"auto_shape":"oval"},"position":{"x":5486400,"y":914400,"width":1828800,"height":1828800,"rotation":0.0},"fill":{"mode":"solid","colors":[{"rgb":"E4572E"}],"transparency":0.0}}]}"#;

fn take(s: *mut std::ffi::c_char) -> String {
    assert!(!s.is_null());
    let out = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_string();
    unsafe { sl_string_free(s) };
    out
}

fn last_error() -> Option<String> {
    let p = sl_last_error();
    (!p.is_null()).then(|| unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned())
}

fn parse(json: &str) -> *mut SlDoc {
    let c = CString::new(json).unwrap();
    let mut doc = ptr::null_mut();
    assert_eq!(unsafe { sl_doc_from_json(c.as_ptr(), &mut doc) }, SlStatus::Ok, "{:?}", last_error());
    doc
}

fn canonical() -> String {
    let doc = slideloop::model::from_json(SLIDE).unwrap();
    slideloop::model::to_json(&doc).unwrap()
}

#[test]
fn json_round_trips_through_a_handle() {
    let doc = parse(SLIDE);
    assert_eq!(unsafe { sl_doc_element_count(doc) }, 2);
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { sl_doc_to_json(doc, &mut out) }, SlStatus::Ok);
    assert_eq!(take(out), canonical());
    unsafe { sl_doc_free(doc) };
}

#[test]
fn errors_are_codes_with_a_thread_local_message() {
    let bad = CString::new("{\"elements\": 3}").unwrap();
    let mut doc = ptr::null_mut();
    assert_eq!(unsafe { sl_doc_from_json(bad.as_ptr(), &mut doc) }, SlStatus::InvalidJson);
    assert!(doc.is_null());
    assert!(last_error().is_some());

    assert_eq!(unsafe { sl_doc_from_json(ptr::null(), &mut doc) }, SlStatus::NullArgument);
    assert_eq!(unsafe { sl_doc_to_json(ptr::null(), ptr::null_mut()) }, SlStatus::NullArgument);

    let good = parse(SLIDE);
    assert!(last_error().is_none());
    unsafe { sl_doc_free(good) };

    let name = unsafe { CStr::from_ptr(sl_status_name(SlStatus::InvalidJson)) };
    assert_eq!(name.to_str().unwrap(), "invalid_json");
}

#[test]
fn render_validate_and_refine() {
    let doc = parse(SLIDE);
    let mut svg = ptr::null_mut();
    assert_eq!(unsafe { sl_doc_render_svg(doc, 0.0, false, &mut svg) }, SlStatus::Ok);
    let svg = take(svg);
    assert!(svg.starts_with("<svg") && svg.contains(r#"width="1280""#));

    let mut v = ptr::null_mut();
    assert_eq!(unsafe { sl_doc_validate(doc, &mut v) }, SlStatus::Ok);
    assert_eq!(take(v), "[]");

    let mut refined = ptr::null_mut();
    let mut trace = ptr::null_mut();
    assert_eq!(unsafe { sl_doc_refine(doc, 5, &mut refined, &mut trace) }, SlStatus::Ok);
    assert!(take(trace).contains("stop_reason"));
    assert_eq!(unsafe { sl_doc_tentative_count(refined) }, 0);
    unsafe {
        sl_doc_free(refined);
        sl_doc_free(doc);
    }
}

#[test]
fn perturbation_reverses_through_the_log() {
    let doc = parse(SLIDE);
    let mut draft = ptr::null_mut();
    let mut log = ptr::null_mut();
    assert_eq!(unsafe { sl_doc_perturb(doc, 11, 1.0, &mut draft, &mut log) }, SlStatus::Ok);
    let log = CString::new(take(log)).unwrap();
    let mut restored = ptr::null_mut();
    assert_eq!(unsafe { sl_doc_reverse_replay(draft, log.as_ptr(), &mut restored) }, SlStatus::Ok);
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { sl_doc_to_json(restored, &mut out) }, SlStatus::Ok);
    assert_eq!(take(out), canonical());

    let mut again = ptr::null_mut();
    let mut log2 = ptr::null_mut();
    assert_eq!(unsafe { sl_doc_perturb(doc, 0, 1.5, &mut again, &mut log2) }, SlStatus::Perturb);
    unsafe {
        sl_doc_free(restored);
        sl_doc_free(draft);
        sl_doc_free(doc);
    }
}

#[test]
fn pptx_export_then_ingest() {
    let doc = parse(SLIDE);
    let mut bytes = SlBytes { data: ptr::null_mut(), len: 0 };
    assert_eq!(unsafe { sl_doc_export_pptx(doc, &mut bytes) }, SlStatus::Ok);
    assert!(bytes.len > 0);
    let mut back = ptr::null_mut();
    assert_eq!(unsafe { sl_doc_from_pptx(bytes.data, bytes.len, 0, &mut back) }, SlStatus::Ok);
    assert_eq!(unsafe { sl_doc_element_count(back) }, 2);
    let mut missing = ptr::null_mut();
    assert_eq!(unsafe { sl_doc_from_pptx(bytes.data, bytes.len, 3, &mut missing) }, SlStatus::Ingest);
    unsafe {
        sl_bytes_free(&mut bytes);
        sl_doc_free(back);
        sl_doc_free(doc);
    }
    assert!(bytes.data.is_null());

    let junk = b"not a zip";
    assert_eq!(unsafe { sl_doc_from_pptx(junk.as_ptr(), junk.len(), 0, &mut missing) }, SlStatus::Ingest);
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/slideloop.h")).unwrap();
    for name in [
        "typedef struct SlDoc SlDoc",
        "SL_STATUS_OK = 0",
        "SL_STATUS_PANIC",
        "sl_doc_from_json",
        "sl_doc_to_json",
        "sl_doc_render_svg",
        "sl_doc_perturb",
        "sl_doc_reverse_replay",
        "sl_doc_refine",
        "sl_doc_from_pptx",
        "sl_doc_export_pptx",
        "sl_doc_free",
        "sl_string_free",
        "sl_bytes_free",
        "sl_last_error",
    ] {
        assert!(header.contains(name), "{name}");
    }
}
