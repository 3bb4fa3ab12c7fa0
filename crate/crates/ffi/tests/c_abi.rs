use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use sicseq_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(sicseq_last_error()) }.to_string_lossy().into_owned()
}

#[test]
fn version_is_crate_version() {
    let v = unsafe { CStr::from_ptr(sicseq_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn catalog_pom_is_sic_and_ic() {
    unsafe {
        for d in [2usize, 3, 4, 8] {
            let mut pom = ptr::null_mut();
            assert_eq!(sicseq_catalog_pom(d, 0.1, &mut pom), SicseqStatus::Ok);
            let (mut dim, mut len) = (0, 0);
            assert_eq!(sicseq_pom_shape(pom, &mut dim, &mut len), SicseqStatus::Ok);
            assert_eq!((dim, len), (d, d * d));
            let (mut sic, mut ic) = (false, false);
            assert_eq!(sicseq_pom_is_sic(pom, 1e-10, &mut sic), SicseqStatus::Ok);
            assert_eq!(sicseq_pom_is_ic(pom, 1e-10, &mut ic), SicseqStatus::Ok);
            assert!(sic && ic);
            sicseq_pom_free(pom);
        }
    }
}

#[test]
fn errors_are_reported() {
    unsafe {
        let mut pom = ptr::null_mut();
        assert_eq!(sicseq_catalog_pom(5, 0.0, &mut pom), SicseqStatus::InvalidArgument);
        assert!(pom.is_null());
        assert!(last_error().contains('5'));
        assert_eq!(sicseq_catalog_pom(3, 2.0, &mut pom), SicseqStatus::InvalidArgument);
        assert_eq!(sicseq_catalog_pom(2, 0.0, ptr::null_mut()), SicseqStatus::NullPointer);
        assert_eq!(sicseq_pom_is_sic(ptr::null(), 1e-9, &mut false), SicseqStatus::NullPointer);

        let junk = CString::new("{\"dim\": 2").unwrap();
        assert_eq!(sicseq_pom_from_json(junk.as_ptr(), &mut pom), SicseqStatus::Parse);
        assert!(!last_error().is_empty());

        // the computational basis is not informationally complete
        let basis = CString::new(
            r#"{"dim":2,"labels":["0","1"],"outcomes":[{"dim":2,"entries":[[1,0],[0,0],[0,0],[0,0]]},{"dim":2,"entries":[[0,0],[0,0],[0,0],[1,0]]}]}"#,
        )
        .unwrap();
        assert_eq!(sicseq_pom_from_json(basis.as_ptr(), &mut pom), SicseqStatus::Ok);
        assert!(last_error().is_empty());
        let (mut re, mut im) = ([0.0; 4], [0.0; 4]);
        let probs = [0.5, 0.5];
        assert_eq!(
            sicseq_reconstruct(pom, probs.as_ptr(), 2, false, re.as_mut_ptr(), im.as_mut_ptr()),
            SicseqStatus::NotInformationallyComplete
        );
        sicseq_pom_free(pom);
    }
}

#[test]
fn hw_scheme_composes_to_hw_pom() {
    let s = 0.5f64.sqrt();
    let (re, im) = ([0.8, 0.6 * s], [0.0, 0.6 * s]);
    unsafe {
        let (mut direct, mut scheme, mut composed) = (ptr::null_mut(), ptr::null_mut(), ptr::null_mut());
        assert_eq!(sicseq_hw_pom(2, re.as_ptr(), im.as_ptr(), &mut direct), SicseqStatus::Ok);
        assert_eq!(sicseq_hw_scheme(2, re.as_ptr(), im.as_ptr(), &mut scheme), SicseqStatus::Ok);
        assert_eq!(sicseq_scheme_compose(scheme, &mut composed), SicseqStatus::Ok);
        let (mut a, mut b) = (ptr::null_mut(), ptr::null_mut());
        assert_eq!(sicseq_pom_to_json(direct, &mut a), SicseqStatus::Ok);
        assert_eq!(sicseq_pom_to_json(composed, &mut b), SicseqStatus::Ok);
        let pa: sicseq::povm::Pom = serde_json::from_str(CStr::from_ptr(a).to_str().unwrap()).unwrap();
        let pb: sicseq::povm::Pom = serde_json::from_str(CStr::from_ptr(b).to_str().unwrap()).unwrap();
        for (x, y) in pa.outcomes().iter().zip(pb.outcomes()) {
            assert!(x.max_abs_diff(y).unwrap() < 1e-14);
        }
        sicseq_string_free(a);
        sicseq_string_free(b);
        sicseq_pom_free(direct);
        sicseq_pom_free(composed);
        sicseq_scheme_free(scheme);
    }
}

#[test]
fn born_then_reconstruct_round_trip() {
    unsafe {
        let mut pom = ptr::null_mut();
        assert_eq!(sicseq_catalog_pom(3, 0.0, &mut pom), SicseqStatus::Ok);
        // rho = diag(0.5, 0.3, 0.2) plus a coherence between 0 and 1
        let mut rho_re = [0.5, 0.1, 0.0, 0.1, 0.3, 0.0, 0.0, 0.0, 0.2];
        let mut rho_im = [0.0, 0.05, 0.0, -0.05, 0.0, 0.0, 0.0, 0.0, 0.0];
        let mut probs = [0.0; 9];
        assert_eq!(
            sicseq_born(pom, rho_re.as_ptr(), rho_im.as_ptr(), probs.as_mut_ptr(), 9),
            SicseqStatus::Ok
        );
        assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        assert_eq!(
            sicseq_born(pom, rho_re.as_ptr(), rho_im.as_ptr(), probs.as_mut_ptr(), 4),
            SicseqStatus::InvalidArgument
        );
        let (mut out_re, mut out_im) = ([0.0; 9], [0.0; 9]);
        assert_eq!(
            sicseq_reconstruct(pom, probs.as_ptr(), 9, false, out_re.as_mut_ptr(), out_im.as_mut_ptr()),
            SicseqStatus::Ok
        );
        for i in 0..9 {
            assert!((out_re[i] - rho_re[i]).abs() < 1e-12);
            assert!((out_im[i] - rho_im[i]).abs() < 1e-12);
        }
        rho_re[0] = 0.9;
        assert_eq!(
            sicseq_born(pom, rho_re.as_ptr(), rho_im.as_mut_ptr(), probs.as_mut_ptr(), 9),
            SicseqStatus::InvalidArgument
        );
        sicseq_pom_free(pom);
    }
}

#[test]
fn scheme_json_round_trip() {
    unsafe {
        let mut scheme = ptr::null_mut();
        assert_eq!(sicseq_catalog_scheme(4, 0.0, &mut scheme), SicseqStatus::Ok);
        let mut text = ptr::null_mut();
        assert_eq!(sicseq_scheme_to_json(scheme, &mut text), SicseqStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(sicseq_scheme_from_json(text, &mut back), SicseqStatus::Ok);
        let mut again = ptr::null_mut();
        assert_eq!(sicseq_scheme_to_json(back, &mut again), SicseqStatus::Ok);
        assert_eq!(CStr::from_ptr(text), CStr::from_ptr(again));
        sicseq_string_free(text);
        sicseq_string_free(again);
        sicseq_scheme_free(scheme);
        sicseq_scheme_free(back);
        sicseq_pom_free(ptr::null_mut());
    }
}

fn target_dir() -> PathBuf {
    // <target>/<profile>/deps/<test binary>
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn header_compiles_and_links_from_c() {
    let header_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    let lib = target_dir().join("libsicseq_ffi.a");
    assert!(header_dir.join("sicseq.h").exists());
    assert!(lib.exists(), "missing {}", lib.display());
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("main.c");
    std::fs::write(
        &src,
        r#"#include "sicseq.h"
#include <stdio.h>
int main(void) {
    SicseqPom *pom = NULL;
    if (sicseq_catalog_pom(2, 0.0, &pom) != SICSEQ_STATUS_OK) return 1;
    bool sic = false;
    if (sicseq_pom_is_sic(pom, 1e-10, &sic) != SICSEQ_STATUS_OK || !sic) return 2;
    if (sicseq_catalog_pom(7, 0.0, &pom) != SICSEQ_STATUS_INVALID_ARGUMENT) return 3;
    sicseq_pom_free(pom);
    printf("%s\n", sicseq_version());
    return 0;
}
"#,
    )
    .unwrap();
    let exe = tmp.path().join("main");
    let status = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-I"])
        .arg(&header_dir)
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .expect("C compiler available");
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), env!("CARGO_PKG_VERSION"));
}
