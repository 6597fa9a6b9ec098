use std::ffi::CStr;
use std::ptr;

use frank_copula_ffi::*;

fn last_error() -> String {
    let p = fc_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn scalar_functions() {
    let mut d = 0.0;
    assert_eq!(unsafe { fc_density(0.3, 0.4, 0.0, &mut d) }, FcStatus::Ok);
    assert!((d - 1.0).abs() < 1e-12);
    assert!(fc_last_error_message().is_null());
    let (mut tau, mut rho) = (0.0, 0.0);
    assert_eq!(
        unsafe { fc_rank_correlations(4.161, &mut tau, &mut rho) },
        FcStatus::Ok
    );
    assert!((tau - 0.40).abs() < 0.005 && rho > tau);
    let mut c = 0.0;
    assert_eq!(unsafe { fc_cdf(1.0, 0.7, 5.0, &mut c) }, FcStatus::Ok);
    assert!((c - 0.7).abs() < 1e-12);
    let mut k = 0.0;
    assert_eq!(
        unsafe { fc_kendall_distribution(1.0, -3.0, &mut k) },
        FcStatus::Ok
    );
    assert_eq!(k, 1.0);
}

#[test]
fn errors_are_reported() {
    let mut d = 0.0;
    assert_eq!(
        unsafe { fc_density(1.5, 0.4, 1.0, &mut d) },
        FcStatus::Domain
    );
    assert!(!last_error().is_empty());
    assert_eq!(
        unsafe { fc_density(0.5, 0.4, f64::NAN, &mut d) },
        FcStatus::Domain
    );
    assert_eq!(
        unsafe { fc_density(0.5, 0.4, 1.0, ptr::null_mut()) },
        FcStatus::InvalidArgument
    );
    assert!(last_error().contains("null"));
    let mut s = ptr::null_mut();
    let x = [1.0, 2.0];
    assert_eq!(
        unsafe { fc_sample_new(x.as_ptr(), x.as_ptr(), 2, 7, &mut s) },
        FcStatus::InvalidArgument
    );
    assert_eq!(
        unsafe { fc_sample_new(x.as_ptr(), x.as_ptr(), 1, 0, &mut s) },
        FcStatus::Data
    );
    assert!(s.is_null());
    let mut est = 0.0;
    assert_eq!(
        unsafe { fc_estimate(ptr::null(), 1, &mut est) },
        FcStatus::InvalidArgument
    );
    unsafe {
        fc_sample_free(ptr::null_mut());
        fc_table_free(ptr::null_mut());
    }
}

#[test]
fn sample_workflow() {
    let n = 200;
    let (mut u, mut v) = (vec![0.0; n], vec![0.0; n]);
    assert_eq!(
        unsafe { fc_draw(n, 3.0, 5, u.as_mut_ptr(), v.as_mut_ptr()) },
        FcStatus::Ok
    );
    let mut s = ptr::null_mut();
    assert_eq!(
        unsafe { fc_sample_new(u.as_ptr(), v.as_ptr(), n, 0, &mut s) },
        FcStatus::Ok
    );
    assert_eq!(unsafe { fc_sample_len(s) }, n);
    let mut mle = 0.0;
    assert_eq!(
        unsafe { fc_estimate(s, FcMethod::Mle as i32, &mut mle) },
        FcStatus::Ok
    );
    assert!((mle - 3.0).abs() < 1.5);
    let mut mme = 0.0;
    assert_eq!(
        unsafe { fc_estimate(s, FcMethod::Mme1 as i32, &mut mme) },
        FcStatus::Ok
    );
    let (mut th, mut sn, mut tn) = (0.0, 0.0, 0.0);
    assert_eq!(
        unsafe { fc_gof_statistics(s, &mut th, &mut sn, &mut tn) },
        FcStatus::Ok
    );
    assert_eq!(th, mle);
    assert!(sn >= 0.0 && tn >= 0.0);
    let (mut ps, mut pt) = (0.0, 0.0);
    assert_eq!(
        unsafe { fc_bootstrap(s, 100, 1, &mut ps, &mut pt) },
        FcStatus::Ok
    );
    assert!((0.0..=1.0).contains(&ps) && (0.0..=1.0).contains(&pt));
    unsafe { fc_sample_free(s) };
}

#[test]
fn tables() {
    let mut t = ptr::null_mut();
    assert_eq!(unsafe { fc_table_published(&mut t) }, FcStatus::Ok);
    let mut v = 0.0;
    assert_eq!(
        unsafe { fc_table_lookup(t, 50, 5.0, 0.90, FcStatistic::Sn as i32, &mut v) },
        FcStatus::Ok
    );
    assert!((v - 0.117).abs() < 1e-12);
    assert_eq!(
        unsafe { fc_table_lookup(t, 5000, 5.0, 0.90, FcStatistic::Sn as i32, &mut v) },
        FcStatus::OutOfTable
    );
    assert!(last_error().contains("5000"));
    unsafe { fc_table_free(t) };

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    std::fs::write(
        &path,
        "level,n,theta,sn,tn,reps,seed\n0.95,30,1.0,0.2,0.9,500,3\n0.95,30,2.0,0.1,0.8,500,3\n",
    )
    .unwrap();
    let c_path = std::ffi::CString::new(path.to_str().unwrap()).unwrap();
    let mut t = ptr::null_mut();
    assert_eq!(
        unsafe { fc_table_load(c_path.as_ptr(), &mut t) },
        FcStatus::Ok
    );
    assert_eq!(
        unsafe { fc_table_lookup(t, 30, 1.5, 0.95, FcStatistic::Tn as i32, &mut v) },
        FcStatus::Ok
    );
    assert!((v - 0.85).abs() < 1e-12);
    unsafe { fc_table_free(t) };
    let missing = std::ffi::CString::new("/nonexistent/table.csv").unwrap();
    assert_eq!(
        unsafe { fc_table_load(missing.as_ptr(), &mut t) },
        FcStatus::Data
    );
}

#[test]
fn simulated_critical_values() {
    let (mut sn, mut tn) = (0.0, 0.0);
    assert_eq!(
        unsafe { fc_simulate_critical_values(25, 2.0, 0.95, 200, 9, &mut sn, &mut tn) },
        FcStatus::Ok
    );
    assert!(sn > 0.0 && tn > 0.0);
    assert_eq!(
        unsafe { fc_simulate_critical_values(25, 2.0, 1.5, 200, 9, &mut sn, &mut tn) },
        FcStatus::InvalidArgument
    );
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(fc_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}
