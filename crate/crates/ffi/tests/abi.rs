use std::ffi::CString;
use std::path::Path;
use std::process::Command;
use std::ptr;

use timecausal_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 256];
    let n = unsafe { tc_last_error(buf.as_mut_ptr(), buf.len()) };
    let bytes: Vec<u8> = buf[..n.min(255)].iter().map(|&c| c as u8).collect();
    String::from_utf8(bytes).unwrap()
}

#[test]
fn scalar_functions() {
    let mut v = 0.0;
    unsafe {
        assert_eq!(tc_temporal_mean(1.0, 0.0, 4, &mut v), TcStatus::Ok);
        assert!((v - 2.0).abs() < 1e-12);
        assert_eq!(tc_gaussian_derivative_norm(1, 1.0, &mut v), TcStatus::Ok);
        assert!((v - (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-12);
        assert_eq!(tc_temporal_tmax(1.0, 0.0, 4, &mut v), TcStatus::Ok);
        assert!((v - 1.5).abs() < 1e-6);
    }
}

#[test]
fn errors_map_to_codes_and_messages() {
    let mut v = 0.0;
    unsafe {
        assert_eq!(tc_temporal_mean(1.0, 0.5, 4, &mut v), TcStatus::Parameter);
        assert!(!last_error().is_empty());
        assert_eq!(tc_temporal_mean(1.0, 2.0, 4, ptr::null_mut()), TcStatus::InvalidArgument);
        assert!(last_error().contains("null"));
        let mut filter = ptr::null_mut();
        assert_eq!(tc_temporal_filter_new(4.0, 0.0, 3, 0, &mut filter), TcStatus::Parameter);
        assert!(filter.is_null());
    }
}

#[test]
fn temporal_filter_round_trip() {
    unsafe {
        let mut filter = ptr::null_mut();
        assert_eq!(tc_temporal_filter_new(9.0, 2.0, 4, 2, &mut filter), TcStatus::Ok);
        let mut out = [0.0; 2];
        for _ in 0..5 {
            assert_eq!(tc_temporal_filter_step(filter, [3.0, -1.0].as_ptr(), out.as_mut_ptr(), 2), TcStatus::Ok);
            assert!((out[0] - 3.0).abs() < 1e-12 && (out[1] + 1.0).abs() < 1e-12);
        }
        assert_eq!(tc_temporal_filter_step(filter, [1.0; 3].as_ptr(), [0.0; 3].as_mut_ptr(), 3), TcStatus::Numeric);
        tc_temporal_filter_free(filter);
        tc_temporal_filter_free(ptr::null_mut());
    }
}

#[test]
fn discrete_gaussian_handle() {
    unsafe {
        let mut g = ptr::null_mut();
        assert_eq!(tc_discrete_gaussian_new(2.0, 1e-12, &mut g), TcStatus::Ok);
        let mut len = 0;
        assert_eq!(tc_discrete_gaussian_len(g, &mut len), TcStatus::Ok);
        let mut taps = vec![0.0; len];
        assert_eq!(tc_discrete_gaussian_taps(g, taps.as_mut_ptr(), len), TcStatus::Ok);
        assert!((taps.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(tc_discrete_gaussian_taps(g, taps.as_mut_ptr(), len - 1), TcStatus::InvalidArgument);

        let input = [5.0; 12];
        let mut output = [0.0; 12];
        assert_eq!(tc_discrete_gaussian_smooth(g, 4, 3, input.as_ptr(), output.as_mut_ptr()), TcStatus::Ok);
        assert!(output.iter().all(|v| (v - 5.0).abs() < 1e-10));
        tc_discrete_gaussian_free(g);
    }
}

#[test]
fn pipeline_handle() {
    let features = CString::new("q2,laplacian").unwrap();
    let (w, h) = (16usize, 12usize);
    unsafe {
        let mut p = ptr::null_mut();
        let st = [1.5];
        let sx = [1.0];
        assert_eq!(
            tc_pipeline_new(1.0, st.as_ptr(), 1, sx.as_ptr(), 1, 5, 2.0, features.as_ptr(), &mut p),
            TcStatus::Ok
        );
        let mut total = 0;
        for t in 0..8 {
            let frame: Vec<f64> = (0..w * h).map(|i| ((i % w) as f64 - t as f64).abs()).collect();
            let mut produced = 0;
            assert_eq!(tc_pipeline_push_frame(p, w, h, frame.as_ptr(), &mut produced), TcStatus::Ok);
            for i in 0..produced {
                let mut info = TcFeatureInfo::default();
                assert_eq!(tc_pipeline_output_info(p, i, &mut info), TcStatus::Ok);
                assert!(info.feature_index < 2);
                assert_eq!((info.width, info.height), (w, h));
                let mut pixels = vec![0.0; w * h];
                assert_eq!(tc_pipeline_output_copy(p, i, pixels.as_mut_ptr(), pixels.len()), TcStatus::Ok);
                assert!(pixels.iter().all(|v| v.is_finite()));
            }
            total += produced;
        }
        assert!(total > 0);
        let mut produced = 0;
        let small = [0.0; 4];
        assert_eq!(tc_pipeline_push_frame(p, 2, 2, small.as_ptr(), &mut produced), TcStatus::Io);
        assert!(last_error().contains("frame 8"));

        let path = std::env::temp_dir().join(format!("tc-ffi-state-{}", std::process::id()));
        let cpath = CString::new(path.to_str().unwrap()).unwrap();
        assert_eq!(tc_pipeline_save_state(p, cpath.as_ptr()), TcStatus::Ok);
        assert!(path.exists());
        let _ = std::fs::remove_file(&path);
        tc_pipeline_free(p);

        let bad = CString::new("q2,nonsense").unwrap();
        let mut q = ptr::null_mut();
        assert_eq!(
            tc_pipeline_new(1.0, st.as_ptr(), 1, sx.as_ptr(), 1, 5, 2.0, bad.as_ptr(), &mut q),
            TcStatus::Parameter
        );
    }
}

#[test]
fn header_is_valid_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include").join("timecausal.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for symbol in ["tc_pipeline_new", "tc_temporal_filter_step", "TC_STATUS_OK", "typedef struct TcPipeline TcPipeline"]
    {
        assert!(text.contains(symbol), "{symbol}");
    }
    // only when a C compiler is around
    if let Ok(out) = Command::new("cc").args(["-fsyntax-only", "-x", "c"]).arg(&header).output() {
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
}
