use std::ffi::{CStr, CString};
use std::ptr;

use hetnet_ffi::*;

fn last_error() -> String {
    let p = hetnet_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

unsafe fn wrap(frame: *const HetnetFrame, p: HetnetPlatform) -> Vec<u8> {
    let mut len = 0;
    assert_eq!(
        hetnet_frame_wrap(frame, p, ptr::null_mut(), 0, &mut len),
        HetnetStatus::BufferTooSmall
    );
    let mut buf = vec![0u8; len];
    assert_eq!(
        hetnet_frame_wrap(frame, p, buf.as_mut_ptr(), len, &mut len),
        HetnetStatus::Ok
    );
    buf
}

unsafe fn to_air(p: HetnetPlatform, host: &[u8], seq: u8) -> Vec<u8> {
    let mut buf = [0u8; 127];
    let mut len = 0;
    assert_eq!(
        hetnet_to_air(
            p,
            host.as_ptr(),
            host.len(),
            seq,
            buf.as_mut_ptr(),
            buf.len(),
            &mut len
        ),
        HetnetStatus::Ok
    );
    buf[..len].to_vec()
}

const ALL: [HetnetPlatform; 4] = [
    HetnetPlatform::ArduinoXbee,
    HetnetPlatform::Sunspot,
    HetnetPlatform::Telosb,
    HetnetPlatform::Isense,
];

#[test]
fn crc_check_value() {
    let data = b"123456789";
    assert_eq!(unsafe { hetnet_crc16(data.as_ptr(), data.len()) }, 0x2189);
    assert_eq!(unsafe { hetnet_crc16(ptr::null(), 0) }, 0);
}

#[test]
fn rssi_conversions() {
    assert_eq!(
        hetnet_rssi_normalize(HetnetPlatform::Telosb, 0xEC, -45.0),
        -65.0
    );
    assert_eq!(
        hetnet_rssi_normalize(HetnetPlatform::ArduinoXbee, 72, -45.0),
        -72.0
    );
    for p in ALL {
        for raw in 0..=255u8 {
            let dbm = hetnet_rssi_normalize(p, raw, -45.0);
            assert_eq!(hetnet_rssi_encode(p, dbm, -45.0), raw);
        }
    }
}

#[test]
fn every_status_has_a_name() {
    for code in 0..=14 {
        let status: HetnetStatus = unsafe { std::mem::transmute(code as u32) };
        let s = unsafe { CStr::from_ptr(hetnet_status_str(status)) };
        assert!(!s.to_bytes().is_empty());
    }
}

#[test]
fn frames_cross_every_pair() {
    for tx in ALL {
        for rx in ALL {
            unsafe {
                let payload = [0xDE, 0xAD, tx as u8, rx as u8];
                let mut frame = ptr::null_mut();
                assert_eq!(
                    hetnet_frame_new_beacon(tx, 9, payload.as_ptr(), payload.len(), &mut frame),
                    HetnetStatus::Ok
                );
                let host = wrap(frame, tx);
                hetnet_frame_free(frame);
                let air = to_air(tx, &host, 9);

                let mut delivered = [0u8; 127];
                let mut len = 0;
                assert_eq!(
                    hetnet_from_air(
                        rx,
                        air.as_ptr(),
                        air.len(),
                        60,
                        delivered.as_mut_ptr(),
                        127,
                        &mut len
                    ),
                    HetnetStatus::Ok
                );
                let mut got = ptr::null_mut();
                assert_eq!(
                    hetnet_frame_unwrap(rx, delivered.as_ptr(), len, &mut got),
                    HetnetStatus::Ok
                );
                let mut plen = 0;
                let data = hetnet_frame_payload(got, &mut plen);
                assert_eq!(std::slice::from_raw_parts(data, plen), payload);
                assert_eq!(hetnet_frame_src(got), tx as u16 + 1);
                if rx != HetnetPlatform::ArduinoXbee {
                    assert_eq!(hetnet_frame_seq(got), 9);
                }
                hetnet_frame_free(got);
            }
        }
    }
}

#[test]
fn codec_errors_map_to_status() {
    unsafe {
        let mut frame = ptr::null_mut();
        let big = [0u8; 120];
        assert_eq!(
            hetnet_frame_new_beacon(
                HetnetPlatform::ArduinoXbee,
                0,
                big.as_ptr(),
                big.len(),
                &mut frame
            ),
            HetnetStatus::PayloadTooLarge
        );
        assert!(last_error().contains("exceeds"));
        assert!(frame.is_null());

        assert_eq!(
            hetnet_frame_new_beacon(HetnetPlatform::Telosb, 0, big.as_ptr(), 3, &mut frame),
            HetnetStatus::Ok
        );
        let mut air = to_air(
            HetnetPlatform::Telosb,
            &wrap(frame, HetnetPlatform::Telosb),
            0,
        );
        hetnet_frame_free(frame);
        let mut out = ptr::null_mut();
        assert_eq!(
            hetnet_frame_unwrap(HetnetPlatform::Sunspot, air.as_ptr(), 3, &mut out),
            HetnetStatus::TruncatedFrame
        );
        air[9] ^= 0x01;
        assert_eq!(
            hetnet_frame_unwrap(HetnetPlatform::Sunspot, air.as_ptr(), air.len(), &mut out),
            HetnetStatus::BadFcs
        );

        let mut frame = ptr::null_mut();
        hetnet_frame_new_beacon(HetnetPlatform::ArduinoXbee, 0, big.as_ptr(), 2, &mut frame);
        let mut host = wrap(frame, HetnetPlatform::ArduinoXbee);
        hetnet_frame_free(frame);
        *host.last_mut().unwrap() ^= 0xFF;
        let mut len = 0;
        let mut buf = [0u8; 127];
        assert_eq!(
            hetnet_to_air(
                HetnetPlatform::ArduinoXbee,
                host.as_ptr(),
                host.len(),
                0,
                buf.as_mut_ptr(),
                127,
                &mut len
            ),
            HetnetStatus::BadChecksum
        );
        assert_eq!(
            hetnet_frame_unwrap(HetnetPlatform::Telosb, ptr::null(), 4, &mut out),
            HetnetStatus::NullPointer
        );
        assert!(out.is_null());
    }
}

#[test]
fn simulation_handle() {
    unsafe {
        let mut sim = ptr::null_mut();
        assert_eq!(
            hetnet_sim_new(ptr::null(), ptr::null(), &mut sim),
            HetnetStatus::Ok
        );
        let mut row = std::mem::zeroed::<HetnetMetrics>();
        assert_eq!(hetnet_sim_record(sim, 0, &mut row), HetnetStatus::NotRun);
        assert_eq!(hetnet_sim_configure(sim, 3, 60, 1), HetnetStatus::Ok);
        assert_eq!(hetnet_sim_run(sim), HetnetStatus::Ok);
        let n = hetnet_sim_record_count(sim);
        assert_eq!(n, 960);
        for i in 0..n {
            assert_eq!(hetnet_sim_record(sim, i, &mut row), HetnetStatus::Ok);
            assert_eq!(row.sent, 60);
            assert_eq!(
                row.received + row.channel_drops + row.overload_drops + row.restart_drops,
                row.sent
            );
            assert_eq!(row.rssi_mean_dbm.is_nan(), row.received == 0);
        }
        assert_eq!(
            hetnet_sim_record(sim, n, &mut row),
            HetnetStatus::InvalidArgument
        );

        let dir = tempfile::tempdir().unwrap();
        let out = CString::new(dir.path().join("csv").to_str().unwrap()).unwrap();
        assert_eq!(hetnet_sim_write_csv(sim, out.as_ptr()), HetnetStatus::Ok);
        let text = std::fs::read_to_string(dir.path().join("csv/metrics.csv")).unwrap();
        assert_eq!(text.lines().count(), n + 1);
        hetnet_sim_free(sim);

        let missing = CString::new(dir.path().join("none.toml").to_str().unwrap()).unwrap();
        let mut bad = ptr::null_mut();
        assert_eq!(
            hetnet_sim_new(missing.as_ptr(), ptr::null(), &mut bad),
            HetnetStatus::Io
        );
        assert!(bad.is_null());
        assert_eq!(
            hetnet_sim_new(ptr::null(), missing.as_ptr(), &mut bad),
            HetnetStatus::Io
        );

        let sc = dir.path().join("bad.toml");
        std::fs::write(&sc, "distances_m = []\n").unwrap();
        let sc = CString::new(sc.to_str().unwrap()).unwrap();
        assert_eq!(
            hetnet_sim_new(sc.as_ptr(), ptr::null(), &mut bad),
            HetnetStatus::InvalidScenario
        );
        hetnet_sim_free(ptr::null_mut());
    }
}
