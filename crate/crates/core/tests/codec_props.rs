mod common;

use hetnet::frame::{
    crc16, decode_frame, encode_frame, Address, AddressMode, FrameControl, MacFrame, FCS_LEN,
};
use hetnet::platform::{
    caps, from_air, payload_limit, to_air, unwrap, validate_payload_with, wrap, xbee,
    InteropConfig, PlatformId,
};
use hetnet::CodecError;
use proptest::prelude::*;

fn mode() -> impl Strategy<Value = AddressMode> {
    prop_oneof![Just(AddressMode::Short16), Just(AddressMode::Extended64)]
}

fn address(mode: AddressMode) -> BoxedStrategy<Address> {
    match mode {
        AddressMode::Short16 => any::<u16>().prop_map(Address::Short).boxed(),
        AddressMode::Extended64 => any::<u64>().prop_map(Address::Extended).boxed(),
    }
}

prop_compose! {
    fn mac_frame()(
        dm in mode(),
        sm in mode(),
        ack in any::<bool>(),
        panc in any::<bool>(),
    )(
        dest in address(dm),
        src in address(sm),
        seq in any::<u8>(),
        dest_pan in any::<u16>(),
        src_pan in any::<u16>(),
        payload in {
            let mut fc = FrameControl::data(dm, sm);
            fc.pan_id_compression = panc;
            proptest::collection::vec(any::<u8>(), 0..=fc.max_payload())
        },
        ack in Just(ack),
        panc in Just(panc),
    ) -> MacFrame {
        let mut fc = FrameControl::data(dest.mode(), src.mode());
        fc.ack_request = ack;
        fc.pan_id_compression = panc;
        MacFrame {
            fc,
            seq,
            dest_pan,
            dest,
            src_pan: (!panc).then_some(src_pan),
            src,
            payload,
        }
    }
}

fn platform() -> impl Strategy<Value = PlatformId> {
    prop::sample::select(PlatformId::ALL.to_vec())
}

fn beacon(tx: PlatformId, cfg: &InteropConfig, seq: u8, payload: Vec<u8>) -> MacFrame {
    MacFrame::short_data(seq, cfg.pan_id, 0xFFFF, cfg.node_addr(tx), payload)
}

proptest! {
    #[test]
    fn crc_matches_oracle(data in proptest::collection::vec(any::<u8>(), 0..300)) {
        prop_assert_eq!(crc16(&data), common::crc16_oracle(&data));
    }

    #[test]
    fn encode_decode_round_trip(frame in mac_frame()) {
        let bytes = encode_frame(&frame).unwrap();
        prop_assert_eq!(bytes.len(), frame.encoded_len());
        prop_assert!(bytes.len() <= 127);
        let body = &bytes[..bytes.len() - FCS_LEN];
        let fcs = u16::from_le_bytes([bytes[bytes.len() - 2], bytes[bytes.len() - 1]]);
        prop_assert_eq!(fcs, common::crc16_oracle(body));
        prop_assert_eq!(decode_frame(&bytes).unwrap(), frame);
    }

    #[test]
    fn every_single_bit_flip_is_caught(frame in mac_frame(), pick in any::<prop::sample::Index>()) {
        let bytes = encode_frame(&frame).unwrap();
        let bit = pick.index(bytes.len() * 8);
        let mut bad = bytes.clone();
        bad[bit / 8] ^= 1 << (bit % 8);
        prop_assert!(
            matches!(decode_frame(&bad), Err(CodecError::BadFcs { .. })),
            "bit {} accepted", bit
        );
    }

    #[test]
    fn truncation_never_decodes(frame in mac_frame(), cut in any::<prop::sample::Index>()) {
        let bytes = encode_frame(&frame).unwrap();
        let n = cut.index(bytes.len());
        prop_assert!(decode_frame(&bytes[..n]).is_err());
    }

    #[test]
    fn any_pair_interoperates(
        tx in platform(),
        rx in platform(),
        seq in any::<u8>(),
        raw in any::<u8>(),
        len_pick in any::<prop::sample::Index>(),
        fill in any::<u8>(),
    ) {
        let cfg = InteropConfig::default();
        let limit = payload_limit(tx, &cfg).min(payload_limit(rx, &cfg)) - 2;
        let payload: Vec<u8> = (0..len_pick.index(limit + 1))
            .map(|i| fill.wrapping_add(i as u8))
            .collect();
        let frame = beacon(tx, &cfg, seq, payload.clone());
        let host = wrap(tx, &frame, &cfg).unwrap();
        let air = to_air(tx, &host, &cfg, seq).unwrap();
        let on_air = decode_frame(&air).unwrap();
        prop_assert_eq!(&on_air.payload[..2], &[0x41, 0x00]);
        prop_assert_eq!(on_air.seq, seq);

        let delivered = from_air(rx, &air, raw).unwrap();
        let got = unwrap(rx, &delivered, &cfg).unwrap();
        prop_assert_eq!(&got.payload, &payload);
        prop_assert_eq!(got.src, Address::Short(cfg.node_addr(tx)));
        prop_assert!(got.dest.is_broadcast());
        if rx == PlatformId::ArduinoXBee {
            prop_assert_eq!(delivered.len(), xbee::rx16_len(payload.len() + 2));
            prop_assert_eq!(delivered[6], raw);
        } else {
            prop_assert_eq!(&delivered, &air);
            prop_assert_eq!(got.seq, seq);
        }
    }

    #[test]
    fn xbee_checksum_mismatch_is_reported(
        payload in proptest::collection::vec(any::<u8>(), 0..=98),
        delta in 1u8..=255,
    ) {
        let cfg = InteropConfig::default();
        let p = PlatformId::ArduinoXBee;
        let mut host = wrap(p, &beacon(p, &cfg, 0, payload), &cfg).unwrap();
        let last = host.len() - 1;
        host[last] = host[last].wrapping_add(delta);
        prop_assert!(
            matches!(to_air(p, &host, &cfg, 0), Err(CodecError::BadChecksum { .. })),
            "{:?}", to_air(p, &host, &cfg, 0)
        );
    }
}

#[test]
fn limits_are_exact_per_platform() {
    let cfg = InteropConfig::default();
    for p in PlatformId::ALL {
        let limit = payload_limit(p, &cfg);
        assert!(limit <= caps(p).max_payload);
        assert!(validate_payload_with(p, limit - 2, &cfg).is_ok());
        assert_eq!(
            validate_payload_with(p, limit - 1, &cfg),
            Err(CodecError::PayloadTooLarge {
                len: limit + 1,
                limit
            })
        );
        let too_big = beacon(p, &cfg, 0, vec![0; limit - 1]);
        assert!(matches!(
            wrap(p, &too_big, &cfg),
            Err(CodecError::PayloadTooLarge { .. })
        ));
    }
}

#[test]
fn foreign_traffic_without_dispatch_is_rejected() {
    let cfg = InteropConfig::default();
    let plain = encode_frame(&MacFrame::short_data(
        1,
        cfg.pan_id,
        0xFFFF,
        9,
        vec![0x42, 0x00, 7],
    ))
    .unwrap();
    for p in PlatformId::ALL {
        let delivered = from_air(p, &plain, 40).unwrap();
        assert_eq!(
            unwrap(p, &delivered, &cfg),
            Err(CodecError::DispatchMismatch),
            "{p}"
        );
    }
}
