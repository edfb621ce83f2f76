#![allow(dead_code)]

use hetnet::platform::PlatformId;
use hetnet::rssi::{PathLossModel, RssiConfig};
use hetnet::sim::{
    rng_stream, sample_channel, Fate, LaneKey, LaneSpec, LinkSpec, ReceiverParams, ReceiverSpec,
    RestartPolicy, SimTime,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// CRC-16/KERMIT the long way: reflect every input octet, run the MSB-first
/// CCITT polynomial 0x1021, reflect the result.
pub fn crc16_oracle(data: &[u8]) -> u16 {
    let mut crc: u16 = 0;
    for &b in data {
        crc ^= (b.reverse_bits() as u16) << 8;
        for _ in 0..8 {
            crc = if crc & 0x8000 != 0 {
                (crc << 1) ^ 0x1021
            } else {
                crc << 1
            };
        }
    }
    crc.reverse_bits()
}

/// Per-packet fates computed without an event queue. Arrivals are taken in
/// beacon order; service is FIFO and deterministic, so each admitted frame's
/// completion time is known the moment it is admitted.
pub fn brute_force_lane(spec: &LaneSpec) -> Vec<Vec<Fate>> {
    spec.receivers
        .iter()
        .map(|rx| {
            let mut rng = rx.rng.clone();
            let lost: Vec<bool> = (0..spec.beacons)
                .map(|_| sample_channel(&rx.link, &mut rng).unwrap().lost)
                .collect();
            brute_force_receiver(spec, &rx.params, &lost)
        })
        .collect()
}

fn brute_force_receiver(spec: &LaneSpec, p: &ReceiverParams, lost: &[bool]) -> Vec<Fate> {
    let n = lost.len();
    let mut fate = vec![Fate::ChannelDrop; n];
    // (beacon, completion time) of every frame admitted and not yet done.
    let mut system: Vec<(usize, SimTime)> = Vec::new();
    let mut restart_until: SimTime = 0;
    let mut restarting = false;
    let mut recent: Vec<SimTime> = Vec::new();

    for i in 0..n {
        if lost[i] {
            continue;
        }
        let t = i as SimTime * spec.interval_ns + spec.air_time_ns;
        // Completions at or before t happen first.
        system.retain(|&(b, done)| {
            if done <= t {
                fate[b] = Fate::Received;
                false
            } else {
                true
            }
        });
        if restarting && t < restart_until {
            fate[i] = Fate::RestartDrop;
            continue;
        }
        restarting = false;
        if let Some(r) = &p.restart {
            recent.push(t);
            let in_window = recent.iter().filter(|&&a| a + r.window_ns > t).count();
            if in_window as f64 > r.threshold_pps * r.window_ns as f64 / 1e9 {
                for &(b, _) in &system {
                    fate[b] = Fate::RestartDrop;
                }
                system.clear();
                fate[i] = Fate::RestartDrop;
                recent.clear();
                restarting = true;
                restart_until = t + r.duration_ns;
                continue;
            }
        }
        match system.last() {
            None => system.push((i, t + p.service_ns)),
            Some(&(_, last_done)) if system.len() - 1 < p.buffer_capacity => {
                system.push((i, last_done + p.service_ns))
            }
            Some(_) => fate[i] = Fate::OverloadDrop,
        }
    }
    for &(b, _) in &system {
        fate[b] = Fate::Received;
    }
    fate
}

/// A small randomized lane: ≤ 20 beacons, buffers ≤ 2, restart thresholds
/// low enough to trip, PER anywhere in [0, 1].
pub fn micro_lane(rng: &mut ChaCha8Rng, case: u64) -> LaneSpec {
    let beacons = rng.gen_range(1..=20);
    let interval_ns = rng.gen_range(1..=40) * 1_000_000;
    let air_time_ns = rng.gen_range(0..=2_000_000);
    let receivers = (0..rng.gen_range(1..=4))
        .map(|r| {
            let platform = PlatformId::ALL[r];
            let restart = rng.gen_bool(0.5).then(|| RestartPolicy {
                threshold_pps: rng.gen_range(1..=60) as f64,
                window_ns: rng.gen_range(1..=10) * 50_000_000,
                duration_ns: rng.gen_range(0..=12) * 10_000_000,
            });
            ReceiverSpec {
                platform,
                link: LinkSpec {
                    tx_power_dbm: 0.0,
                    distance_m: rng.gen_range(1.0..10.0),
                    path_loss: PathLossModel {
                        shadowing_sigma: rng.gen_range(0.0..3.0),
                        ..PathLossModel::default()
                    },
                    sensitivity_dbm: rng.gen_range(-75.0..-50.0),
                    margin_db: rng.gen_range(0.5..6.0),
                },
                params: ReceiverParams {
                    service_ns: rng.gen_range(0..=60) * 1_000_000 + rng.gen_range(0..3),
                    buffer_capacity: rng.gen_range(0..=2),
                    restart,
                },
                rssi_bias_db: 0.0,
                rng: rng_stream(
                    case,
                    &LaneKey {
                        tx: PlatformId::TelosB,
                        rx: platform,
                        distance_m: 1.0,
                        payload: r,
                        repetition: 0,
                    },
                ),
            }
        })
        .collect();
    LaneSpec {
        beacons,
        interval_ns,
        air_time_ns,
        receivers,
        rssi: RssiConfig::default(),
    }
}

pub fn micro_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
