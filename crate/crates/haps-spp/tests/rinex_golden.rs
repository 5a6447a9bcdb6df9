//! Golden-file parsing tests against hand-transcribed fixture values, plus
//! a mutation fuzz pass asserting the parsers never panic.

use haps_spp::rinex::{
    parse_navigation, parse_observation, BroadcastEphemeris, RinexError,
};
use haps_spp::time::GpsTime;

const NAV211: &[u8] = include_bytes!("fixtures/nav211.n");
const NAV304: &[u8] = include_bytes!("fixtures/nav304.rnx");
const NAV_BAD: &[u8] = include_bytes!("fixtures/nav_bad_record.n");
const NAV_EMPTY: &[u8] = include_bytes!("fixtures/nav_empty.n");
const OBS211: &[u8] = include_bytes!("fixtures/obs211.o");
const OBS304: &[u8] = include_bytes!("fixtures/obs304.rnx");
const OBS_NO_C1: &[u8] = include_bytes!("fixtures/obs_no_c1.o");

/// PRN 5 of the navigation fixtures, field for field as written in the file.
fn expected_prn5() -> BroadcastEphemeris {
    BroadcastEphemeris {
        prn: 5,
        toc: GpsTime::new(2218, 0.0),
        toe_sow: 0.0,
        week: 2218,
        af0: 0.469127334654e-03,
        af1: 0.227373675443e-11,
        af2: 0.0,
        sqrt_a: 0.515365548325e+04,
        e: 0.626062543597e-02,
        i0: 0.958513347778e+00,
        omega0: -0.136906859559e+01,
        omega: 0.881067529236e+00,
        m0: -0.291434500000e+00,
        delta_n: 0.453233168092e-08,
        i_dot: 0.413946562568e-09,
        omega_dot: -0.793283052570e-08,
        cuc: -0.551343262196e-06,
        cus: 0.823289155960e-05,
        crc: 0.234706250000e+03,
        crs: -0.113437500000e+02,
        cic: -0.111758708954e-07,
        cis: 0.651925802231e-07,
    }
}

fn check_nav_fixture(bytes: &[u8]) {
    let nav = parse_navigation(bytes).unwrap();
    assert_eq!(nav.ephemerides.len(), 3);
    assert!(nav.skipped.is_empty());

    let iono = nav.iono.expect("iono header present");
    assert_eq!(iono.alpha, [0.1118e-07, -0.7451e-08, -0.5961e-07, 0.1192e-06]);
    assert_eq!(iono.beta, [0.1167e+06, -0.2294e+06, -0.1311e+06, 0.1049e+07]);

    assert_eq!(nav.ephemerides[0], expected_prn5());

    // Spot fields of the other two records, transcribed from the file.
    let r12 = &nav.ephemerides[1];
    assert_eq!(r12.prn, 12);
    assert_eq!(r12.af0, -0.234567890123e-04);
    assert_eq!(r12.af1, -0.113686837722e-11);
    assert_eq!(r12.e, 0.134567890123e-01);
    assert_eq!(r12.sqrt_a, 0.515378123456e+04);
    assert_eq!(r12.m0, 0.251234567890e+01);
    assert_eq!(r12.omega0, 0.210987654321e+01);
    assert_eq!(r12.omega, -0.177670123456e+01);
    assert_eq!(r12.crs, 0.755000000000e+02);
    assert_eq!(r12.cis, -0.745058059692e-07);
    assert_eq!(r12.i_dot, -0.267868000000e-09);
    assert_eq!(r12.week, 2218);

    let r25 = &nav.ephemerides[2];
    assert_eq!(r25.prn, 25);
    assert_eq!(r25.af0, 0.567890123456e-04);
    assert_eq!(r25.af1, 0.909494701773e-12);
    assert_eq!(r25.e, 0.821234567890e-02);
    assert_eq!(r25.sqrt_a, 0.515360921345e+04);
    assert_eq!(r25.i0, 0.942477796077e+00);
    assert_eq!(r25.crc, 0.154406250000e+03);
    assert_eq!(r25.omega_dot, -0.856785000000e-08);
    assert_eq!(r25.cuc, -0.125030800000e-06);
    assert_eq!(r25.cus, 0.110687000000e-04);
}

#[test]
fn nav_211_golden() {
    check_nav_fixture(NAV211);
}

#[test]
fn nav_304_golden() {
    check_nav_fixture(NAV304);
}

#[test]
fn nav_out_of_range_record_skipped() {
    let nav = parse_navigation(NAV_BAD).unwrap();
    assert_eq!(nav.ephemerides.len(), 1);
    assert_eq!(nav.ephemerides[0], expected_prn5());
    assert_eq!(nav.skipped.len(), 1);
    let skip = &nav.skipped[0];
    assert_eq!(skip.prn, Some(7));
    assert!(skip.reason.contains("eccentricity"), "{}", skip.reason);
}

#[test]
fn nav_empty_body_is_an_error() {
    assert_eq!(parse_navigation(NAV_EMPTY), Err(RinexError::NoEphemerides));
}

#[test]
fn nav_header_errors_carry_line_numbers() {
    match parse_navigation(b"not a rinex file\n") {
        Err(RinexError::MalformedHeader { line: 1, .. }) => {}
        other => panic!("expected header error, got {other:?}"),
    }
    // Observation file handed to the navigation parser.
    match parse_navigation(OBS211) {
        Err(RinexError::MalformedHeader { line: 1, message }) => {
            assert!(message.contains("'O'"), "{message}");
        }
        other => panic!("expected type mismatch, got {other:?}"),
    }
}

fn check_obs_fixture(bytes: &[u8]) {
    let obs = parse_observation(bytes).unwrap();
    assert_eq!(obs.dropped_epochs, 0);
    assert_eq!(obs.epochs.len(), 2);

    let e1 = &obs.epochs[0];
    assert_eq!(e1.epoch, GpsTime::new(2218, 0.0));
    assert_eq!(
        e1.entries,
        vec![
            (5, 20_832_916.443),
            (7, 23_024_012.881),
            (12, 21_504_033.672),
            (13, 24_411_201.550),
            (25, 20_170_014.106),
            (30, 22_501_376.919),
        ]
    );

    // Epoch 2: the GLONASS entry is ignored and G13's blank pseudorange is
    // omitted, leaving five entries.
    let e2 = &obs.epochs[1];
    assert_eq!(e2.epoch, GpsTime::new(2218, 1.0));
    assert_eq!(
        e2.entries,
        vec![
            (5, 20_833_340.001),
            (7, 23_023_642.125),
            (12, 21_503_903.450),
            (25, 20_169_832.854),
            (30, 22_501_934.729),
        ]
    );
}

#[test]
fn obs_211_golden() {
    check_obs_fixture(OBS211);
}

#[test]
fn obs_304_golden() {
    check_obs_fixture(OBS304);
}

#[test]
fn obs_missing_code_observable() {
    assert_eq!(parse_observation(OBS_NO_C1), Err(RinexError::MissingCodeObservable));
}

#[test]
fn truncated_epoch_blocks_are_dropped_and_counted_once() {
    // Cut both fixtures in the middle of the second epoch's data block: the
    // first epoch survives, the second counts as exactly one dropped epoch.
    for (bytes, keep_lines) in [(OBS211, 12usize), (OBS304, 14usize)] {
        let text = String::from_utf8_lossy(bytes);
        let truncated: String =
            text.lines().take(keep_lines).map(|l| format!("{l}\n")).collect();
        let obs = parse_observation(truncated.as_bytes()).unwrap();
        assert_eq!(obs.epochs.len(), 1, "first epoch kept");
        assert_eq!(obs.epochs[0].entries.len(), 6);
        assert_eq!(obs.dropped_epochs, 1, "one truncated epoch counted once");
    }
}

#[test]
fn parsing_is_deterministic() {
    for bytes in [NAV211, NAV304] {
        assert_eq!(parse_navigation(bytes), parse_navigation(bytes));
    }
    for bytes in [OBS211, OBS304] {
        assert_eq!(parse_observation(bytes), parse_observation(bytes));
    }
}

/// Mutation fuzz: random byte flips, truncations, and splices over the real
/// fixtures must never panic, only return structured results.
#[test]
fn fuzz_mutated_inputs_never_panic() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0xFADE);
    let corpora: [&[u8]; 4] = [NAV211, NAV304, OBS211, OBS304];
    for round in 0..100_000u32 {
        let base = corpora[(round as usize) % corpora.len()];
        let mut bytes = base.to_vec();
        match round % 5 {
            0 => {
                // flip a few bytes
                for _ in 0..4 {
                    let i = rng.gen_range(0..bytes.len());
                    bytes[i] = rng.gen();
                }
            }
            1 => {
                let cut = rng.gen_range(0..bytes.len());
                bytes.truncate(cut);
            }
            2 => {
                // splice a random slice somewhere else
                let a = rng.gen_range(0..bytes.len());
                let b = rng.gen_range(a..bytes.len());
                let at = rng.gen_range(0..bytes.len());
                let slice: Vec<u8> = bytes[a..b].to_vec();
                for (k, v) in slice.into_iter().enumerate() {
                    if at + k < bytes.len() {
                        bytes[at + k] = v;
                    }
                }
            }
            3 => {
                // overwrite a window with random garbage
                let at = rng.gen_range(0..bytes.len());
                let len = rng.gen_range(0..64).min(bytes.len() - at);
                for slot in &mut bytes[at..at + len] {
                    *slot = rng.gen();
                }
            }
            _ => {
                // random prefix of random bytes
                let len = rng.gen_range(0..128);
                bytes = (0..len).map(|_| rng.gen()).collect();
            }
        }
        let _ = parse_navigation(&bytes);
        let _ = parse_observation(&bytes);
    }
}
