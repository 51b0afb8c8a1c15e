mod common;

use proptest::prelude::*;
use rdtm::turing::{decode, encode, encoded_step, machines, tm_run, tm_step, TapeConfig, TuringMachine};

const R: u32 = 3;

fn machine() -> impl Strategy<Value = TuringMachine> {
    prop::collection::vec(
        (1u32..=R, 0u8..10, prop::sample::select(vec![-1i8, 0, 1])),
        (R as usize - 1) * 10,
    )
    .prop_map(|table| TuringMachine::from_fn(R, 1, R, |q, s| table[(q as usize - 1) * 10 + s as usize]).unwrap())
}

fn config() -> impl Strategy<Value = TapeConfig> {
    (
        1u32..=R,
        prop::collection::vec(0u8..10, 0..8),
        prop::collection::vec(0u8..10, 0..8),
    )
        .prop_map(|(q, r, l)| TapeConfig::new(q, r, l).unwrap())
}

proptest! {
    #[test]
    fn decode_inverts_encode(c in config(), extra in 0usize..3) {
        let e = encode(&c);
        prop_assert_eq!(decode(&e, c.k0() + extra).unwrap(), c);
    }

    #[test]
    fn encoding_conjugates_the_step(tm in machine(), c in config()) {
        let next = tm_step(&tm, &c).unwrap();
        let k0 = c.k0() + 1;
        let es = encoded_step(&tm, &encode(&c), k0);
        prop_assert!(!es.off_image);
        prop_assert_eq!(es.next, encode(&next));
    }

    #[test]
    fn halting_is_absorbing(tm in machine(), c in config(), k in 0u64..50) {
        let mut h = c.clone();
        h.q = tm.q_halt();
        prop_assert_eq!(tm_step(&tm, &h).unwrap(), h.clone());
        let out = tm_run(&tm, &h, k).unwrap();
        prop_assert!(out.halted());
        prop_assert_eq!(out.config(), &h);
    }

    #[test]
    fn runs_compose(tm in machine(), c in config(), a in 0u64..20, b in 0u64..20) {
        let ab = tm_run(&tm, &c, a + b).unwrap();
        let first = tm_run(&tm, &c, a).unwrap();
        let second = tm_run(&tm, first.config(), b).unwrap();
        prop_assert_eq!(ab.config(), second.config());
    }

    #[test]
    fn display_round_trip(c in config()) {
        let s = c.to_string();
        let back: TapeConfig = s.parse().unwrap();
        prop_assert_eq!(back.right(), c.right());
        prop_assert_eq!(back.left(), c.left());
    }

    #[test]
    fn machine_json_round_trip(tm in machine()) {
        prop_assert_eq!(TuringMachine::from_json(&tm.to_json()).unwrap(), tm);
    }
}

#[test]
fn busy_beaver_writes_six_ones() {
    let tm = machines::busy_beaver_3();
    let out = tm_run(&tm, &TapeConfig::blank(tm.q0()), 100).unwrap();
    let ones = out
        .config()
        .right()
        .iter()
        .chain(out.config().left())
        .filter(|s| **s == 1)
        .count();
    assert!(out.halted());
    assert_eq!(ones, 6);
}
