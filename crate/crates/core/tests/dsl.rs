mod common;

use common::arb;
use coursepop::dsl::{parse_curriculum, serialize_curriculum};
use coursepop::fixtures::{hou, HOU_SOURCE};
use proptest::prelude::*;

#[test]
fn hou_round_trip_is_a_fixpoint() {
    let c = parse_curriculum(HOU_SOURCE).unwrap();
    assert_eq!(c, hou());
    let text = serialize_curriculum(&c);
    assert_eq!(parse_curriculum(&text).unwrap(), c);
    assert_eq!(
        serialize_curriculum(&parse_curriculum(&text).unwrap()),
        text
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn random_programs_round_trip(c in arb::curriculum(6)) {
        let text = serialize_curriculum(&c);
        let back = parse_curriculum(&text).map_err(|e| TestCaseError::fail(format!("{e:?}\n{text}")))?;
        prop_assert_eq!(&back, &c);
        prop_assert_eq!(serialize_curriculum(&back), text);
    }
}
