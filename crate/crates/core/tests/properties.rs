use std::sync::Arc;

use proptest::prelude::*;

use symflow::generator::{decode_name, find_marking_subwords, translate, Label};
use symflow::recode::{d_gap, BalancedCode, DGap};
use symflow::suspension::{Roof, SuspensionFlow};
use symflow::symbolic::{SharedPoint, Sturmian, SturmianPoint, Subshift, Word};
use symflow::QuadraticReal;

fn quad() -> impl Strategy<Value = QuadraticReal> {
    (-50i64..50, 1i64..20, -50i64..50, 1i64..20)
        .prop_map(|(a, b, c, d)| QuadraticReal::from_parts((a, b), (c, d), 2).unwrap())
}

fn label() -> impl Strategy<Value = Label> {
    prop_oneof![Just(Label::P), Just(Label::Q), Just(Label::A)]
}

proptest! {
    #[test]
    fn field_operations_invert(a in quad(), b in quad()) {
        prop_assert_eq!(a.try_add(&b).unwrap().try_sub(&b).unwrap(), a.clone());
        if !b.is_zero() {
            prop_assert_eq!(a.try_mul(&b).unwrap().try_div(&b).unwrap(), a);
        }
    }

    #[test]
    fn order_agrees_with_floats(a in quad(), b in quad()) {
        let (x, y) = (a.to_f64(), b.to_f64());
        if (x - y).abs() > 1e-9 {
            prop_assert_eq!(a < b, x < y);
        }
        let f = QuadraticReal::rational(a.floor().into());
        prop_assert!(f <= a && a < f.try_add(&QuadraticReal::one()).unwrap());
    }

    #[test]
    fn display_parses_back(a in quad()) {
        prop_assert_eq!(a.to_string().parse::<QuadraticReal>().unwrap(), a);
    }

    #[test]
    fn words_parse_back(symbols in prop::collection::vec(0u8..36, 0..40)) {
        let w = Word::from(symbols);
        prop_assert_eq!(w.to_string().parse::<Word>().unwrap(), w);
    }

    #[test]
    fn balanced_ranks_are_a_bijection(k in 1usize..24, seed in any::<u128>()) {
        let code = BalancedCode::balanced(k);
        let i = seed % code.count();
        let w = code.unrank(i).unwrap();
        prop_assert!(code.satisfies(&w));
        prop_assert_eq!(w.iter().filter(|&&s| s == 1).count(), k);
        prop_assert_eq!(code.rank(&w).unwrap(), i);
    }

    #[test]
    fn gap_is_a_nonnegative_remainder(x in 1i64..80, eps in 1i64..10) {
        let (p, q) = (QuadraticReal::one(), QuadraticReal::sqrt(2).unwrap());
        let xv = QuadraticReal::from_int(x);
        let e = QuadraticReal::from_ratio(eps, 10);
        if let DGap::Value { value, k, l } = d_gap(&xv, &p, &q, &e).unwrap() {
            prop_assert!(!value.is_negative());
            prop_assert!(k <= l && l >= 1);
            let sum = p.mul_int(k as i64).try_add(&q.mul_int(l as i64)).unwrap().try_add(&value).unwrap();
            prop_assert_eq!(sum, xv);
        }
    }

    #[test]
    fn flow_is_a_group_action(phase in 0i64..1_000_000, i in -50i64..50, h in 0i64..100, s in -3000i64..3000, t in -3000i64..3000) {
        let flow = SuspensionFlow::new(
            Subshift::silver_sturmian(),
            Roof::symbolwise(vec![QuadraticReal::one(), QuadraticReal::sqrt(2).unwrap()]).unwrap(),
        ).unwrap();
        let x = Arc::new(SturmianPoint::new(Sturmian::silver(), QuadraticReal::from_ratio(phase, 1_000_000))) as SharedPoint;
        let p = flow.point(x, i, QuadraticReal::from_ratio(h, 100)).unwrap();
        let (s, t) = (QuadraticReal::from_ratio(s, 100), QuadraticReal::from_ratio(t, 100));
        let a = flow.flow(&flow.flow(&p, &s).unwrap(), &t).unwrap();
        let b = flow.flow(&p, &s.try_add(&t).unwrap()).unwrap();
        prop_assert_eq!(a.index, b.index);
        prop_assert!(a.same_as(&b, 2).unwrap());
        let back = flow.flow(&b, &s.try_add(&t).unwrap().mul_int(-1)).unwrap();
        prop_assert!(back.same_as(&p, 2).unwrap() && back.index == p.index);
    }

    #[test]
    fn marking_subwords_sit_between_consecutive_ps(letters in prop::collection::vec(label(), 0..60), k in 1usize..5) {
        for (s, e) in find_marking_subwords(&letters, k) {
            prop_assert!(letters[s] == Label::P && letters[e] == Label::P);
            prop_assert!(!letters[s + 1..e].contains(&Label::P));
            let a = letters[s + 1..e].iter().filter(|&&l| l == Label::A).count();
            prop_assert!(a == k || a == k + 1);
        }
    }

    #[test]
    fn decoding_only_shortens_marker_runs(letters in prop::collection::vec(label(), 0..60), k in 1usize..5) {
        if let Ok(w) = decode_name(&letters, k) {
            let plain = translate(&letters);
            prop_assert!(w.len() <= plain.len());
            prop_assert!(w.iter().filter(|&&s| s == 1).count() <= plain.iter().filter(|&&s| s == 1).count());
        }
    }
}
