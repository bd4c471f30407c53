use proptest::prelude::*;

use sqsa::automata::{deserialize_family, serialize_family, Semiautomaton};
use sqsa::sq::{BuiltinQuery, OracleSession};
use sqsa::walk::DEFAULT_BRUTE_LIMIT;
use sqsa::{build_family, p_agree_bruteforce, p_agree_exact, FamilyConfig, Permutation, StdCache};

fn perm_strategy(n: usize) -> impl Strategy<Value = Permutation> {
    Just((0..n).collect::<Vec<usize>>())
        .prop_shuffle()
        .prop_map(|v| Permutation::from_images(v).unwrap())
}

fn mask_pair(n: usize, k: usize) -> impl Strategy<Value = (Vec<bool>, Vec<bool>)> {
    let bits = k * n * (n - 1) / 2;
    (
        prop::collection::vec(any::<bool>(), bits),
        prop::collection::vec(any::<bool>(), bits),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn composition_is_associative(
        (a, b, c) in (3usize..9).prop_flat_map(|n| (perm_strategy(n), perm_strategy(n), perm_strategy(n)))
    ) {
        let left = a.compose(&b).unwrap().compose(&c).unwrap();
        let right = a.compose(&b.compose(&c).unwrap()).unwrap();
        prop_assert_eq!(left, right);
        prop_assert!(a.compose(&a.inverse()).unwrap().is_identity());
    }

    #[test]
    fn family_round_trip(n in 2usize..7, k in 1usize..4, m in 1usize..6, seed in any::<u64>(), p in 0.05f64..0.95) {
        let fam = build_family(&FamilyConfig { n, k, m, p, seed }).unwrap();
        let bytes = serialize_family(&fam);
        let back = deserialize_family(&bytes).unwrap();
        prop_assert_eq!(&back, &fam);
        prop_assert_eq!(serialize_family(&back), bytes.clone());
        prop_assert!(deserialize_family(&bytes[..bytes.len() - 1]).is_err());
    }

    #[test]
    fn spectral_matches_enumeration((ma, mb) in mask_pair(4, 1), t in 0usize..5) {
        let a = Semiautomaton::from_mask(4, 1, ma).unwrap();
        let b = Semiautomaton::from_mask(4, 1, mb).unwrap();
        let cache = StdCache::new(4).unwrap();
        let exact = p_agree_exact(&a, &b, t, &cache).unwrap();
        let brute = p_agree_bruteforce(&a, &b, t, DEFAULT_BRUTE_LIMIT).unwrap();
        prop_assert!((exact.p_agree - brute.p_agree).abs() < 1e-10);
        prop_assert!(exact.residual >= -0.25 - 1e-12 && exact.residual <= 0.75 + 1e-12);
    }

    #[test]
    fn survivors_only_shrink(seed in any::<u64>(), tau in 0.05f64..0.8, t in 0usize..4) {
        let fam = build_family(&FamilyConfig { n: 3, k: 1, m: 6, p: 0.5, seed }).unwrap();
        let mut s = OracleSession::new(fam.members().to_vec(), t, tau).unwrap();
        let mut last = s.survivor_count();
        let queries = [
            BuiltinQuery::Parity {},
            BuiltinQuery::StartAgreement { shift: 1 },
            BuiltinQuery::LabelIndicator { reference: 2 },
            BuiltinQuery::LabelIndicator { reference: 4 },
        ];
        for q in &queries {
            s.ask(q).unwrap();
            let now = s.survivor_count();
            prop_assert!(now <= last);
            last = now;
            // survivors are consistent with the answer within tolerance
            let entry = s.ledger().last().unwrap();
            for &(id, ip) in &entry.inner_products {
                prop_assert_eq!(ip.abs() > tau, entry.eliminated_ids.contains(&id));
            }
        }
    }
}
