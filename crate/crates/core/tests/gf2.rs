use std::collections::HashSet;

use proptest::prelude::*;
use qprep::gf2::{
    compress, compress_with_stats, find_signature_vectors, rank_and_row_basis, select_substrings, signature_bound,
    CompressionStats, Gf2Error, Gf2Vec, SignatureMap,
};

fn bits(s: &str) -> Gf2Vec {
    Gf2Vec::parse_bits(s).unwrap()
}

/// Every element of the span, built by closing `{0}` under xor with each row.
fn span(rows: &[Gf2Vec], len: usize) -> HashSet<Gf2Vec> {
    let mut set: HashSet<Gf2Vec> = [Gf2Vec::zeros(len)].into_iter().collect();
    for r in rows {
        let shifted: Vec<Gf2Vec> = set.iter().map(|v| v.xor(r)).collect();
        set.extend(shifted);
    }
    set
}

fn brute_rank(rows: &[Gf2Vec], len: usize) -> usize {
    span(rows, len).len().trailing_zeros() as usize
}

fn vec_from(bools: &[bool]) -> Gf2Vec {
    Gf2Vec::from_bools(bools)
}

fn distinct_dets(n_bits: usize, d_max: usize) -> impl Strategy<Value = Vec<Gf2Vec>> {
    proptest::collection::hash_set(proptest::collection::vec(any::<bool>(), n_bits), 2..=d_max)
        .prop_map(|set| set.into_iter().map(|b| vec_from(&b)).collect())
}

fn sized_dets() -> impl Strategy<Value = Vec<Gf2Vec>> {
    (8usize..=40).prop_flat_map(|n| distinct_dets(n, 64))
}

#[test]
fn identity_has_full_rank() {
    let rows = [bits("100"), bits("010"), bits("001")];
    assert_eq!(rank_and_row_basis(&rows), (3, vec![0, 1, 2]));
}

#[test]
fn zero_matrix_has_rank_zero() {
    let rows = vec![Gf2Vec::zeros(4); 4];
    assert_eq!(rank_and_row_basis(&rows), (0, vec![]));
}

#[test]
fn rank_of_dependent_rows_picks_lowest_indices() {
    let rows = [bits("1100"), bits("0110"), bits("1010"), bits("0001")];
    assert_eq!(rank_and_row_basis(&rows), (3, vec![0, 1, 3]));
}

#[test]
fn single_differing_bit_selects_that_row() {
    let (rows, reduced) = select_substrings(&[bits("000"), bits("001")]).unwrap();
    assert_eq!(rows, vec![2]);
    assert_eq!(reduced, vec![bits("0"), bits("1")]);
}

#[test]
fn standard_basis_strings_keep_all_rows() {
    let dets: Vec<_> = ["1000", "0100", "0010", "0001"].iter().map(|s| bits(s)).collect();
    let (rows, reduced) = select_substrings(&dets).unwrap();
    assert_eq!(rows, vec![0, 1, 2, 3]);
    assert_eq!(reduced, dets);
}

#[test]
fn duplicate_determinants_are_rejected() {
    let dets = [bits("0110"), bits("1001"), bits("0110")];
    assert_eq!(compress(&dets), Err(Gf2Error::DuplicateDeterminant { first: 0, second: 2 }));
    assert!(matches!(select_substrings(&dets), Err(Gf2Error::DuplicateDeterminant { .. })));
}

#[test]
fn single_determinant_needs_no_signature() {
    let map = compress(&[bits("110100")]).unwrap();
    assert_eq!(map.signature_len(), 0);
    assert!(map.u_vectors.is_empty());
}

#[test]
fn two_determinants_get_one_bit() {
    let map = compress(&[bits("000"), bits("001")]).unwrap();
    assert_eq!(map.signature_len(), 1);
    assert_eq!(map.signatures, vec![bits("0"), bits("1")]);
}

#[test]
fn eight_orbital_four_determinant_example() {
    let dets: Vec<_> = ["11000000", "10100100", "01001001", "00110010"].iter().map(|s| bits(s)).collect();
    let map = compress(&dets).unwrap();
    assert!(map.rank() <= 4);
    assert_eq!(map.signature_len(), 3);
    let distinct: HashSet<_> = map.signatures.iter().collect();
    assert_eq!(distinct.len(), 4);
}

#[test]
fn identity_returned_at_the_bound() {
    // r = 3 = 2⌈log₂4⌉ − 1 for these four strings.
    let reduced = [bits("000"), bits("100"), bits("010"), bits("001")];
    let (u, _) = find_signature_vectors(&reduced).unwrap();
    assert_eq!(u, vec![bits("100"), bits("010"), bits("001")]);
}

#[test]
fn stats_respect_step_budget() {
    let dets: Vec<Gf2Vec> = (0..40u64).map(|i| Gf2Vec::from_u64(i * 0x9e37_79b9 % (1 << 30) | 1 << 31, 32)).collect();
    let (map, stats) = compress_with_stats(&dets).unwrap();
    assert_eq!(map.signature_len(), signature_bound(40));
    for &c in &stats.candidates_per_step {
        assert!(c <= CompressionStats::step_budget(40), "{c}");
    }
}

#[test]
fn signature_map_json_uses_hex() {
    let dets: Vec<_> = ["110000", "101000", "100100", "011000", "010010"].iter().map(|s| bits(s)).collect();
    let map = compress(&dets).unwrap();
    let text = serde_json::to_string(&map).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    for s in v["signatures"].as_array().unwrap() {
        assert!(s.as_str().unwrap().chars().all(|c| c.is_ascii_hexdigit()));
    }
    let back: SignatureMap = serde_json::from_str(&text).unwrap();
    assert_eq!(back, map);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn rank_matches_span_oracle(rows in proptest::collection::vec(proptest::collection::vec(any::<bool>(), 12), 20)) {
        let rows: Vec<Gf2Vec> = rows.iter().map(|r| vec_from(r)).collect();
        let (rank, basis) = rank_and_row_basis(&rows);
        prop_assert_eq!(rank, brute_rank(&rows, 12));
        prop_assert_eq!(basis.len(), rank);
        let chosen: Vec<Gf2Vec> = basis.iter().map(|&i| rows[i].clone()).collect();
        prop_assert_eq!(span(&chosen, 12), span(&rows, 12));
    }

    #[test]
    fn rank_is_permutation_invariant(
        rows in proptest::collection::vec(proptest::collection::vec(any::<bool>(), 10), 1..16),
        seed in any::<u64>(),
    ) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut row_perm: Vec<usize> = (0..rows.len()).collect();
        row_perm.shuffle(&mut rng);
        let mut col_perm: Vec<usize> = (0..10).collect();
        col_perm.shuffle(&mut rng);
        let original: Vec<Gf2Vec> = rows.iter().map(|r| vec_from(r)).collect();
        let permuted: Vec<Gf2Vec> = row_perm
            .iter()
            .map(|&i| vec_from(&col_perm.iter().map(|&c| rows[i][c]).collect::<Vec<_>>()))
            .collect();
        prop_assert_eq!(rank_and_row_basis(&original).0, rank_and_row_basis(&permuted).0);
    }

    #[test]
    fn compression_gives_distinct_consistent_signatures(dets in sized_dets()) {
        let map = compress(&dets).unwrap();
        let d = dets.len();
        prop_assert!(map.rank() <= dets[0].len().min(d));
        let expected_len = if map.rank() > signature_bound(d) { signature_bound(d) } else { map.rank() };
        prop_assert_eq!(map.signature_len(), expected_len);
        let distinct: HashSet<_> = map.signatures.iter().collect();
        prop_assert_eq!(distinct.len(), d);
        for (det, sig) in dets.iter().zip(&map.signatures) {
            prop_assert_eq!(&map.apply(det), sig);
            let restricted = det.restrict(&map.selected_rows);
            let by_hand: Vec<bool> = map.u_vectors.iter().map(|u| u.dot(&restricted)).collect();
            prop_assert_eq!(&vec_from(&by_hand), sig);
        }
    }

    #[test]
    fn restricted_strings_stay_distinct(dets in distinct_dets(16, 48)) {
        let (rows, reduced) = select_substrings(&dets).unwrap();
        prop_assert_eq!(rows.len(), reduced[0].len());
        let distinct: HashSet<_> = reduced.iter().collect();
        prop_assert_eq!(distinct.len(), dets.len());
    }

    #[test]
    fn bit_string_round_trip(b in proptest::collection::vec(any::<bool>(), 1..200)) {
        let v = vec_from(&b);
        prop_assert_eq!(Gf2Vec::parse_bits(&v.to_bit_string()).unwrap(), v.clone());
        prop_assert_eq!(Gf2Vec::from_hex(&v.to_hex(), v.len()).unwrap(), v);
    }
}
