#![allow(clippy::needless_range_loop)]

mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use wcparse::decoder::{check_tree, decode, decode_tags, hierarchical_decode, mst, total_score};
use wcparse::heads::{Boundary, TagSet};
use wcparse::tensor::Tensor;
use wcparse::toy;

fn valid_bmes(seq: &[Boundary]) -> bool {
    use Boundary::*;
    let first_ok = matches!(seq.first(), Some(B | S));
    let last_ok = matches!(seq.last(), Some(E | S));
    let pairs_ok = seq.windows(2).all(|w| match w[0] {
        B | M => matches!(w[1], M | E),
        E | S => matches!(w[1], B | S),
    });
    first_ok && last_ok && pairs_ok
}

/// Best valid joint tag sequence by exhaustive enumeration.
fn brute_force_tags(probs: &Tensor, tags: &TagSet) -> Vec<usize> {
    let (n, t) = (probs.rows(), tags.len());
    let mut best = (f64::NEG_INFINITY, Vec::new());
    let mut seq = vec![0; n];
    'outer: loop {
        let boundaries: Vec<Boundary> = seq.iter().map(|&i| tags.tag(i).boundary).collect();
        if valid_bmes(&boundaries) {
            let score: f64 = seq.iter().enumerate().map(|(i, &k)| probs.at(i, k).ln()).sum();
            if score > best.0 {
                best = (score, seq.clone());
            }
        }
        for k in 0..n {
            seq[k] += 1;
            if seq[k] < t {
                continue 'outer;
            }
            seq[k] = 0;
        }
        return best.1;
    }
}

fn spans_of(seq: &[usize], tags: &TagSet) -> (Vec<(usize, usize)>, Vec<String>) {
    let mut spans = Vec::new();
    let mut pos = Vec::new();
    let mut begin = 0;
    for (i, &k) in seq.iter().enumerate() {
        let tag = tags.tag(k);
        if matches!(tag.boundary, Boundary::B | Boundary::S) {
            begin = i + 1;
            pos.push(tag.pos.clone());
        }
        if matches!(tag.boundary, Boundary::E | Boundary::S) {
            spans.push((begin, i + 1));
        }
    }
    (spans, pos)
}

#[test]
fn tag_decoding_matches_exhaustive_search() {
    let tags = TagSet::from_pos(["NN", "VV"]);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in 1..=5 {
        for _ in 0..20 {
            let probs = common::random_tag_probs(&mut rng, n, tags.len());
            let expected = spans_of(&brute_force_tags(&probs, &tags), &tags);
            assert_eq!(decode_tags(&probs, &tags).unwrap(), expected);
        }
    }
}

#[test]
fn valid_argmax_is_kept() {
    let tags = TagSet::from_pos(["NN", "VV"]);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut probs = common::random_tag_probs(&mut rng, 4, tags.len());
    // make B_VV E_VV S_NN S_NN the clear argmax
    let want = ["B_VV", "E_VV", "S_NN", "S_NN"];
    for (i, w) in want.iter().enumerate() {
        let k = tags.index(&w.parse().unwrap()).unwrap();
        probs.data_mut()[i * tags.len() + k] += 5.0;
    }
    let (spans, pos) = decode_tags(&probs, &tags).unwrap();
    assert_eq!(spans, vec![(1, 2), (3, 3), (4, 4)]);
    assert_eq!(pos, vec!["VV", "NN", "NN"]);
}

#[test]
fn lone_middle_tag_is_repaired() {
    let tags = TagSet::from_pos(["NN"]);
    let idx = |s: &str| tags.index(&s.parse().unwrap()).unwrap();
    let mut probs = Tensor::full(&[1, tags.len()], 0.1);
    probs.data_mut()[idx("M_NN")] = 0.7;
    let (spans, _) = decode_tags(&probs, &tags).unwrap();
    assert_eq!(spans, vec![(1, 1)]);
}

#[test]
fn mst_matches_brute_force() {
    let report = common::mst_against_brute_force(300, 5);
    assert_eq!(report.score_mismatches, 0);
    assert_eq!(report.structure_mismatches, 0);
    assert!(report.unique_optima > 250);
}

#[test]
fn mst_single_node_and_root_constraint() {
    let scores = Tensor::from_rows(&[vec![-3.0]]).unwrap();
    assert!(mst(&Tensor::new(vec![2, 1], vec![-3.0, 7.0]).unwrap(), true).is_ok());
    assert!(mst(&scores, true).is_err());
    // every node prefers the root; the unconstrained tree attaches both
    let scores = Tensor::from_rows(&[vec![5.0, 5.0], vec![0.0, 1.0], vec![2.0, 0.0]]).unwrap();
    assert_eq!(mst(&scores, false).unwrap(), vec![0, 0]);
    let heads = mst(&scores, true).unwrap();
    // 0 -> 2 -> 1 scores 5 + 2, above 0 -> 1 -> 2 at 5 + 1
    assert_eq!(heads, vec![2, 0]);
    assert_eq!(total_score(&scores, &heads), 7.0);
}

#[test]
fn gold_distributions_reproduce_gold_parses() {
    let train = toy::bundled_train();
    let tags = TagSet::from_pos(train.iter().flat_map(|s| s.pos.iter()));
    for s in toy::bundled_dev() {
        let n = s.chars.len();
        let mut tag_probs = Tensor::zeros(&[n, tags.len()]);
        for (i, t) in s.char_tags().iter().enumerate() {
            tag_probs.data_mut()[i * tags.len() + tags.index(t).unwrap()] = 1.0;
        }
        let mut arc_probs = Tensor::zeros(&[n + 1, n]);
        for (i, &h) in s.char_heads().iter().enumerate() {
            arc_probs.data_mut()[h * n + i] = 1.0;
        }
        assert_eq!(decode(&tag_probs, &arc_probs, &tags, &s.chars).unwrap(), s.to_parse_output());
    }
}

#[test]
fn words_attach_by_first_character_scores() {
    // spans (1,2) and (3,3): word 2 should head word 1 through character 3
    let chars: Vec<char> = "甲乙丙".chars().collect();
    let mut arcs = Tensor::full(&[4, 3], 0.01);
    arcs.data_mut()[3 * 3] = 0.9; // char 3 heads char 1
    arcs.data_mut()[2] = 0.9; // root heads char 3
    let p = hierarchical_decode(&arcs, &chars, &[(1, 2), (3, 3)], vec!["NN".into(), "VV".into()]).unwrap();
    assert_eq!(p.heads, vec![2, 0]);
    assert_eq!(p.char_heads, vec![3, 1, 0]);
    assert!(common::parse_violations(&p).is_empty());
}

#[test]
fn decoding_random_distributions_is_always_valid() {
    assert_eq!(common::decoding_violations(300, 12, 8), 0);
}

#[test]
fn tree_checker_examples() {
    assert!(check_tree(&[0, 1, 1]).is_ok());
    assert!(check_tree(&[0, 0]).is_err());
    assert!(check_tree(&[2, 3, 2]).is_err());
    assert!(check_tree(&[]).is_err());
}

proptest! {
    #[test]
    fn decoded_parses_satisfy_invariants(seed in any::<u64>(), n in 1usize..16) {
        let tags = TagSet::from_pos(["NN", "VV"]);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let chars: Vec<char> = (0..n).map(|i| char::from_u32(0x4e00 + i as u32).unwrap()).collect();
        let tag_probs = common::random_tag_probs(&mut rng, n, tags.len());
        let arc_probs = common::random_arc_probs(&mut rng, n);
        let p = decode(&tag_probs, &arc_probs, &tags, &chars).unwrap();
        prop_assert_eq!(common::parse_violations(&p), Vec::<String>::new());
    }
}
