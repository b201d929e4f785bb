use std::collections::BTreeMap;

use exposure_core::taxonomy::{read_taxonomy, WeightPolicy};
use exposure_core::validation::{
    pairwise_similarity, regress, transition_recall, OccupationPair, Selector, TransitionNetwork,
};

/// Level-only weights so each vector is exactly its listed levels.
const VECTORS: [[f64; 4]; 10] = [
    [1.0, 0.0, 0.0, 0.0],
    [1.0, 1.0, 0.0, 0.0],
    [0.0, 1.0, 0.0, 0.0],
    [0.0, 1.0, 1.0, 0.0],
    [0.0, 0.0, 1.0, 0.0],
    [0.0, 0.0, 1.0, 1.0],
    [0.0, 0.0, 0.0, 1.0],
    [1.0, 0.0, 0.0, 1.0],
    [1.0, 1.0, 1.0, 1.0],
    [2.0, 1.0, 0.0, 0.0],
];

fn code(i: usize) -> String {
    format!("11-{:04}", i + 1)
}

fn matrix_csv() -> String {
    let mut s =
        String::from("occupation_code,occupation_title,industry,skill_id,skill_name,skill_category,importance,level\n");
    for (i, v) in VECTORS.iter().enumerate() {
        for (k, &level) in v.iter().enumerate() {
            if level > 0.0 {
                s.push_str(&format!("{},Occ {i},x,S{k},s{k},skill,1,{level}\n", code(i)));
            }
        }
    }
    s
}

fn cosine(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    let dot: f64 = (0..4).map(|k| a[k] * b[k]).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

fn edges() -> Vec<(usize, usize)> {
    vec![(0, 1), (2, 3), (0, 9), (4, 6), (7, 8)]
}

/// (recall, precision) by brute force over all 45 pairs.
fn brute_force(selector: Selector) -> (f64, f64) {
    let mut pairs = Vec::new();
    for (i, a) in VECTORS.iter().enumerate() {
        for (j, b) in VECTORS.iter().enumerate().skip(i + 1) {
            pairs.push((i, j, cosine(a, b)));
        }
    }
    assert_eq!(pairs.len(), 45);
    let picked: Vec<(usize, usize)> = match selector {
        Selector::Threshold(t) => pairs.iter().filter(|p| p.2 >= t).map(|p| (p.0, p.1)).collect(),
        Selector::TopFraction(f) => {
            let k = (f * 45.0 - 1e-9).ceil() as usize;
            let mut sorted = pairs.clone();
            sorted.sort_by(|x, y| y.2.partial_cmp(&x.2).unwrap().then((x.0, x.1).cmp(&(y.0, y.1))));
            sorted.iter().take(k).map(|p| (p.0, p.1)).collect()
        }
    };
    let hits = picked.iter().filter(|p| edges().contains(p)).count() as f64;
    (hits / edges().len() as f64, hits / picked.len() as f64)
}

#[test]
fn ten_occupation_recall_matches_enumeration() {
    let m = read_taxonomy(matrix_csv().as_bytes(), "ten").unwrap();
    let sims = pairwise_similarity(&m, WeightPolicy::Level).unwrap();
    assert_eq!(sims.len(), 45);
    for s in &sims {
        let i = m.occupation_position(&s.pair.a).unwrap();
        let j = m.occupation_position(&s.pair.b).unwrap();
        assert!((s.similarity - cosine(&VECTORS[i], &VECTORS[j])).abs() <= 1e-15);
    }
    // hand values
    let at = |i: usize, j: usize| {
        sims.iter()
            .find(|s| s.pair.a == code(i) && s.pair.b == code(j))
            .unwrap()
            .similarity
    };
    assert!((at(0, 1) - 1.0 / 2f64.sqrt()).abs() < 1e-15);
    assert_eq!(at(0, 2), 0.0);
    assert!((at(0, 8) - 0.5).abs() < 1e-15);
    assert!((at(1, 9) - 3.0 / 10f64.sqrt()).abs() < 1e-15);

    let network = TransitionNetwork::new(
        edges()
            .into_iter()
            .map(|(i, j)| OccupationPair::new(&code(i), &code(j)).unwrap()),
    );
    for selector in [
        Selector::Threshold(0.9),
        Selector::Threshold(0.7),
        Selector::Threshold(0.5),
        Selector::Threshold(0.0),
        Selector::TopFraction(0.1),
        Selector::TopFraction(0.2),
        Selector::TopFraction(0.5),
        Selector::TopFraction(1.0),
    ] {
        let r = transition_recall(&sims, &network, selector).unwrap();
        let (recall, precision) = brute_force(selector);
        assert_eq!((r.recall, r.precision), (recall, precision), "{selector}");
    }
}

fn series(v: &[f64]) -> BTreeMap<String, f64> {
    v.iter().enumerate().map(|(i, &x)| (format!("S{i}"), x)).collect()
}

#[test]
fn five_point_fit_matches_normal_equations() {
    let x = [1.0, 2.0, 3.0, 4.0, 5.0];
    let y = [2.1, 3.9, 6.2, 7.8, 10.1];
    let n = 5.0;
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let syy: f64 = y.iter().map(|v| v * v).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let intercept = (sy - slope * sx) / n;
    let r2 = (n * sxy - sx * sy).powi(2) / ((n * sxx - sx * sx) * (n * syy - sy * sy));
    let fit = regress(&series(&x), &series(&y)).unwrap();
    assert!((fit.slope - slope).abs() <= 1e-12);
    assert!((fit.intercept - intercept).abs() <= 1e-12);
    assert!((fit.r2 - r2).abs() <= 1e-12);
    assert_eq!(fit.n, 5);
}

#[test]
fn metric_against_itself_is_perfect() {
    let v = series(&[3.0, 1.0, 4.0, 1.0, 5.0, 9.0]);
    assert!((regress(&v, &v).unwrap().r2 - 1.0).abs() < 1e-15);
}
