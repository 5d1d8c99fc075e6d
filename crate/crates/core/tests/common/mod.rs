//! Seeded instance generators shared by the integration tests.
#![allow(dead_code)]

use martpoly::exactmath::{int, ratio, Rational, RationalMatrix, RationalVector};
use martpoly::market::{MartingaleSystem, OnePeriodMarket};
use martpoly::models::FactorModel;
use martpoly::multiperiod::{EventTree, NodeSpec, TreeMarket};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn system<const N: usize>(rows: &[[i64; N]], rhs: &[i64]) -> MartingaleSystem {
    MartingaleSystem::new(
        RationalMatrix::from_integers(rows),
        rhs.iter().map(|&x| int(x)).collect(),
    )
    .unwrap()
}

pub fn market<const N: usize>(rows: &[[i64; N]], rhs: &[i64]) -> OnePeriodMarket {
    let s = system(rows, rhs);
    OnePeriodMarket::from_system(s.matrix, s.rhs).unwrap()
}

pub fn v(items: &[(i64, i64)]) -> RationalVector {
    items.iter().map(|&(n, d)| ratio(n, d)).collect()
}

pub fn small_rational(rng: &mut ChaCha8Rng, lo: i64, hi: i64, max_den: i64) -> Rational {
    ratio(rng.gen_range(lo..=hi), rng.gen_range(1..=max_den))
}

/// `n × b` system with integer entries in `[-9, 9]` whose right-hand side is a
/// random convex combination of the columns, so most instances are feasible.
pub fn random_system(rng: &mut ChaCha8Rng) -> MartingaleSystem {
    let b = rng.gen_range(1..=7);
    let n = rng.gen_range(1..=4);
    let rows: Vec<RationalVector> = (0..n)
        .map(|_| (0..b).map(|_| int(rng.gen_range(-9..=9))).collect())
        .collect();
    let m = RationalMatrix::from_rows(b, rows).unwrap();
    let mut w: Vec<i64> = (0..b).map(|_| rng.gen_range(0..=3)).collect();
    if w.iter().all(|&x| x == 0) {
        w[rng.gen_range(0..b)] = 1;
    }
    let total: i64 = w.iter().sum();
    let weights: RationalVector = w.iter().map(|&x| ratio(x, total)).collect();
    let rhs = m.mul_vector(&weights).unwrap();
    MartingaleSystem::new(m, rhs).unwrap()
}

/// Random one-period market: rate in `[0, 1/2]`, up to 3 assets, payoffs in
/// `[0, 12]`, spots priced by a random probability vector (so usually viable).
pub fn random_market(rng: &mut ChaCha8Rng) -> OnePeriodMarket {
    let b = rng.gen_range(2..=5);
    let n = rng.gen_range(1..=3);
    let rate = ratio(rng.gen_range(0..=5), 10);
    let rows: Vec<RationalVector> = (0..n)
        .map(|_| (0..b).map(|_| int(rng.gen_range(0..=12))).collect())
        .collect();
    let payoffs = RationalMatrix::from_rows(b, rows).unwrap();
    let mut w: Vec<i64> = (0..b).map(|_| rng.gen_range(0..=3)).collect();
    if rng.gen_bool(0.7) {
        w.iter_mut().for_each(|x| *x += 1);
    }
    if w.iter().all(|&x| x == 0) {
        w[0] = 1;
    }
    let total: i64 = w.iter().sum();
    let q: RationalVector = w.iter().map(|&x| ratio(x, total)).collect();
    let growth = int(1) + &rate;
    let spot = payoffs
        .mul_vector(&q)
        .unwrap()
        .into_iter()
        .map(|x| x / &growth)
        .collect();
    OnePeriodMarket::new(rate, spot, payoffs, None).unwrap()
}

/// Viable trinomial factor model; roughly a third of the instances put
/// `1 + r` exactly on the middle factor.
pub fn random_trinomial(rng: &mut ChaCha8Rng) -> FactorModel {
    let mut f: Vec<Rational> = Vec::new();
    while f.len() < 3 {
        let x = small_rational(rng, 1, 40, 12);
        if !f.contains(&x) {
            f.push(x);
        }
    }
    f.sort();
    let growth = if rng.gen_bool(1.0 / 3.0) {
        f[1].clone()
    } else {
        let u = ratio(rng.gen_range(1..=19), 20);
        &f[0] + (&f[2] - &f[0]) * u
    };
    let spot = small_rational(rng, 1, 20, 5);
    FactorModel::new(f, growth - int(1), spot).unwrap()
}

/// Random tree of the given horizon, one to three children per node and
/// `assets` risky assets, priced so that every component is viable.
pub fn random_viable_tree(rng: &mut ChaCha8Rng, horizon: usize, assets: usize) -> TreeMarket {
    let rates: RationalVector = (0..horizon)
        .map(|_| ratio(rng.gen_range(0..=3), 20))
        .collect();
    let mut specs = vec![NodeSpec {
        id: "r".into(),
        time: 0,
        children: Vec::new(),
    }];
    let mut prices: Vec<RationalVector> =
        vec![(0..assets).map(|_| int(rng.gen_range(5..=15))).collect()];
    let mut frontier = vec![0usize];
    for rate in &rates {
        let mut next = Vec::new();
        for &parent in &frontier {
            let m = rng.gen_range(1..=3);
            let growth = int(1) + rate;
            // children priced as (1+r)·parent + d_j with Σ d_j = 0, so the
            // uniform measure is martingale and strictly positive
            let mut child_prices: Vec<RationalVector> = vec![Vec::new(); m];
            for price in &prices[parent] {
                let base = price * &growth;
                let mut d: Vec<i64> = (0..m).map(|_| rng.gen_range(-3..=3)).collect();
                let s: i64 = d.iter().sum();
                d[m - 1] -= s;
                d.shuffle(rng);
                for (j, dj) in d.into_iter().enumerate() {
                    child_prices[j].push(&base + int(dj));
                }
            }
            for cp in child_prices {
                let id = format!("{}{}", specs[parent].id, specs.len());
                specs[parent].children.push(id.clone());
                specs.push(NodeSpec {
                    id,
                    time: specs[parent].time + 1,
                    children: Vec::new(),
                });
                prices.push(cp);
                next.push(specs.len() - 1);
            }
        }
        frontier = next;
    }
    TreeMarket::new(EventTree::new(specs).unwrap(), assets, prices, rates).unwrap()
}

/// Tree JSON where every node branches into children with the given factors
/// applied to a single asset.
pub fn factor_tree_json(spot: i64, factors: &[(i64, i64)], rate: &str, horizon: usize) -> String {
    let mut nodes = vec![(String::from("n"), 0usize, ratio(spot, 1))];
    let mut docs = Vec::new();
    let mut i = 0;
    while i < nodes.len() {
        let (id, t, s) = nodes[i].clone();
        let mut children = Vec::new();
        if t < horizon {
            for (j, &(n, d)) in factors.iter().enumerate() {
                let cid = format!("{id}{j}");
                children.push(format!("\"{cid}\""));
                nodes.push((cid, t + 1, &s * ratio(n, d)));
            }
        }
        docs.push(format!(
            "{{\"id\":\"{id}\",\"time\":{t},\"children\":[{}],\"prices\":[\"{}\"]}}",
            children.join(","),
            martpoly::exactmath::format_rational(&s)
        ));
        i += 1;
    }
    let rates = vec![format!("\"{rate}\""); horizon].join(",");
    format!(
        "{{\"assets\":1,\"rates\":[{rates}],\"nodes\":[{}]}}",
        docs.join(",")
    )
}
