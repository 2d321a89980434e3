use rand::Rng;
use smoothlab::rng::at_counter;
use smoothlab::valuations::{beta_fsubadditive, is_subadditive, TableValuation};

// random monotone table, then subadditive closure (v(S) <- min over splits),
// then monotone repair, iterated to a fixed point
fn random_subadditive(seed: u64, k: u64) -> TableValuation {
    let mut rng = at_counter(seed, k);
    let m = 4usize;
    let size = 1usize << m;
    let mut v = vec![0.0f64; size];
    for s in 1..size {
        let mut lo = 0.0f64;
        for j in 0..m {
            if s & (1 << j) != 0 {
                lo = lo.max(v[s & !(1 << j)]);
            }
        }
        let bump = rng.random_range(0..=8u32) as f64 * 0.25;
        v[s] = lo.max(rng.random_range(0..=1u32) as f64 * lo + bump.min(2.0)).min(lo + bump);
        v[s] = v[s].max(lo);
    }
    // closure: enforce subadditivity on disjoint splits, restore monotonicity
    loop {
        let mut changed = false;
        for s in 1u32..size as u32 {
            // subadditive cap over disjoint splits
            let mut t = (s - 1) & s;
            while t != 0 {
                let other = s & !t;
                if other != 0 {
                    let cap = v[t as usize] + v[other as usize];
                    if v[s as usize] > cap {
                        v[s as usize] = cap;
                        changed = true;
                    }
                }
                t = (t - 1) & s;
            }
        }
        for s in 1u32..size as u32 {
            for j in 0..m {
                if s & (1 << j) != 0 && v[s as usize] < v[(s & !(1 << j)) as usize] {
                    v[s as usize] = v[(s & !(1 << j)) as usize];
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    TableValuation::new(m, v).expect("closure yields a valid table")
}

fn main() {
    let ln4 = 4.0f64.ln();
    let mut worst = 0.0f64;
    let mut over = 0;
    let n = 500;
    for k in 0..n {
        let table = random_subadditive(777, k);
        assert!(is_subadditive(&table));
        let beta = beta_fsubadditive(&table);
        if beta > worst {
            worst = beta;
        }
        if beta > ln4 + 1e-9 {
            over += 1;
            if over <= 5 {
                println!("k={k}: beta = {beta:.4} > ln4 = {ln4:.4}");
            }
        }
    }
    println!("n={n}, worst beta = {worst:.4}, ln4 = {ln4:.4}, over = {over}");
}
