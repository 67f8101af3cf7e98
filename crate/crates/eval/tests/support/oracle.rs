//! A second implementation straight from the formulas: n-grams as joined
//! strings, LCS by full table, BLEU via product of precisions. Shares no
//! code with the crate.

pub fn words(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for ch in s.chars() {
        if ch.is_alphanumeric() {
            cur.extend(ch.to_lowercase());
        } else if !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

fn grams(w: &[String], n: usize) -> Vec<String> {
    if w.len() < n {
        return vec![];
    }
    (0..=w.len() - n).map(|i| w[i..i + n].join("\u{1}")).collect()
}

fn overlap(c: &[String], r: &[String]) -> usize {
    let mut pool = r.to_vec();
    let mut hits = 0;
    for g in c {
        if let Some(k) = pool.iter().position(|x| x == g) {
            pool.swap_remove(k);
            hits += 1;
        }
    }
    hits
}

pub fn rouge_n(c: &str, r: &str, n: usize) -> f64 {
    let (cg, rg) = (grams(&words(c), n), grams(&words(r), n));
    if cg.is_empty() && rg.is_empty() {
        return 1.0;
    }
    let o = overlap(&cg, &rg) as f64;
    if o == 0.0 {
        return 0.0;
    }
    let (p, rc) = (o / cg.len() as f64, o / rg.len() as f64);
    2.0 * p * rc / (p + rc)
}

pub fn rouge_l(c: &str, r: &str) -> f64 {
    let (a, b) = (words(c), words(r));
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let mut t = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            t[i][j] = if a[i - 1] == b[j - 1] { t[i - 1][j - 1] + 1 } else { t[i - 1][j].max(t[i][j - 1]) };
        }
    }
    let l = t[a.len()][b.len()] as f64;
    if l == 0.0 {
        return 0.0;
    }
    let (p, rc) = (l / a.len() as f64, l / b.len() as f64);
    2.0 * p * rc / (p + rc)
}

pub fn bleu(c: &[String], r: &[String]) -> f64 {
    let mut prod = 1.0f64;
    let (mut cl, mut rl) = (0usize, 0usize);
    for (x, y) in c.iter().zip(r) {
        cl += words(x).len();
        rl += words(y).len();
    }
    if cl == 0 {
        return 0.0;
    }
    for n in 1..=4 {
        let (mut m, mut t) = (0usize, 0usize);
        for (x, y) in c.iter().zip(r) {
            let (cg, rg) = (grams(&words(x), n), grams(&words(y), n));
            m += overlap(&cg, &rg);
            t += cg.len();
        }
        let p = if m == 0 && n > 1 { 1.0 / (t as f64 + 1.0) } else if m == 0 { 0.0 } else { m as f64 / t as f64 };
        prod *= p;
    }
    let bp = if cl > rl { 1.0 } else { (1.0 - rl as f64 / cl as f64).exp() };
    100.0 * bp * prod.powf(0.25)
}
