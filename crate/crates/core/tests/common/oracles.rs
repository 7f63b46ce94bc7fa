//! Brute-force reference implementations written without reference to the
//! library code.

/// Full-matrix edit distance.
pub fn edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=b.len() {
        d[0][j] = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let cost = if a[i - 1] == b[j - 1] { 0 } else { 1 };
            d[i][j] = *[d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + cost].iter().min().unwrap();
        }
    }
    d[a.len()][b.len()]
}

pub fn levenshtein(a: &str, b: &str) -> f64 {
    let m = a.chars().count().max(b.chars().count());
    if m == 0 {
        1.0
    } else {
        1.0 - edit_distance(a, b) as f64 / m as f64
    }
}

fn trigrams(s: &str) -> Vec<String> {
    let c: Vec<char> = s.chars().collect();
    match c.len() {
        0 => vec![],
        1 | 2 => vec![s.to_string()],
        n => (0..n - 2).map(|i| c[i..i + 3].iter().collect()).collect(),
    }
}

pub fn dice(a: &str, b: &str) -> f64 {
    let ga = trigrams(a);
    let mut gb = trigrams(b);
    let total = ga.len() + gb.len();
    if total == 0 {
        return 1.0;
    }
    let mut common = 0;
    for g in &ga {
        if let Some(pos) = gb.iter().position(|x| x == g) {
            gb.swap_remove(pos);
            common += 1;
        }
    }
    2.0 * common as f64 / total as f64
}

pub fn jaro(a: &str, b: &str) -> f64 {
    let s: Vec<char> = a.chars().collect();
    let t: Vec<char> = b.chars().collect();
    if s.is_empty() && t.is_empty() {
        return 1.0;
    }
    if s.is_empty() || t.is_empty() {
        return 0.0;
    }
    let reach = (s.len().max(t.len()) / 2) as isize - 1;
    let reach = reach.max(0);
    let mut s_hit = vec![false; s.len()];
    let mut t_hit = vec![false; t.len()];
    let mut m = 0;
    for i in 0..s.len() {
        for j in 0..t.len() {
            let gap = i as isize - j as isize;
            if gap.abs() <= reach && !t_hit[j] && s[i] == t[j] {
                s_hit[i] = true;
                t_hit[j] = true;
                m += 1;
                break;
            }
        }
    }
    if m == 0 {
        return 0.0;
    }
    let left: Vec<char> = (0..s.len()).filter(|&i| s_hit[i]).map(|i| s[i]).collect();
    let right: Vec<char> = (0..t.len()).filter(|&j| t_hit[j]).map(|j| t[j]).collect();
    let mismatched = (0..m).filter(|&k| left[k] != right[k]).count();
    let m = m as f64;
    let t_count = (mismatched / 2) as f64;
    (m / s.len() as f64 + m / t.len() as f64 + (m - t_count) / m) / 3.0
}

pub fn tokens(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for c in s.chars() {
        if c.is_alphanumeric() {
            cur.push(c);
        } else if !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

/// Greedy Generalized Jaccard: repeatedly take the most similar unused
/// token pair (at least 0.5, earliest pair on ties).
pub fn generalized_jaccard(a: &str, b: &str) -> f64 {
    let x = tokens(a);
    let y = tokens(b);
    if x.is_empty() && y.is_empty() {
        return 1.0;
    }
    if x.is_empty() || y.is_empty() {
        return 0.0;
    }
    let mut x_free = vec![true; x.len()];
    let mut y_free = vec![true; y.len()];
    let mut total = 0.0;
    let mut pairs = 0;
    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..x.len() {
            for j in 0..y.len() {
                if !x_free[i] || !y_free[j] {
                    continue;
                }
                let s = jaro(&x[i], &y[j]);
                if s >= 0.5 && best.is_none_or(|(b, _, _)| s > b) {
                    best = Some((s, i, j));
                }
            }
        }
        let Some((s, i, j)) = best else { break };
        x_free[i] = false;
        y_free[j] = false;
        total += s;
        pairs += 1;
    }
    total / (x.len() + y.len() - pairs) as f64
}
