use ctxdim::fixtures;
use ctxdim::bounds::*;
use ctxdim::linalg::sym_eig;

fn main() {
    // Rebuild the tilde equality rows exactly as upper_tilde_ppt does and
    // measure the rank of the row Gram matrix.
    use ctxdim::ppt::PptAssembly;
    let g = fixtures::gkk();
    let _w = WeightVector::ones(9);
    let n = 9usize;
    let n1 = 10usize;
    let d = 3usize;
    let df = d as f64;
    let mut asm = PptAssembly::new(n1, d, (df * df, df));
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    rows.push(asm.m_entry(0, 0, 0, 0).into_iter().collect());
    for &(u, v) in g.edges() {
        let (hi, lo) = (u.max(v), u.min(v));
        for k in 0..n1 {
            for l in 0..n1 {
                let acc = asm.m_entry(hi, k, lo, l);
                let row: Vec<(usize, f64)> = acc.into_iter().filter(|&(_, x)| x != 0.0).collect();
                if !row.is_empty() { rows.push(row); }
            }
        }
    }
    for i in 1..=n {
        for k in 0..n1 {
            for l in 0..n1 {
                let mut acc = asm.m_entry(i, k, 0, l);
                for (var, co) in asm.m_entry(i, k, i, l) {
                    *acc.entry(var).or_insert(0.0) -= co;
                }
                let row: Vec<(usize, f64)> = acc.into_iter().filter(|&(_, x)| x != 0.0).collect();
                if !row.is_empty() { rows.push(row); }
            }
        }
    }
    let m = rows.len();
    let nv = asm.problem.num_vars();
    println!("tilde equality rows: {m}, vars {nv}");
    // Gram of rows
    let mut gram = vec![0.0; m * m];
    let dense: Vec<std::collections::HashMap<usize, f64>> = rows
        .iter()
        .map(|r| r.iter().cloned().collect())
        .collect();
    for i in 0..m {
        for j in i..m {
            let (a, b) = if dense[i].len() <= dense[j].len() { (i, j) } else { (j, i) };
            let mut acc = 0.0;
            for (k, v) in dense[a].iter() {
                if let Some(w) = dense[b].get(k) { acc += v * w; }
            }
            gram[i * m + j] = acc;
            gram[j * m + i] = acc;
        }
    }
    let t0 = std::time::Instant::now();
    let (vals, _) = sym_eig(m, &gram).unwrap();
    let top = vals[0];
    let rank = vals.iter().filter(|&&v| v > 1e-10 * top).count();
    println!("rank = {rank} (top {top:.3e}, smallest {:.3e}), eig took {:.1?}", vals[m-1], t0.elapsed());
}
