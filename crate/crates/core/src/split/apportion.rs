/// Largest-remainder apportionment of `n` units over normalized `ratios`,
/// with at least one unit per set when `n >= ratios.len()`.
///
/// Remainder ties go to the earlier set. When the floor of one unit binds,
/// the unit is taken from the set holding the most units above its quota.
pub fn apportion(ratios: &[f64], n: usize) -> Vec<usize> {
    let sum: f64 = ratios.iter().sum();
    let quotas: Vec<f64> = ratios.iter().map(|r| r / sum * n as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..ratios.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().take(n.saturating_sub(assigned)) {
        counts[i] += 1;
    }

    if n >= ratios.len() {
        while let Some(empty) = counts.iter().position(|&c| c == 0) {
            let donor = (0..counts.len())
                .filter(|&i| counts[i] > 1)
                .max_by(|&a, &b| {
                    let sa = counts[a] as f64 - quotas[a];
                    let sb = counts[b] as f64 - quotas[b];
                    sa.total_cmp(&sb).then(b.cmp(&a))
                })
                .expect("n >= sets guarantees a donor");
            counts[donor] -= 1;
            counts[empty] += 1;
        }
    }
    counts
}
