//! Brute-force reference implementations used only by tests.
#![allow(dead_code)]

/// O(n^2) AUC: share of (positive, negative) pairs ranked correctly, ties half.
pub fn auc_pairs(labels: &[u8], scores: &[f64]) -> f64 {
    let mut credit = 0.0;
    let mut pairs = 0usize;
    for (i, &li) in labels.iter().enumerate() {
        if li != 1 {
            continue;
        }
        for (j, &lj) in labels.iter().enumerate() {
            if lj != 0 {
                continue;
            }
            pairs += 1;
            if scores[i] > scores[j] {
                credit += 1.0;
            } else if scores[i] == scores[j] {
                credit += 0.5;
            }
        }
    }
    credit / pairs as f64
}

/// Two-stage video score by a direct scan over a binary mask.
pub fn detect_video_scan(scores: &[f64], threshold: f64, c1: f64, c2: f64) -> f64 {
    let n = scores.len();
    let mask: Vec<bool> = scores.iter().map(|&s| s >= threshold).collect();
    let mut runs: Vec<(usize, usize)> = Vec::new(); // (start, len)
    let mut i = 0;
    while i < n {
        if mask[i] {
            let start = i;
            while i < n && mask[i] {
                i += 1;
            }
            runs.push((start, i - start));
        } else {
            i += 1;
        }
    }
    let mean_over = |idx: &mut dyn Iterator<Item = usize>| {
        let (mut sum, mut count) = (0.0, 0usize);
        for k in idx {
            sum += scores[k];
            count += 1;
        }
        sum / count as f64
    };
    if runs.is_empty() {
        return mean_over(&mut (0..n));
    }
    let mut best = 0;
    for (k, r) in runs.iter().enumerate() {
        if r.1 > runs[best].1 {
            best = k;
        }
    }
    let (bs, bl) = runs[best];
    if bl as f64 >= n as f64 * c1 {
        return mean_over(&mut (bs..bs + bl));
    }
    let others: Vec<usize> = runs
        .iter()
        .enumerate()
        .filter(|(k, _)| *k != best)
        .flat_map(|(_, &(s, l))| s..s + l)
        .collect();
    if !others.is_empty() && others.len() as f64 >= n as f64 * c2 {
        return mean_over(&mut others.into_iter());
    }
    mean_over(&mut (0..n))
}

/// Crop label from a 1 ms raster of the forged mask.
///
/// Short sources are tiled from sample 0; the crop is fake iff any sample
/// inside it is forged. Without annotations the original label is kept.
pub fn dynamic_label_raster(
    label: u8,
    forged_ms: &[(u32, u32)],
    duration_ms: u32,
    crop_start_ms: u32,
    target_ms: u32,
) -> u8 {
    if forged_ms.is_empty() {
        return label;
    }
    let mut mask = vec![false; duration_ms as usize];
    for &(s, e) in forged_ms {
        for m in &mut mask[s as usize..e as usize] {
            *m = true;
        }
    }
    let fake = (crop_start_ms..crop_start_ms + target_ms).any(|t| mask[(t % duration_ms) as usize]);
    u8::from(fake)
}

/// Highest confidence among `(start, end, conf)` triples covering time `t`, 0 if none.
pub fn max_conf_at(segs: &[(f64, f64, f64)], t: f64) -> f64 {
    segs.iter()
        .filter(|(s, e, _)| *s <= t && t < *e)
        .map(|(_, _, c)| *c)
        .fold(0.0, f64::max)
}
