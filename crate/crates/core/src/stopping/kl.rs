//! Linear optimisation over KL balls around an empirical distribution.

/// `KL(p, q) = sum p_i log(p_i / q_i)`; infinite if `q` misses part of `p`'s support.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> f64 {
    let mut total = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if pi > 0.0 {
            if qi <= 0.0 {
                return f64::INFINITY;
            }
            total += pi * (pi / qi).ln();
        }
    }
    total.max(0.0)
}

/// `max { q . b : KL(p_hat, q) <= budget }` over the simplex.
///
/// The maximiser is `q_i = lambda p_i / (mu - b_i)` on the support of
/// `p_hat`, where `mu > max_supp b` solves
/// `sum p_i log(mu - b_i) + log sum p_i / (mu - b_i) = budget`.
/// When an off-support entry of `b` beats the support and the constraint
/// is slack at `mu = max b`, the leftover mass goes to that entry.
/// Everything is computed relative to the support maximum, so shifting `b`
/// by a constant shifts the result by the same constant.
pub fn kl_ucb_linear(p_hat: &[f64], b: &[f64], budget: f64) -> f64 {
    let base: f64 = p_hat.iter().zip(b).map(|(p, x)| p * x).sum();
    if !(budget > 0.0) {
        return base;
    }
    let support: Vec<usize> = (0..p_hat.len()).filter(|&i| p_hat[i] > 0.0).collect();
    let top = support.iter().map(|&i| b[i]).fold(f64::NEG_INFINITY, f64::max);
    let (off_idx, off_max) = (0..b.len())
        .filter(|&i| p_hat[i] <= 0.0)
        .map(|i| (i, b[i]))
        .fold((usize::MAX, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
    let gap = if off_idx != usize::MAX && off_max > top { off_max - top } else { 0.0 };
    // distances below the support maximum
    let d: Vec<(f64, f64)> = support.iter().map(|&i| (p_hat[i], top - b[i])).collect();
    let flat = d.iter().all(|&(_, di)| di == 0.0);

    let dual = |t: f64| -> f64 {
        let mut log_sum = 0.0;
        let mut inv_sum = 0.0;
        for &(p, di) in &d {
            log_sum += p * (t + di).ln();
            inv_sum += p / (t + di);
        }
        log_sum + inv_sum.ln()
    };

    if flat {
        // KL(p_hat, q) = -log(q(supp)); move 1 - e^{-budget} of mass to the best outside entry
        return top + (1.0 - (-budget).exp()) * gap;
    }

    if gap > 0.0 && dual(gap) <= budget {
        let lambda = (d.iter().map(|&(p, di)| p * (gap + di).ln()).sum::<f64>() - budget).exp();
        let mut shift = 0.0;
        let mut mass = 0.0;
        for &(p, di) in &d {
            let q = lambda * p / (gap + di);
            mass += q;
            shift += q * di;
        }
        let leftover = (1.0 - mass).max(0.0);
        return top - shift + leftover * gap;
    }

    // dual(t) decreases from +inf at t = 0 to 0 at t = inf; bracket the root in log t
    let scale = d.iter().map(|&(_, di)| di).fold(0.0, f64::max);
    let mut hi = scale.max(gap).max(1e-300);
    while dual(hi) > budget {
        hi *= 2.0;
    }
    let mut lo = if gap > 0.0 { gap } else { hi / 2.0 };
    while gap == 0.0 && dual(lo) <= budget {
        lo /= 2.0;
        if lo < 1e-300 {
            break;
        }
    }
    let (mut a, mut c) = (lo.ln(), hi.ln());
    for _ in 0..200 {
        let mid = 0.5 * (a + c);
        if dual(mid.exp()) > budget {
            a = mid;
        } else {
            c = mid;
        }
        if c - a < 1e-13 {
            break;
        }
    }
    let t = c.exp();
    let weights: Vec<f64> = d.iter().map(|&(p, di)| p / (t + di)).collect();
    let total: f64 = weights.iter().sum();
    let shift: f64 = weights.iter().zip(&d).map(|(w, &(_, di))| w * di).sum::<f64>() / total;
    top - shift
}

/// `min { q . b : KL(p_hat, q) <= budget }`.
pub fn kl_lcb_linear(p_hat: &[f64], b: &[f64], budget: f64) -> f64 {
    let neg: Vec<f64> = b.iter().map(|x| -x).collect();
    -kl_ucb_linear(p_hat, &neg, budget)
}
