//! Numerical building blocks shared across the estimators.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::erf::erfc;

/// Standard-normal CDF.
pub fn norm_cdf(x: f64) -> f64 {
    if x == f64::INFINITY {
        1.0
    } else if x == f64::NEG_INFINITY {
        0.0
    } else {
        0.5 * erfc(-x / SQRT_2)
    }
}

/// Standard-normal density.
pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Standard-normal quantile function.
pub fn norm_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    if p == 0.5 {
        return 0.0;
    }
    let x = Normal::standard().inverse_cdf(p);
    // One Newton step brings the library value to full double precision.
    let pdf = norm_pdf(x);
    if pdf > 0.0 {
        x - (norm_cdf(x) - p) / pdf
    } else {
        x
    }
}

// Gauss-Legendre half-rules (abscissae in (0,1), weights) for 6, 12 and 20 points.
const GL6: [(f64, f64); 3] = [
    (0.9324695142031522, 0.1713244923791705),
    (0.6612093864662647, 0.3607615730481384),
    (0.2386191860831970, 0.4679139345726904),
];
const GL12: [(f64, f64); 6] = [
    (0.9815606342467191, 0.04717533638651177),
    (0.9041172563704750, 0.1069393259953183),
    (0.7699026741943050, 0.1600783285433464),
    (0.5873179542866171, 0.2031674267230659),
    (0.3678314989981802, 0.2334925365383547),
    (0.1252334085114692, 0.2491470458134029),
];
const GL20: [(f64, f64); 10] = [
    (0.9931285991850949, 0.01761400713915212),
    (0.9639719272779138, 0.04060142980038694),
    (0.9122344282513259, 0.06267204833410906),
    (0.8391169718222188, 0.08327674157670475),
    (0.7463319064601508, 0.1019301198172404),
    (0.6360536807265150, 0.1181945319615184),
    (0.5108670019508271, 0.1316886384491766),
    (0.3737060887154196, 0.1420961093183821),
    (0.2277858511416451, 0.1491729864726037),
    (0.07652652113349733, 0.1527533871307259),
];

/// Upper-orthant probability P(X > h, Y > k) for a standard bivariate
/// normal with correlation `r`, finite `h`, `k` and |r| <= 1.
///
/// Drezner-Wesolowsky quadrature in the form refined by Genz (2004),
/// accurate to about 1e-15 absolute.
fn bvn_upper(h: f64, k: f64, r: f64) -> f64 {
    if r == 0.0 {
        return norm_cdf(-h) * norm_cdf(-k);
    }
    let rule: &[(f64, f64)] = if r.abs() < 0.3 {
        &GL6
    } else if r.abs() < 0.75 {
        &GL12
    } else {
        &GL20
    };
    let nodes = || rule.iter().flat_map(|&(x, w)| [(1.0 - x, w), (1.0 + x, w)]);
    let tp = 2.0 * PI;
    let mut hk = h * k;
    let mut bvn;
    if r.abs() < 0.925 {
        let hs = (h * h + k * k) / 2.0;
        let asr = r.asin() / 2.0;
        bvn = nodes()
            .map(|(x, w)| {
                let sn = (asr * x).sin();
                w * ((sn * hk - hs) / (1.0 - sn * sn)).exp()
            })
            .sum::<f64>();
        bvn = bvn * asr / tp + norm_cdf(-h) * norm_cdf(-k);
    } else {
        let mut k = k;
        if r < 0.0 {
            k = -k;
            hk = -hk;
        }
        bvn = 0.0;
        if r.abs() < 1.0 {
            let as_ = 1.0 - r * r;
            let a = as_.sqrt();
            let bs = (h - k) * (h - k);
            let c = (4.0 - hk) / 8.0;
            let d = (12.0 - hk) / 80.0;
            let asr = -(bs / as_ + hk) / 2.0;
            if asr > -100.0 {
                bvn = a
                    * asr.exp()
                    * (1.0 - c * (bs - as_) * (1.0 - d * bs) / 3.0 + c * d * as_ * as_);
            }
            if hk > -100.0 {
                let b = bs.sqrt();
                let sp = tp.sqrt() * norm_cdf(-b / a);
                bvn -= (-hk / 2.0).exp() * sp * b * (1.0 - c * bs * (1.0 - d * bs) / 3.0);
            }
            let a = a / 2.0;
            let sum: f64 = nodes()
                .filter_map(|(x, w)| {
                    let xs = (a * x) * (a * x);
                    let asr = -(bs / xs + hk) / 2.0;
                    if asr <= -100.0 {
                        return None;
                    }
                    let sp = 1.0 + c * xs * (1.0 + 5.0 * d * xs);
                    let rs = (1.0 - xs).sqrt();
                    let ep = (-(hk / 2.0) * xs / ((1.0 + rs) * (1.0 + rs))).exp() / rs;
                    Some(w * asr.exp() * (sp - ep))
                })
                .sum();
            bvn = (a * sum - bvn) / tp;
        }
        if r > 0.0 {
            bvn += norm_cdf(-h.max(k));
        } else if h >= k {
            bvn = -bvn;
        } else {
            let l = if h < 0.0 {
                norm_cdf(k) - norm_cdf(h)
            } else {
                norm_cdf(-h) - norm_cdf(-k)
            };
            bvn = l - bvn;
        }
    }
    bvn.clamp(0.0, 1.0)
}

/// Bivariate standard-normal CDF P(X <= a, Y <= b) with correlation `rho`.
/// Infinite limits are allowed.
pub fn bvn_cdf(a: f64, b: f64, rho: f64) -> f64 {
    if a == f64::NEG_INFINITY || b == f64::NEG_INFINITY {
        return 0.0;
    }
    if a == f64::INFINITY {
        return norm_cdf(b);
    }
    if b == f64::INFINITY {
        return norm_cdf(a);
    }
    bvn_upper(-a, -b, rho)
}

/// Probability of the rectangle (a_lo, a_hi] x (b_lo, b_hi].
pub fn bvn_rect(a_lo: f64, a_hi: f64, b_lo: f64, b_hi: f64, rho: f64) -> f64 {
    let p = bvn_cdf(a_hi, b_hi, rho) - bvn_cdf(a_lo, b_hi, rho) - bvn_cdf(a_hi, b_lo, rho)
        + bvn_cdf(a_lo, b_lo, rho);
    p.max(0.0)
}

/// Maximizes a unimodal function on `[lo, hi]` with Brent's method
/// (golden-section steps with parabolic interpolation). Returns `(x, f(x))`.
pub fn brent_maximize<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    tol: f64,
    max_iter: usize,
) -> (f64, f64) {
    const CGOLD: f64 = 0.381_966_011_250_105;
    let mut neg = |x: f64| -f(x);
    let (mut a, mut b) = (lo, hi);
    let mut x = a + CGOLD * (b - a);
    let (mut w, mut v) = (x, x);
    let mut fx = neg(x);
    let (mut fw, mut fv) = (fx, fx);
    let mut d: f64 = 0.0;
    let mut e: f64 = 0.0;
    for _ in 0..max_iter {
        let xm = 0.5 * (a + b);
        let tol1 = tol * x.abs() + 1e-12;
        let tol2 = 2.0 * tol1;
        if (x - xm).abs() <= tol2 - 0.5 * (b - a) {
            break;
        }
        let mut golden = true;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            let etemp = e;
            e = d;
            if p.abs() < (0.5 * q * etemp).abs() && p > q * (a - x) && p < q * (b - x) {
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = tol1.copysign(xm - x);
                }
                golden = false;
            }
        }
        if golden {
            e = if x >= xm { a - x } else { b - x };
            d = CGOLD * e;
        }
        let u = if d.abs() >= tol1 { x + d } else { x + tol1.copysign(d) };
        let fu = neg(u);
        if fu <= fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    (x, -fx)
}

/// Grid scan followed by Brent refinement inside the best grid cell.
/// Guards against the occasional non-concave likelihood surface.
pub fn maximize_on_interval<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    const GRID: usize = 40;
    let step = (hi - lo) / GRID as f64;
    let mut best = (lo, f(lo));
    for i in 1..=GRID {
        let x = if i == GRID { hi } else { lo + step * i as f64 };
        let fx = f(x);
        if fx > best.1 {
            best = (x, fx);
        }
    }
    let a = (best.0 - step).max(lo);
    let b = (best.0 + step).min(hi);
    let refined = brent_maximize(&mut f, a, b, tol, 200);
    if refined.1 >= best.1 {
        refined
    } else {
        best
    }
}

/// Pearson correlation of two equally long slices. `None` if either has
/// zero variance or fewer than 2 entries.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Mid-ranks (1-based, ties get the average rank).
pub fn mid_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Sample quantile by linear interpolation between order statistics
/// (Hyndman-Fan type 7): with sorted x and h = (n - 1) p,
/// Q(p) = x[floor h] + (h - floor h) (x[floor h + 1] - x[floor h]).
pub fn quantile_type7(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Mean and sample standard deviation (n - 1 denominator).
pub fn mean_sd(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Log-determinant via Cholesky; `None` unless `m` is positive definite.
pub fn log_det_pd(m: &DMatrix<f64>) -> Option<f64> {
    let chol = m.clone().cholesky()?;
    Some(2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>())
}

/// trace(A B) for square matrices of equal size.
pub fn trace_product(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.transpose().iter()).map(|(x, y)| x * y).sum()
}

/// Independent random stream for replicate `index` under `master_seed`.
///
/// Streams are addressed by counter, so replicate k sees the same numbers
/// regardless of how many other replicates run or in what order.
pub fn replicate_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}
