//! Independent oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use leadlag::synth::{derive_indicator, generate_admissions, SynthSpec, ADMISSIONS};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normals(rng: &mut ChaCha8Rng, n: usize, sd: f64) -> Vec<f64> {
    let d = Normal::new(0.0, sd).unwrap();
    (0..n).map(|_| d.sample(rng)).collect()
}

/// Rounded to a 1/1024 grid so exact rational arithmetic stays small.
pub fn dyadic(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| (x * 1024.0).round() / 1024.0).collect()
}

fn rat(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite")
}

/// Residual sum of squares of `y` on `columns`, from the normal equations
/// solved in exact rational arithmetic.
pub fn exact_rss(columns: &[Vec<f64>], y: &[f64]) -> f64 {
    let p = columns.len();
    let cols: Vec<Vec<BigRational>> = columns.iter().map(|c| c.iter().map(|&v| rat(v)).collect()).collect();
    let yr: Vec<BigRational> = y.iter().map(|&v| rat(v)).collect();
    let dot = |a: &[BigRational], b: &[BigRational]| {
        a.iter().zip(b).fold(BigRational::zero(), |s, (u, v)| s + u * v)
    };
    // augmented [X'X | X'y]
    let mut m: Vec<Vec<BigRational>> = (0..p)
        .map(|r| {
            let mut row: Vec<BigRational> = (0..p).map(|c| dot(&cols[r], &cols[c])).collect();
            row.push(dot(&cols[r], &yr));
            row
        })
        .collect();
    for k in 0..p {
        let piv = (k..p).find(|&r| !m[r][k].is_zero()).expect("singular design");
        m.swap(k, piv);
        let d = m[k][k].clone();
        for c in k..=p {
            m[k][c] = &m[k][c] / &d;
        }
        for r in 0..p {
            if r != k && !m[r][k].is_zero() {
                let f = m[r][k].clone();
                for c in k..=p {
                    let delta = &f * &m[k][c];
                    m[r][c] -= delta;
                }
            }
        }
    }
    let beta: Vec<BigRational> = m.iter().map(|row| row[p].clone()).collect();
    let xty: Vec<BigRational> = cols.iter().map(|c| dot(c, &yr)).collect();
    let rss = dot(&yr, &yr) - dot(&beta, &xty);
    rss.to_f64().expect("representable")
}

/// Adaptive Simpson on `[a, b]`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, eps: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        eps: f64,
        whole: f64,
        m: f64,
        fm: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * eps {
            return left + right + delta / 15.0;
        }
        let eps = (eps / 2.0).max(1e-18);
        rec(f, a, fa, m, fm, eps, left, lm, flm, depth - 1)
            + rec(f, m, fm, b, fb, eps, right, rm, frm, depth - 1)
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    rec(f, a, fa, b, fb, eps, whole, m, fm, 30)
}

/// Upper tail of F(d1, d2) at `f`. With `U = d1 F / (d1 F + d2) ~ Beta(d1/2,
/// d2/2)` and `U = s^2` the beta integrand becomes smooth on `[0, 1]`.
pub fn f_upper_tail(f: f64, d1: usize, d2: usize) -> f64 {
    let (a, b) = (d1 as f64 / 2.0, d2 as f64 / 2.0);
    let g = move |s: f64| 2.0 * s.powf(2.0 * a - 1.0) * (1.0 - s * s).max(0.0).powf(b - 1.0);
    let u0 = d1 as f64 * f / (d1 as f64 * f + d2 as f64);
    let s0 = u0.sqrt();
    // split at the mode-ish region so the peak is resolved
    let total = integrate(&g, 0.0, 0.5, 1e-15) + integrate(&g, 0.5, 1.0, 1e-15);
    let upper = if s0 < 0.5 {
        integrate(&g, s0, 0.5, 1e-15) + integrate(&g, 0.5, 1.0, 1e-15)
    } else {
        integrate(&g, s0, 1.0, 1e-15)
    };
    upper / total
}

/// Lagged design for the Granger pair, built row by row.
pub struct GrangerDesign {
    pub response: Vec<f64>,
    pub restricted: Vec<Vec<f64>>,
    pub unrestricted: Vec<Vec<f64>>,
}

pub fn granger_design(x: &[f64], y: &[f64], m: usize, h: usize) -> GrangerDesign {
    let n = y.len() - h;
    let z: Vec<f64> = y[h..].to_vec();
    let mut response = Vec::new();
    let mut restricted = vec![Vec::new(); m + 1];
    let mut unrestricted = vec![Vec::new(); 2 * m + 1];
    for t in m..n {
        response.push(z[t]);
        restricted[0].push(1.0);
        unrestricted[0].push(1.0);
        for k in 1..=m {
            restricted[k].push(z[t - k]);
            unrestricted[k].push(z[t - k]);
            unrestricted[m + k].push(x[t - k]);
        }
    }
    GrangerDesign {
        response,
        restricted,
        unrestricted,
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GrangerOracle {
    pub f: f64,
    pub p: f64,
    pub df1: usize,
    pub df2: usize,
}

pub fn granger_oracle(x: &[f64], y: &[f64], m: usize, h: usize) -> GrangerOracle {
    let d = granger_design(x, y, m, h);
    let rss_r = exact_rss(&d.restricted, &d.response);
    let rss_u = exact_rss(&d.unrestricted, &d.response);
    let df1 = m;
    let df2 = d.response.len() - (2 * m + 1);
    let f = ((rss_r - rss_u) / df1 as f64) / (rss_u / df2 as f64);
    GrangerOracle {
        f,
        p: f_upper_tail(f, df1, df2),
        df1,
        df2,
    }
}

/// Smooth single-wave admissions and an indicator leading it by `lead` days.
pub fn shifted_wave(lead: i64, days: usize) -> (Vec<f64>, Vec<f64>) {
    let spec = SynthSpec {
        days,
        ..SynthSpec::default()
    };
    let adm = generate_admissions(&spec).unwrap();
    let ind = derive_indicator(&adm, "ind", lead, 0.0, 0.0, 0).unwrap();
    let y = adm.iter().next().unwrap().1.values().to_vec();
    let x = ind.iter().next().unwrap().1.values().to_vec();
    assert_eq!(adm.variables().into_iter().next(), Some(ADMISSIONS));
    (x, y)
}

pub fn minmax(v: &[f64]) -> Vec<f64> {
    let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    v.iter().map(|x| (x - lo) / (hi - lo)).collect()
}

pub fn zscore(v: &[f64]) -> Vec<f64> {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let sd = (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    v.iter().map(|x| (x - m) / sd).collect()
}
