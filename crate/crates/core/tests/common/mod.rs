//! Quadrature oracles shared by the integration tests, written
//! independently of the library's rules.
#![allow(dead_code)]

/// Gauss-Legendre on [0, 1] by Newton iteration on the Legendre recurrence.
pub fn gauss01(n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            ((1.0 - x) / 2.0, 1.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

/// Adaptive Simpson on [a, b].
pub fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn rec(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    rec(
        f,
        a,
        b,
        fa,
        fm,
        fb,
        (b - a) / 6.0 * (fa + 4.0 * fm + fb),
        tol,
        60,
    )
}

/// Tanh-sinh on [a, b] with step `2^-k`. `f` receives the point and its
/// distances to `a` and `b`, computed without cancellation.
pub fn tanh_sinh(f: &dyn Fn(f64, f64, f64) -> f64, a: f64, b: f64, k: u32) -> f64 {
    let h = 0.5f64.powi(k as i32);
    let half = 0.5 * (b - a);
    let mut s = 0.0;
    let mut j = 0i64;
    loop {
        let t = j as f64 * h;
        let u = std::f64::consts::FRAC_PI_2 * t.sinh();
        let ch = u.cosh();
        // 1 − tanh(u) = 2 / (1 + e^{2u}).
        let d = 2.0 / (1.0 + (2.0 * u).exp());
        let w = std::f64::consts::FRAC_PI_2 * t.cosh() / (ch * ch);
        if d * half < 1e-300 || w < 1e-300 {
            break;
        }
        let (dl, dr) = (half * d, half * (2.0 - d));
        if j == 0 {
            s += w * f(a + half, half, half);
        } else {
            s += w * (f(a + dr, dr, dl) + f(a + dl, dl, dr));
        }
        j += 1;
    }
    s * h * half
}
