//! Hurwitz zeta `ζ(s, a) = Σ_{j≥0} (a + j)^{-s}` and its derivative in `s`,
//! via Euler–Maclaurin summation.

/// `B_{2k} / (2k)!` for k = 1..=7.
const BERNOULLI_OVER_FACTORIAL: [f64; 7] = [
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30_240.0,
    -1.0 / 1_209_600.0,
    1.0 / 47_900_160.0,
    -691.0 / 1_307_674_368_000.0,
    1.0 / 74_724_249_600.0,
];

const DIRECT_TERMS: usize = 16;

/// Returns `(ζ(s, a), ∂ζ/∂s)` for `s > 1`, `a > 0`.
pub fn hurwitz_zeta_with_derivative(s: f64, a: f64) -> (f64, f64) {
    debug_assert!(s > 1.0 && a > 0.0);
    let mut z = 0.0;
    let mut dz = 0.0;
    for j in 0..DIRECT_TERMS {
        let x = a + j as f64;
        let t = x.powf(-s);
        z += t;
        dz -= x.ln() * t;
    }
    let x = a + DIRECT_TERMS as f64;
    let lx = x.ln();
    let xs = x.powf(-s);
    let x1s = x * xs;
    let sm1 = s - 1.0;
    z += x1s / sm1 + 0.5 * xs;
    dz += -lx * x1s / sm1 - x1s / (sm1 * sm1) - 0.5 * lx * xs;

    // c_k * s(s+1)...(s+2k-2) * x^{-s-2k+1}
    let mut poly = s; // running rising product
    let mut dlog_poly = 1.0 / s; // d/ds ln(poly)
    let mut xpow = xs / x; // x^{-s-1}
    for (k, c) in BERNOULLI_OVER_FACTORIAL.iter().enumerate() {
        if k > 0 {
            let a1 = s + (2 * k - 1) as f64;
            let a2 = s + (2 * k) as f64;
            poly *= a1 * a2;
            dlog_poly += 1.0 / a1 + 1.0 / a2;
            xpow /= x * x;
        }
        let term = c * poly * xpow;
        z += term;
        dz += term * (dlog_poly - lx);
    }
    (z, dz)
}

pub fn hurwitz_zeta(s: f64, a: f64) -> f64 {
    hurwitz_zeta_with_derivative(s, a).0
}
