//! Exponential integral `E₁(z)` for complex arguments off the negative real axis.

use num_complex::Complex64;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const SERIES_RADIUS: f64 = 4.0;

/// `e^{z} E₁(z)`, which stays finite where `E₁` alone overflows.
pub fn scaled_e1(z: Complex64) -> Complex64 {
    if use_series(z) {
        z.exp() * series(z)
    } else {
        continued_fraction(z)
    }
}

pub fn e1(z: Complex64) -> Complex64 {
    if use_series(z) {
        series(z)
    } else {
        (-z).exp() * continued_fraction(z)
    }
}

/// Near the negative real axis the continued fraction converges slowly; the
/// series loses only `e^{|z| - |Re z|}` there, which stays small.
fn use_series(z: Complex64) -> bool {
    z.norm() <= SERIES_RADIUS || (z.re < 0.0 && z.im.abs() < z.re.abs())
}

fn series(z: Complex64) -> Complex64 {
    let mut sum = Complex64::new(0.0, 0.0);
    let mut power = Complex64::new(1.0, 0.0);
    for k in 1..1000 {
        power *= -z / k as f64;
        let term = power / k as f64;
        sum += term;
        if term.norm() <= 1e-17 * sum.norm() {
            break;
        }
    }
    -EULER_GAMMA - z.ln() - sum
}

/// Modified Lentz evaluation of `1/(z+1- 1/(z+3- 4/(z+5- ...)))`.
fn continued_fraction(z: Complex64) -> Complex64 {
    let tiny = Complex64::new(1e-300, 0.0);
    let mut b = z + 1.0;
    let mut c = Complex64::new(1e300, 0.0);
    let mut d = Complex64::new(1.0, 0.0) / b;
    let mut h = d;
    for i in 1..10_000 {
        let a = -((i * i) as f64);
        b += 2.0;
        d = a * d + b;
        if d.norm() == 0.0 {
            d = tiny;
        }
        c = b + a / c;
        if c.norm() == 0.0 {
            c = tiny;
        }
        d = Complex64::new(1.0, 0.0) / d;
        let del = c * d;
        h *= del;
        if (del - 1.0).norm() <= 4.0 * f64::EPSILON {
            break;
        }
    }
    h
}
