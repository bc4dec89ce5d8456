//! Gauss rules and compensated summation.

/// Gauss–Laguerre nodes and weights for ∫₀^∞ e^{−v} h(v) dv.
pub fn gauss_laguerre(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 1);
    let nf = n as f64;
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(n);
    let mut z = 0.0f64;
    for i in 0..n {
        z = match i {
            0 => 3.0 / (1.0 + 2.4 * nf),
            1 => z + 15.0 / (1.0 + 2.5 * nf),
            _ => {
                let ai = (i - 1) as f64;
                z + (1.0 + 2.55 * ai) / (1.9 * ai) * (z - out[i - 2].0)
            }
        };
        let mut pp = 0.0;
        let mut p2 = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = ((2.0 * jf + 1.0 - z) * p2 - jf * p3) / (jf + 1.0);
            }
            pp = nf * (p1 - p2) / z;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        out.push((z, -1.0 / (pp * nf * p2)));
    }
    out
}

/// Gauss–Legendre nodes and weights on [−1, 1].
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 1);
    let nf = n as f64;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = ((2.0 * jf + 1.0) * z * p2 - jf * p3) / (jf + 1.0);
            }
            pp = nf * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-16 {
                break;
            }
        }
        out.push((-z, 2.0 / ((1.0 - z * z) * pp * pp)));
    }
    out
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

impl std::iter::FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = KahanSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laguerre_integrates_polynomials() {
        for n in [1usize, 3, 6, 12] {
            let rule = gauss_laguerre(n);
            for deg in 0..(2 * n) as i32 {
                let got: f64 = rule.iter().map(|(v, w)| w * v.powi(deg)).sum();
                let fact: f64 = (1..=deg).map(f64::from).product();
                assert!((got - fact).abs() <= 1e-9 * fact, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn legendre_integrates_polynomials() {
        for n in [1usize, 2, 5] {
            let rule = gauss_legendre(n);
            for deg in 0..(2 * n) as i32 {
                let got: f64 = rule.iter().map(|(x, w)| w * x.powi(deg)).sum();
                let want = if deg % 2 == 0 { 2.0 / f64::from(deg + 1) } else { 0.0 };
                assert!((got - want).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let s: KahanSum = [1e16, 1.0, -1e16, 1.0].into_iter().collect();
        assert_eq!(s.total(), 2.0);
    }
}
