//! Naive reference implementations used only by tests.
//!
//! Everything here is recomputed from scratch on every call: balls come from
//! thresholding each distance row at every distance value (plus one radius
//! past the maximum), duplicates are kept, and every ball average is a fresh
//! loop. Nothing is shared with the main crate.

/// A finite space given by its distance matrix and point masses.
#[derive(Clone, Debug)]
pub struct Space {
    pub dist: Vec<Vec<f64>>,
    pub mass: Vec<f64>,
}

impl Space {
    pub fn new(dist: Vec<Vec<f64>>, mass: Vec<f64>) -> Self {
        Space { dist, mass }
    }

    /// `d(i, j) = |i - j|^theta` with unit masses.
    pub fn grid(n: usize, theta: f64) -> Self {
        let dist = (0..n)
            .map(|i| (0..n).map(|j| (i as f64 - j as f64).abs().powf(theta)).collect())
            .collect();
        Space::new(dist, vec![1.0; n])
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    /// Member lists of all nonempty open balls, with repeats.
    pub fn balls(&self) -> Vec<Vec<usize>> {
        let n = self.len();
        let mut out = Vec::new();
        for c in 0..n {
            let max = self.dist[c].iter().cloned().fold(0.0, f64::max);
            let mut radii: Vec<f64> = self.dist[c].clone();
            radii.push(max + 1.0);
            for r in radii {
                let members: Vec<usize> = (0..n).filter(|&y| self.dist[c][y] < r).collect();
                if !members.is_empty() {
                    out.push(members);
                }
            }
        }
        out
    }

    pub fn measure(&self, ball: &[usize]) -> f64 {
        let mut s = 0.0;
        for &y in ball {
            s += self.mass[y];
        }
        s
    }

    /// `sum_B g dmu`.
    pub fn integral(&self, ball: &[usize], g: &[f64]) -> f64 {
        let mut s = 0.0;
        for &y in ball {
            s += g[y] * self.mass[y];
        }
        s
    }

    fn sup_at(&self, x: usize, value: impl Fn(&[usize]) -> f64) -> f64 {
        let mut best = f64::NEG_INFINITY;
        for ball in self.balls() {
            if ball.contains(&x) {
                let v = value(&ball);
                if v > best {
                    best = v;
                }
            }
        }
        best
    }

    pub fn hl(&self, f: &[f64], p: f64) -> Vec<f64> {
        (0..self.len())
            .map(|x| {
                self.sup_at(x, |ball| {
                    let g: Vec<f64> = f.iter().map(|v| v.abs().powf(p)).collect();
                    (self.integral(ball, &g) / self.measure(ball)).powf(1.0 / p)
                })
            })
            .collect()
    }

    pub fn fractional(&self, f: &[f64], gamma: f64) -> Vec<f64> {
        (0..self.len())
            .map(|x| {
                self.sup_at(x, |ball| {
                    let g: Vec<f64> = f.iter().map(|v| v.abs()).collect();
                    self.measure(ball).powf(gamma - 1.0) * self.integral(ball, &g)
                })
            })
            .collect()
    }

    pub fn sharp(&self, f: &[f64]) -> Vec<f64> {
        (0..self.len())
            .map(|x| self.sup_at(x, |ball| self.oscillation(ball, f)))
            .collect()
    }

    /// `avg_B |f - f_B|`.
    pub fn oscillation(&self, ball: &[usize], f: &[f64]) -> f64 {
        let avg = self.integral(ball, f) / self.measure(ball);
        let dev: Vec<f64> = f.iter().map(|v| (v - avg).abs()).collect();
        self.integral(ball, &dev) / self.measure(ball)
    }

    /// Sup over balls inside `base` containing `x`, for `x` in `base`;
    /// zero outside `base`.
    fn restricted(&self, base: &[usize], value: impl Fn(&[usize]) -> f64) -> Vec<f64> {
        (0..self.len())
            .map(|x| {
                if !base.contains(&x) {
                    return 0.0;
                }
                let mut best = f64::NEG_INFINITY;
                for ball in self.balls() {
                    if ball.contains(&x) && ball.iter().all(|y| base.contains(y)) {
                        best = best.max(value(&ball));
                    }
                }
                best
            })
            .collect()
    }

    pub fn hl_restricted(&self, f: &[f64], p: f64, base: &[usize]) -> Vec<f64> {
        self.restricted(base, |ball| {
            let g: Vec<f64> = f.iter().map(|v| v.abs().powf(p)).collect();
            (self.integral(ball, &g) / self.measure(ball)).powf(1.0 / p)
        })
    }

    pub fn fractional_restricted(&self, f: &[f64], gamma: f64, base: &[usize]) -> Vec<f64> {
        self.restricted(base, |ball| {
            let g: Vec<f64> = f.iter().map(|v| v.abs()).collect();
            self.measure(ball).powf(gamma - 1.0) * self.integral(ball, &g)
        })
    }

    fn commutator_sup(&self, b: &[f64], f: &[f64], scale: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..self.len())
            .map(|x| {
                self.sup_at(x, |ball| {
                    let g: Vec<f64> = (0..self.len()).map(|y| (b[x] - b[y]).abs() * f[y].abs()).collect();
                    scale(self.measure(ball)) * self.integral(ball, &g)
                })
            })
            .collect()
    }

    /// `C_b f`.
    pub fn cb(&self, b: &[f64], f: &[f64]) -> Vec<f64> {
        self.commutator_sup(b, f, |m| 1.0 / m)
    }

    /// `M_{gamma,b} f`.
    pub fn fractional_cb(&self, b: &[f64], f: &[f64], gamma: f64) -> Vec<f64> {
        self.commutator_sup(b, f, |m| m.powf(gamma - 1.0))
    }

    /// `M(M f)`.
    pub fn m2(&self, f: &[f64]) -> Vec<f64> {
        self.hl(&self.hl(f, 1.0), 1.0)
    }

    /// `sup_B (nu(B)^(-kappa) sum_B |f|^p w dmu)^(1/p)` with `nu(B) = sum_B v dmu`.
    pub fn morrey(&self, f: &[f64], p: f64, kappa: f64, w: &[f64], v: &[f64]) -> f64 {
        let mut best: f64 = 0.0;
        for ball in self.balls() {
            let g: Vec<f64> = (0..self.len()).map(|y| f[y].abs().powf(p) * w[y]).collect();
            let term = self.integral(&ball, &g) / self.integral(&ball, v).powf(kappa);
            best = best.max(term.powf(1.0 / p));
        }
        best
    }

    pub fn bmo(&self, b: &[f64]) -> f64 {
        self.balls().iter().map(|ball| self.oscillation(ball, b)).fold(0.0, f64::max)
    }

    /// `sup_B inf_c avg_B |b - c|`, trying every value of `b` on `B` as `c`.
    pub fn bmo_inf(&self, b: &[f64]) -> f64 {
        let mut best: f64 = 0.0;
        for ball in self.balls() {
            let mut inner = f64::INFINITY;
            for &c in &ball {
                let dev: Vec<f64> = b.iter().map(|v| (v - b[c]).abs()).collect();
                inner = inner.min(self.integral(&ball, &dev) / self.measure(&ball));
            }
            best = best.max(inner);
        }
        best
    }

    /// `sup_B avg(w) * avg(w^(-1/(p-1)))^(p-1)`, `p > 1`.
    pub fn ap(&self, w: &[f64], p: f64) -> f64 {
        let mut best: f64 = 0.0;
        for ball in self.balls() {
            let m = self.measure(&ball);
            let a = self.integral(&ball, w) / m;
            let dual: Vec<f64> = w.iter().map(|v| v.powf(-1.0 / (p - 1.0))).collect();
            let b = self.integral(&ball, &dual) / m;
            best = best.max(a * b.powf(p - 1.0));
        }
        best
    }

    /// `max d(x,y) / (d(x,z) + d(z,y))` over triples with a positive denominator, at least 1.
    pub fn quasi_triangle(&self) -> f64 {
        let n = self.len();
        let mut best: f64 = 1.0;
        for x in 0..n {
            for y in 0..n {
                for z in 0..n {
                    let den = self.dist[x][z] + self.dist[z][y];
                    if den > 0.0 {
                        best = best.max(self.dist[x][y] / den);
                    }
                }
            }
        }
        best
    }

    /// Distinct member sets, sorted.
    pub fn distinct_balls(&self) -> Vec<Vec<usize>> {
        let mut all = self.balls();
        all.sort();
        all.dedup();
        all
    }
}
