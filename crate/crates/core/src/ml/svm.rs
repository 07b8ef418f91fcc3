use super::{check_binary, parse_field, GramMatrix};
use crate::{Error, Result};
use log::warn;
use std::fmt::Write as _;

pub const SVM_HEADER: &str = "quenchmap-svm v1";

/// Alphas at or below this are not support vectors.
const SUPPORT_EPS: f64 = 1e-8;
const CURVATURE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmOptions {
    /// Largest tolerated KKT violation.
    pub tol: f64,
    /// Absolute duality-gap target; it also meets `gap_tol * max(1, |dual|)`.
    pub gap_tol: f64,
    pub max_iter: usize,
}

impl Default for SvmOptions {
    fn default() -> Self {
        Self {
            tol: 1e-4,
            gap_tol: 1e-6,
            max_iter: 10_000_000,
        }
    }
}

/// Dual soft-margin SVM on a precomputed kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub alphas: Vec<f64>,
    pub bias: f64,
    pub c: f64,
    /// `+1` for label 1, `-1` for label 0, per training row.
    pub signs: Vec<f64>,
    pub support_rows: Vec<usize>,
    pub iterations: usize,
    pub dual_objective: f64,
    pub duality_gap: f64,
    pub max_kkt_violation: f64,
    pub converged: bool,
}

impl SvmModel {
    /// Decision values `f(x_t)` on the training kernel.
    pub fn training_scores(&self, gram: &GramMatrix) -> Result<Vec<f64>> {
        Ok(svm_predict(self, gram)?.0)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{SVM_HEADER}");
        let _ = writeln!(out, "c {}", self.c);
        let _ = writeln!(out, "bias {}", self.bias);
        let _ = writeln!(out, "n {}", self.alphas.len());
        for (i, (a, y)) in self.alphas.iter().zip(&self.signs).enumerate() {
            let _ = writeln!(out, "row {i} {a} {y}");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        match lines.next() {
            Some((_, l)) if l == SVM_HEADER => {}
            _ => return Err(Error::parse(1, format!("expected `{SVM_HEADER}`"))),
        }
        let c: f64 = parse_field(lines.next(), "c")?;
        let bias: f64 = parse_field(lines.next(), "bias")?;
        let n: usize = parse_field(lines.next(), "n")?;
        if !(c > 0.0 && c.is_finite() && bias.is_finite()) {
            return Err(Error::parse(2, "c must be positive and bias finite"));
        }
        let mut alphas = Vec::with_capacity(n.min(1 << 20));
        let mut signs = Vec::with_capacity(n.min(1 << 20));
        for (no, line) in lines {
            let tok: Vec<&str> = line.split_whitespace().collect();
            let bad = || Error::parse(no + 1, "expected `row <index> <alpha> <sign>`");
            if tok.len() != 4 || tok[0] != "row" {
                return Err(bad());
            }
            let idx: usize = tok[1].parse().map_err(|_| bad())?;
            let a: f64 = tok[2].parse().map_err(|_| bad())?;
            let y: f64 = tok[3].parse().map_err(|_| bad())?;
            if idx != alphas.len() || idx >= n {
                return Err(Error::parse(no + 1, "rows must be listed in order"));
            }
            if !(0.0..=c).contains(&a) || (y != 1.0 && y != -1.0) {
                return Err(Error::parse(no + 1, "alpha outside [0, C] or sign not +-1"));
            }
            alphas.push(a);
            signs.push(y);
        }
        if alphas.len() != n {
            return Err(Error::parse(0, format!("expected {n} rows, found {}", alphas.len())));
        }
        let support_rows = support(&alphas);
        Ok(Self {
            alphas,
            bias,
            c,
            signs,
            support_rows,
            iterations: 0,
            dual_objective: f64::NAN,
            duality_gap: f64::NAN,
            max_kkt_violation: f64::NAN,
            converged: true,
        })
    }
}

fn support(alphas: &[f64]) -> Vec<usize> {
    alphas
        .iter()
        .enumerate()
        .filter(|(_, &a)| a > SUPPORT_EPS)
        .map(|(i, _)| i)
        .collect()
}

struct Solver<'a> {
    k: &'a GramMatrix,
    y: Vec<f64>,
    c: f64,
    alpha: Vec<f64>,
    /// Gradient of `1/2 a'Qa - e'a`.
    grad: Vec<f64>,
}

impl Solver<'_> {
    fn q(&self, i: usize, j: usize) -> f64 {
        self.y[i] * self.y[j] * self.k.get(i, j)
    }

    fn in_up(&self, t: usize) -> bool {
        (self.y[t] > 0.0 && self.alpha[t] < self.c) || (self.y[t] < 0.0 && self.alpha[t] > 0.0)
    }

    fn in_low(&self, t: usize) -> bool {
        (self.y[t] < 0.0 && self.alpha[t] < self.c) || (self.y[t] > 0.0 && self.alpha[t] > 0.0)
    }

    /// Maximal violating pair `(i, m, j, M)`.
    fn select(&self) -> (usize, f64, usize, f64) {
        let (mut i, mut m) = (usize::MAX, f64::NEG_INFINITY);
        let (mut j, mut big_m) = (usize::MAX, f64::INFINITY);
        for t in 0..self.y.len() {
            let v = -self.y[t] * self.grad[t];
            if self.in_up(t) && v > m {
                i = t;
                m = v;
            }
            if self.in_low(t) && v < big_m {
                j = t;
                big_m = v;
            }
        }
        (i, m, j, big_m)
    }

    fn update(&mut self, i: usize, j: usize) {
        let c = self.c;
        let (old_i, old_j) = (self.alpha[i], self.alpha[j]);
        let (qii, qjj, qij) = (self.q(i, i), self.q(j, j), self.q(i, j));
        let (mut ai, mut aj) = (old_i, old_j);
        if self.y[i] != self.y[j] {
            let quad = (qii + qjj + 2.0 * qij).max(CURVATURE_FLOOR);
            let delta = (-self.grad[i] - self.grad[j]) / quad;
            let diff = ai - aj;
            ai += delta;
            aj += delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > 0.0 {
                if ai > c {
                    ai = c;
                    aj = c - diff;
                }
            } else if aj > c {
                aj = c;
                ai = c + diff;
            }
        } else {
            let quad = (qii + qjj - 2.0 * qij).max(CURVATURE_FLOOR);
            let delta = (self.grad[i] - self.grad[j]) / quad;
            let sum = ai + aj;
            ai -= delta;
            aj += delta;
            if sum > c {
                if ai > c {
                    ai = c;
                    aj = sum - c;
                }
                if aj > c {
                    aj = c;
                    ai = sum - c;
                }
            } else {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = sum;
                }
                if ai < 0.0 {
                    ai = 0.0;
                    aj = sum;
                }
            }
        }
        self.alpha[i] = ai;
        self.alpha[j] = aj;
        let (di, dj) = (ai - old_i, aj - old_j);
        for t in 0..self.y.len() {
            self.grad[t] += self.q(i, t) * di + self.q(j, t) * dj;
        }
    }

    fn bias(&self, m: f64, big_m: f64) -> f64 {
        let (sum, count) = (0..self.y.len())
            .filter(|&t| self.alpha[t] > 0.0 && self.alpha[t] < self.c)
            .fold((0.0, 0usize), |(s, n), t| (s - self.y[t] * self.grad[t], n + 1));
        if count > 0 {
            sum / count as f64
        } else {
            0.5 * (m + big_m)
        }
    }

    fn dual(&self) -> f64 {
        // D = e'a - 1/2 a'Qa = -1/2 sum a_t (g_t - 1)
        -0.5 * self
            .alpha
            .iter()
            .zip(&self.grad)
            .map(|(a, g)| a * (g - 1.0))
            .sum::<f64>()
    }

    /// Primal minus dual objective for bias `b`, and the largest KKT violation.
    fn gap_and_kkt(&self, b: f64) -> (f64, f64) {
        let mut gap = 0.0;
        let mut kkt: f64 = 0.0;
        for t in 0..self.y.len() {
            let margin = self.grad[t] + 1.0 + self.y[t] * b;
            let slack = (1.0 - margin).max(0.0);
            gap += self.alpha[t] * (margin - 1.0) + self.c * slack;
            let a = self.alpha[t];
            let v = if a <= 0.0 {
                (1.0 - margin).max(0.0)
            } else if a >= self.c {
                (margin - 1.0).max(0.0)
            } else {
                (margin - 1.0).abs()
            };
            kkt = kkt.max(v);
        }
        (gap, kkt)
    }
}

/// SMO on the dual with maximal-violating-pair selection.
///
/// Runs until the largest KKT violation is within `tol` and the duality gap
/// within `gap_tol`. A kernel failing the PSD check is shifted
/// by `1e-8 trace / N` on the diagonal and checked once more.
pub fn svm_train(gram: &GramMatrix, labels: &[u8], c: f64, options: &SvmOptions) -> Result<SvmModel> {
    if !gram.is_square() || gram.rows != labels.len() {
        return Err(Error::LengthMismatch {
            what: "training kernel size",
            expected: labels.len(),
            got: gram.rows,
        });
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidArgument(format!("C must be positive, got {c}")));
    }
    check_binary(labels)?;
    let shifted;
    let gram = match super::check_psd(gram) {
        Ok(()) => gram,
        Err(Error::NotPsd { min_eig, trace }) => {
            warn!("kernel not PSD (min eigenvalue {min_eig:e}, trace {trace:e}); shifting diagonal");
            let eps = 1e-8 * trace.abs() / gram.rows as f64;
            let mut g = gram.clone();
            for i in 0..g.rows {
                g.values[i * g.cols + i] += eps;
            }
            super::check_psd(&g)?;
            shifted = g;
            &shifted
        }
        Err(e) => return Err(e),
    };
    let n = labels.len();
    let mut s = Solver {
        k: gram,
        y: labels.iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect(),
        c,
        alpha: vec![0.0; n],
        grad: vec![-1.0; n],
    };
    let mut iterations = 0;
    let (bias, gap, kkt, converged) = loop {
        let (i, m, j, big_m) = s.select();
        let b = s.bias(m, big_m);
        let (gap, kkt) = s.gap_and_kkt(b);
        let done = i == usize::MAX
            || j == usize::MAX
            || (kkt <= options.tol && gap <= options.gap_tol);
        if done || iterations >= options.max_iter {
            if !done {
                warn!("SMO stopped after {iterations} iterations (KKT {kkt:e}, gap {gap:e})");
            }
            break (b, gap, kkt, done);
        }
        if m - big_m <= 0.0 {
            // no pair left to improve; remaining violation is bias rounding
            break (b, gap, kkt, kkt <= options.tol);
        }
        s.update(i, j);
        iterations += 1;
    };
    let dual_objective = s.dual();
    Ok(SvmModel {
        support_rows: support(&s.alpha),
        alphas: s.alpha,
        bias,
        c,
        signs: s.y,
        iterations,
        dual_objective,
        duality_gap: gap,
        max_kkt_violation: kkt,
        converged,
    })
}

/// Scores `sum_i alpha_i y_i K(x, x_i) + b`; label 1 iff the score is positive.
pub fn svm_predict(model: &SvmModel, gram_test_train: &GramMatrix) -> Result<(Vec<f64>, Vec<u8>)> {
    if gram_test_train.cols != model.alphas.len() {
        return Err(Error::LengthMismatch {
            what: "kernel columns",
            expected: model.alphas.len(),
            got: gram_test_train.cols,
        });
    }
    let scores: Vec<f64> = (0..gram_test_train.rows)
        .map(|r| {
            let row = gram_test_train.row(r);
            model
                .support_rows
                .iter()
                .map(|&i| model.alphas[i] * model.signs[i] * row[i])
                .sum::<f64>()
                + model.bias
        })
        .collect();
    let labels = scores.iter().map(|&s| u8::from(s > 0.0)).collect();
    Ok((scores, labels))
}
