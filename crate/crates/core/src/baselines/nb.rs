//! Naive Bayes over binary features.
//!
//! Multinomial: a present feature counts once per document, so with
//! `count_c[f]` documents of class `c` containing `f`,
//! `log P(f | c) = ln((count_c[f] + alpha) / (sum_f count_c[f] + alpha V))`.
//! Bernoulli: `P(f | c) = (count_c[f] + alpha) / (N_c + 2 alpha)` and absent
//! features contribute `ln(1 - P(f | c))`.
//!
//! Dump format: `naive-bayes v1`, `event`, `alpha`, `features`, a `prior`
//! line of three log-priors, then `<id> <ll_pos> <ll_neu> <ll_neg>` per
//! feature (log-likelihoods of presence).

use std::fmt::Write as _;
use std::str::FromStr;

use super::SparseBinaryVector;
use crate::corpus::Polarity;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NbEvent {
    Multinomial,
    Bernoulli,
}

impl FromStr for NbEvent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "multinomial" => Ok(NbEvent::Multinomial),
            "bernoulli" => Ok(NbEvent::Bernoulli),
            _ => Err(Error::Config(format!("unknown NB event model {s:?}"))),
        }
    }
}

impl std::fmt::Display for NbEvent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            NbEvent::Multinomial => "multinomial",
            NbEvent::Bernoulli => "bernoulli",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NaiveBayes {
    pub event: NbEvent,
    pub alpha: f64,
    /// `ln(N_c / N)`; `-inf` for a class absent from training.
    log_prior: [f64; 3],
    log_present: Vec<[f64; 3]>,
    /// Per-class `sum_f ln(1 - P(f | c))` (Bernoulli only).
    absent_base: [f64; 3],
    /// Per-feature `ln(1 - P(f | c))` (Bernoulli only).
    log_absent: Vec<[f64; 3]>,
}

pub fn train_nb(
    vectors: &[SparseBinaryVector],
    labels: &[Polarity],
    features: usize,
    alpha: f64,
    event: NbEvent,
) -> Result<NaiveBayes> {
    if vectors.is_empty() {
        return Err(Error::Argument("no training documents".into()));
    }
    if vectors.len() != labels.len() {
        return Err(Error::Argument("one label per document is required".into()));
    }
    if !(alpha > 0.0) {
        return Err(Error::Argument(format!("alpha must be positive, got {alpha}")));
    }
    let mut docs = [0usize; 3];
    let mut counts = vec![[0usize; 3]; features];
    for (v, l) in vectors.iter().zip(labels) {
        let c = l.code();
        docs[c] += 1;
        for &id in v.ids() {
            if let Some(slot) = counts.get_mut(id as usize) {
                slot[c] += 1;
            }
        }
    }
    let n = vectors.len() as f64;
    let log_prior = docs.map(|d| if d == 0 { f64::NEG_INFINITY } else { (d as f64 / n).ln() });
    let v = features as f64;
    let mut model = NaiveBayes {
        event,
        alpha,
        log_prior,
        log_present: Vec::with_capacity(features),
        absent_base: [0.0; 3],
        log_absent: Vec::new(),
    };
    match event {
        NbEvent::Multinomial => {
            let mut totals = [0usize; 3];
            for c in &counts {
                for k in 0..3 {
                    totals[k] += c[k];
                }
            }
            for c in &counts {
                model
                    .log_present
                    .push(std::array::from_fn(|k| ((c[k] as f64 + alpha) / (totals[k] as f64 + alpha * v)).ln()));
            }
        }
        NbEvent::Bernoulli => {
            for c in &counts {
                let p: [f64; 3] = std::array::from_fn(|k| (c[k] as f64 + alpha) / (docs[k] as f64 + 2.0 * alpha));
                let absent = p.map(|x| (1.0 - x).ln());
                for k in 0..3 {
                    model.absent_base[k] += absent[k];
                }
                model.log_present.push(p.map(f64::ln));
                model.log_absent.push(absent);
            }
        }
    }
    Ok(model)
}

impl NaiveBayes {
    pub fn features(&self) -> usize {
        self.log_present.len()
    }

    pub fn log_prior(&self) -> [f64; 3] {
        self.log_prior
    }

    /// `ln P(c) + ln P(x | c)` per class, unnormalized.
    pub fn joint_log(&self, v: &SparseBinaryVector) -> [f64; 3] {
        let mut s = self.log_prior;
        if self.event == NbEvent::Bernoulli {
            for k in 0..3 {
                s[k] += self.absent_base[k];
            }
        }
        for &id in v.ids() {
            let Some(ll) = self.log_present.get(id as usize) else {
                continue;
            };
            for k in 0..3 {
                s[k] += ll[k];
                if self.event == NbEvent::Bernoulli {
                    s[k] -= self.log_absent[id as usize][k];
                }
            }
        }
        s
    }

    pub fn posterior(&self, v: &SparseBinaryVector) -> [f64; 3] {
        let s = self.joint_log(v);
        let m = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let e = s.map(|x| (x - m).exp());
        let z: f64 = e.iter().sum();
        e.map(|x| x / z)
    }

    /// Highest joint log-probability; ties go to the lowest label code.
    pub fn predict(&self, v: &SparseBinaryVector) -> Polarity {
        let s = self.joint_log(v);
        let mut best = 0;
        for k in 1..3 {
            if s[k] > s[best] {
                best = k;
            }
        }
        Polarity::from_code(best).expect("three classes")
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "naive-bayes v1\nevent {}\nalpha {}\nfeatures {}\nprior {} {} {}\n",
            self.event,
            self.alpha,
            self.features(),
            self.log_prior[0],
            self.log_prior[1],
            self.log_prior[2]
        );
        for (i, ll) in self.log_present.iter().enumerate() {
            writeln!(out, "{i} {} {} {}", ll[0], ll[1], ll[2]).unwrap();
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Polarity::*;

    fn v(ids: &[u32]) -> SparseBinaryVector {
        SparseBinaryVector::from_ids(ids.to_vec())
    }

    fn toy() -> (Vec<SparseBinaryVector>, Vec<Polarity>) {
        (
            vec![v(&[0]), v(&[0, 1]), v(&[1]), v(&[1])],
            vec![Positive, Positive, Negative, Negative],
        )
    }

    #[test]
    fn hand_computed_posterior_table() {
        // positive: f0 in 2 docs, f1 in 1 -> P(f0)=3/5, P(f1)=2/5
        // negative: f0 in 0 docs, f1 in 2 -> P(f0)=1/4, P(f1)=3/4
        // priors 1/2 each, neutral absent
        let (x, y) = toy();
        let m = train_nb(&x, &y, 2, 1.0, NbEvent::Multinomial).unwrap();
        let table: [(&[u32], f64); 4] = [
            (&[0, 1], 32.0 / 57.0),
            (&[0], 12.0 / 17.0),
            (&[1], 8.0 / 23.0),
            (&[], 0.5),
        ];
        for (ids, pos) in table {
            let p = m.posterior(&v(ids));
            assert!((p[0] - pos).abs() < 1e-15, "{ids:?}: {p:?}");
            assert!((p[2] - (1.0 - pos)).abs() < 1e-15);
            assert_eq!(p[1], 0.0);
        }
        assert_eq!(m.predict(&v(&[1])), Negative);
        assert_eq!(m.predict(&v(&[])), Positive);
        let ll = m.joint_log(&v(&[0]));
        assert!((ll[0] - (0.5f64 * 3.0 / 5.0).ln()).abs() < 1e-15);
    }

    #[test]
    fn single_class_always_wins() {
        let m = train_nb(&[v(&[0]), v(&[1])], &[Neutral, Neutral], 3, 1.0, NbEvent::Multinomial).unwrap();
        for ids in [&[0u32][..], &[1], &[2], &[]] {
            assert_eq!(m.predict(&v(ids)), Neutral);
        }
    }

    #[test]
    fn order_and_duplication_invariance() {
        let (x, y) = toy();
        let m = train_nb(&x, &y, 2, 1.0, NbEvent::Multinomial).unwrap();
        let (rx, ry): (Vec<_>, Vec<_>) = x.iter().cloned().zip(y.iter().cloned()).rev().unzip();
        assert_eq!(train_nb(&rx, &ry, 2, 1.0, NbEvent::Multinomial).unwrap(), m);
        let (tx, ty): (Vec<_>, Vec<_>) = (0..3).flat_map(|_| x.iter().cloned().zip(y.iter().cloned())).unzip();
        let tripled = train_nb(&tx, &ty, 2, 1.0, NbEvent::Multinomial).unwrap();
        for ids in [&[0u32][..], &[1], &[0, 1]] {
            assert_eq!(tripled.predict(&v(ids)), m.predict(&v(ids)));
        }
    }

    #[test]
    fn bernoulli_models_absence() {
        let (x, y) = toy();
        let m = train_nb(&x, &y, 2, 1.0, NbEvent::Bernoulli).unwrap();
        // positive: P(f0)=3/4, P(f1)=2/4; negative: P(f0)=1/4, P(f1)=3/4
        // {f0}: pos 1/2*3/4*1/2 = 3/16, neg 1/2*1/4*1/4 = 1/32
        let p = m.posterior(&v(&[0]));
        assert!((p[0] - (3.0 / 16.0) / (3.0 / 16.0 + 1.0 / 32.0)).abs() < 1e-15);
    }

    #[test]
    fn argument_errors() {
        assert!(train_nb(&[], &[], 1, 1.0, NbEvent::Multinomial).is_err());
        assert!(train_nb(&[v(&[0])], &[Positive], 1, 0.0, NbEvent::Multinomial).is_err());
    }
}
