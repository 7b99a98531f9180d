//! Subjective-logic opinion algebra.
//!
//! A multinomial opinion `ω = [b, u, a]` over `K` classes is dual to a
//! Dirichlet evidence vector `e` through `α = e + 1`, `S = Σα`,
//! `b_k = e_k / S` and `u = K / S`. Every operation here exists in both
//! forms: the opinion form is the reference, the evidence form is what the
//! training loop differentiates through.

use crate::error::{check_dim, Error, Result};

/// Tolerance on `Σb + u = 1` above which an input opinion is rejected
/// instead of renormalized.
pub const RENORMALIZE_TOLERANCE: f64 = 1e-6;

/// Fusion refuses to divide by `1 - C` below this value.
pub const CONFLICT_EPSILON: f64 = 1e-12;

/// Belief masses, uncertainty and base rate over `K` classes.
#[derive(Debug, Clone, PartialEq)]
pub struct MultinomialOpinion {
    belief: Vec<f64>,
    uncertainty: f64,
    base_rate: Vec<f64>,
}

impl MultinomialOpinion {
    /// Builds an opinion with a uniform base rate.
    ///
    /// Inputs whose total mass is within [`RENORMALIZE_TOLERANCE`] of one are
    /// rescaled to sum exactly to one; anything further off is rejected.
    pub fn new(belief: Vec<f64>, uncertainty: f64) -> Result<Self> {
        let k = belief.len();
        if k == 0 {
            return Err(Error::domain("opinion needs at least one class"));
        }
        Self::with_base_rate(belief, uncertainty, vec![1.0 / k as f64; k])
    }

    pub fn with_base_rate(
        mut belief: Vec<f64>,
        mut uncertainty: f64,
        base_rate: Vec<f64>,
    ) -> Result<Self> {
        check_dim(belief.len(), base_rate.len())?;
        if belief.is_empty() {
            return Err(Error::domain("opinion needs at least one class"));
        }
        if belief
            .iter()
            .chain(std::iter::once(&uncertainty))
            .any(|m| !m.is_finite() || *m < 0.0)
        {
            return Err(Error::domain(format!(
                "opinion masses must be finite and nonnegative: b={belief:?}, u={uncertainty}"
            )));
        }
        let total: f64 = belief.iter().sum::<f64>() + uncertainty;
        if (total - 1.0).abs() > RENORMALIZE_TOLERANCE {
            return Err(Error::domain(format!(
                "opinion masses sum to {total}, expected 1"
            )));
        }
        if total != 1.0 {
            belief.iter_mut().for_each(|b| *b /= total);
            uncertainty /= total;
        }
        if base_rate.iter().any(|a| !a.is_finite() || *a < 0.0)
            || (base_rate.iter().sum::<f64>() - 1.0).abs() > 1e-9
        {
            return Err(Error::domain(format!(
                "base rate {base_rate:?} is not a distribution"
            )));
        }
        Ok(Self {
            belief,
            uncertainty,
            base_rate,
        })
    }

    /// The opinion with no evidence at all: `b = 0`, `u = 1`.
    pub fn vacuous(num_classes: usize) -> Self {
        Self {
            belief: vec![0.0; num_classes],
            uncertainty: 1.0,
            base_rate: vec![1.0 / num_classes as f64; num_classes],
        }
    }

    // Internal constructor for results that satisfy the invariants by
    // construction (up to rounding).
    fn from_parts(belief: Vec<f64>, uncertainty: f64) -> Self {
        let k = belief.len();
        Self {
            belief,
            uncertainty,
            base_rate: vec![1.0 / k as f64; k],
        }
    }

    pub fn belief(&self) -> &[f64] {
        &self.belief
    }

    pub fn uncertainty(&self) -> f64 {
        self.uncertainty
    }

    pub fn base_rate(&self) -> &[f64] {
        &self.base_rate
    }

    pub fn num_classes(&self) -> usize {
        self.belief.len()
    }

    /// Class with the largest belief mass; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        argmax(&self.belief)
    }

    /// `[b_1, .., b_K, u]`, the input the referral network sees.
    pub fn to_vector(&self) -> Vec<f64> {
        let mut v = self.belief.clone();
        v.push(self.uncertainty);
        v
    }
}

/// Index of the largest element, lowest index on ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Nonnegative per-class evidence; `α = e + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletEvidence {
    evidence: Vec<f64>,
}

impl DirichletEvidence {
    pub fn new(evidence: Vec<f64>) -> Result<Self> {
        if evidence.is_empty() {
            return Err(Error::domain("evidence needs at least one class"));
        }
        if let Some(bad) = evidence.iter().find(|e| !e.is_finite() || **e < 0.0) {
            return Err(Error::domain(format!(
                "evidence components must be finite and >= 0, got {bad}"
            )));
        }
        Ok(Self { evidence })
    }

    pub fn zeros(num_classes: usize) -> Self {
        Self {
            evidence: vec![0.0; num_classes],
        }
    }

    pub fn evidence(&self) -> &[f64] {
        &self.evidence
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.evidence
    }

    pub fn num_classes(&self) -> usize {
        self.evidence.len()
    }

    pub fn alpha(&self) -> Vec<f64> {
        self.evidence.iter().map(|e| e + 1.0).collect()
    }

    /// Dirichlet strength `S = Σ α_k = Σ e_k + K`.
    pub fn strength(&self) -> f64 {
        self.evidence.iter().sum::<f64>() + self.evidence.len() as f64
    }
}

/// Binomial trust/distrust opinion about a view's functional opinion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferralOpinion {
    pub belief_trust: f64,
    pub belief_distrust: f64,
    pub uncertainty: f64,
    pub base_rate_trust: f64,
}

impl ReferralOpinion {
    pub fn new(belief_trust: f64, belief_distrust: f64, uncertainty: f64) -> Result<Self> {
        Self::with_base_rate(belief_trust, belief_distrust, uncertainty, 0.5)
    }

    pub fn with_base_rate(
        belief_trust: f64,
        belief_distrust: f64,
        uncertainty: f64,
        base_rate_trust: f64,
    ) -> Result<Self> {
        let op = MultinomialOpinion::with_base_rate(
            vec![belief_trust, belief_distrust],
            uncertainty,
            vec![base_rate_trust, 1.0 - base_rate_trust],
        )?;
        Ok(Self {
            belief_trust: op.belief[0],
            belief_distrust: op.belief[1],
            uncertainty: op.uncertainty,
            base_rate_trust,
        })
    }

    /// Beta-form referral opinion from (trust, distrust) evidence.
    pub fn from_evidence(trust_evidence: f64, distrust_evidence: f64) -> Result<Self> {
        let op = evidence_to_opinion(&DirichletEvidence::new(vec![
            trust_evidence,
            distrust_evidence,
        ])?);
        Ok(Self {
            belief_trust: op.belief[0],
            belief_distrust: op.belief[1],
            uncertainty: op.uncertainty,
            base_rate_trust: 0.5,
        })
    }

    /// Degree of trust `p_t = b_t + a_t · u`.
    pub fn degree_of_trust(&self) -> f64 {
        degree_of_trust(self)
    }
}

/// `b_k = e_k / S`, `u = K / S`, uniform base rate.
pub fn evidence_to_opinion(ev: &DirichletEvidence) -> MultinomialOpinion {
    let s = ev.strength();
    let k = ev.num_classes() as f64;
    MultinomialOpinion::from_parts(ev.evidence.iter().map(|e| e / s).collect(), k / s)
}

/// Inverse of [`evidence_to_opinion`]: `S = K / u`, `e_k = b_k · S`.
pub fn opinion_to_evidence(op: &MultinomialOpinion) -> Result<DirichletEvidence> {
    if op.uncertainty <= 0.0 {
        return Err(Error::Singular(
            "an opinion with zero uncertainty corresponds to infinite evidence".into(),
        ));
    }
    let s = op.num_classes() as f64 / op.uncertainty;
    DirichletEvidence::new(op.belief.iter().map(|b| b * s).collect())
}

/// Belief Constraint Fusion of two opinions.
///
/// `b_k = (b¹_k b²_k + b¹_k u² + b²_k u¹) / (1 - C)`, `u = u¹u² / (1 - C)`
/// with conflict `C = Σ_{i≠j} b¹_i b²_j`.
pub fn bcf_pair(a: &MultinomialOpinion, b: &MultinomialOpinion) -> Result<MultinomialOpinion> {
    check_dim(a.num_classes(), b.num_classes())?;
    let total_a: f64 = a.belief.iter().sum();
    let total_b: f64 = b.belief.iter().sum();
    let agreement: f64 = a.belief.iter().zip(&b.belief).map(|(x, y)| x * y).sum();
    let conflict = total_a * total_b - agreement;
    let norm = 1.0 - conflict;
    if norm.is_nan() || norm < CONFLICT_EPSILON {
        return Err(Error::Conflict(norm));
    }
    let belief = a
        .belief
        .iter()
        .zip(&b.belief)
        .map(|(x, y)| (x * y + x * b.uncertainty + y * a.uncertainty) / norm)
        .collect();
    Ok(MultinomialOpinion::from_parts(
        belief,
        a.uncertainty * b.uncertainty / norm,
    ))
}

/// Left fold of [`bcf_pair`] over all opinions.
pub fn bcf_fuse_all(ops: &[MultinomialOpinion]) -> Result<MultinomialOpinion> {
    let (first, rest) = ops
        .split_first()
        .ok_or_else(|| Error::domain("cannot fuse an empty set of opinions"))?;
    rest.iter()
        .try_fold(first.clone(), |acc, op| bcf_pair(&acc, op))
}

/// Evidence form of BCF: `e_k = e¹_k + e²_k + e¹_k e²_k / K`.
pub fn bcf_evidence(e1: &DirichletEvidence, e2: &DirichletEvidence) -> Result<DirichletEvidence> {
    check_dim(e1.num_classes(), e2.num_classes())?;
    let k = e1.num_classes() as f64;
    let fused = e1
        .evidence
        .iter()
        .zip(&e2.evidence)
        .map(|(x, y)| x + y + x * y / k)
        .collect();
    Ok(DirichletEvidence { evidence: fused })
}

pub fn bcf_evidence_all(evs: &[DirichletEvidence]) -> Result<DirichletEvidence> {
    let (first, rest) = evs
        .split_first()
        .ok_or_else(|| Error::domain("cannot fuse an empty set of evidences"))?;
    rest.iter()
        .try_fold(first.clone(), |acc, ev| bcf_evidence(&acc, ev))
}

/// `p_t = b_t + a_t · u`.
pub fn degree_of_trust(r: &ReferralOpinion) -> f64 {
    r.belief_trust + r.base_rate_trust * r.uncertainty
}

fn check_trust(p_t: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p_t) {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "degree of trust must lie in [0, 1], got {p_t}"
        )))
    }
}

/// Probability-sensitive trust discounting: beliefs scale by `p_t` and the
/// removed mass moves to uncertainty.
pub fn trust_discount(func: &MultinomialOpinion, p_t: f64) -> Result<MultinomialOpinion> {
    check_trust(p_t)?;
    let belief: Vec<f64> = func.belief.iter().map(|b| p_t * b).collect();
    // 1 - p_t Σb written in terms of u so that p_t = 1 is exact.
    let uncertainty = 1.0 - p_t + p_t * func.uncertainty;
    Ok(MultinomialOpinion {
        belief,
        uncertainty,
        base_rate: func.base_rate.clone(),
    })
}

/// Scale factor applied to functional evidence by trust discounting,
/// `p_t u / (1 - p_t + p_t u)`.
pub fn discount_factor(p_t: f64, uncertainty: f64) -> f64 {
    p_t * uncertainty / (1.0 - p_t + p_t * uncertainty)
}

/// Evidence form of [`trust_discount`].
pub fn trust_discount_evidence(func_ev: &DirichletEvidence, p_t: f64) -> Result<DirichletEvidence> {
    check_trust(p_t)?;
    let u = func_ev.num_classes() as f64 / func_ev.strength();
    let factor = discount_factor(p_t, u);
    Ok(DirichletEvidence {
        evidence: func_ev.evidence.iter().map(|e| factor * e).collect(),
    })
}

/// Discount each view by its degree of trust, then fuse with BCF.
pub fn discounted_fuse(funcs: &[MultinomialOpinion], trusts: &[f64]) -> Result<MultinomialOpinion> {
    check_dim(funcs.len(), trusts.len())?;
    let discounted = funcs
        .iter()
        .zip(trusts)
        .map(|(op, p)| trust_discount(op, *p))
        .collect::<Result<Vec<_>>>()?;
    bcf_fuse_all(&discounted)
}

/// `p_k = b_k + a_k · u`.
pub fn projected_probability(op: &MultinomialOpinion) -> Vec<f64> {
    op.belief
        .iter()
        .zip(&op.base_rate)
        .map(|(b, a)| b + a * op.uncertainty)
        .collect()
}
