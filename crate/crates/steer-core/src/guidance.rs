//! Logit-reshaping equations: contrastive expert guidance, negative
//! prompting, the general classifier-free-guidance form, and their
//! combination.
//!
//! All operations work on unnormalised log-scores. Softmax is applied once,
//! at the sampler, so the guidance strengths keep their intended meaning.

use crate::error::{Error, Result};
use crate::lm::{Context, LogitSource, LogitVector, TokenId};

#[derive(Debug, Clone, Copy)]
pub struct GuidanceParams {
    /// Contrastive expert guidance strength, nominal range [0, 1].
    pub gamma: f64,
    /// Negative prompting strength, nominal range [0, 1].
    pub eta: f64,
    /// Permit gamma/eta outside [0, 1]. With eta > 1 the negative-prompt
    /// formula produces genuine repulsion instead of interpolation.
    pub allow_extrapolation: bool,
}

impl GuidanceParams {
    pub fn new(gamma: f64, eta: f64) -> GuidanceParams {
        GuidanceParams {
            gamma,
            eta,
            allow_extrapolation: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.gamma.is_nan() || self.eta.is_nan() {
            return Err(Error::NonFiniteInput);
        }
        if !self.allow_extrapolation {
            if !(0.0..=1.0).contains(&self.gamma) {
                return Err(Error::ParamOutOfRange {
                    name: "gamma",
                    value: self.gamma,
                });
            }
            if !(0.0..=1.0).contains(&self.eta) {
                return Err(Error::ParamOutOfRange {
                    name: "eta",
                    value: self.eta,
                });
            }
        }
        Ok(())
    }
}

/// Instruction prompt plus negative prompt (concatenated prior examples).
#[derive(Debug, Clone, Default)]
pub struct ConditioningPrompt {
    pub positive: Vec<TokenId>,
    pub negative: Vec<TokenId>,
}

/// The fine-tuned domain model and the base model it was derived from.
/// Both must share one vocabulary.
pub struct ModelPair<'a> {
    pub domain: &'a dyn LogitSource,
    pub base: &'a dyn LogitSource,
}

/// `log P~ = log P_theta - gamma * log P_phi`.
pub fn contrastive_expert_guidance(
    domain_logp: &LogitVector,
    base_logp: &LogitVector,
    gamma: f64,
) -> Result<LogitVector> {
    domain_logp.check_same_len(base_logp)?;
    domain_logp.validate()?;
    base_logp.validate()?;
    if gamma.is_nan() {
        return Err(Error::NonFiniteInput);
    }
    let scores = domain_logp
        .scores
        .iter()
        .zip(&base_logp.scores)
        .map(|(&d, &b)| d - gamma * b)
        .collect();
    Ok(LogitVector::new(scores))
}

/// `log P^ = log P(w|ctx,c-bar) + eta * (log P(w|ctx) - log P(w|ctx,c-bar))`,
/// i.e. an interpolation between the negative-prompt-conditioned and the
/// unconditioned log-scores, each from a forward pass of the domain model.
pub fn negative_prompt_logits(
    domain: &dyn LogitSource,
    context: &Context,
    negative: &[TokenId],
    eta: f64,
) -> Result<LogitVector> {
    let cond = if negative.is_empty() {
        domain.log_probs(context)?
    } else {
        let mut with_neg: Vec<TokenId> = negative.to_vec();
        with_neg.extend_from_slice(context.tokens());
        domain.log_probs(&Context::new(with_neg, context.budget())?)?
    };
    let uncond = domain.log_probs(context)?;
    interpolate_negative(&cond, &uncond, eta)
}

/// The pure arithmetic of the negative-prompting formula, split out so it
/// can be driven by pre-computed logit vectors.
pub fn interpolate_negative(
    cond_neg: &LogitVector,
    uncond: &LogitVector,
    eta: f64,
) -> Result<LogitVector> {
    cond_neg.check_same_len(uncond)?;
    cond_neg.validate()?;
    uncond.validate()?;
    let scores = cond_neg
        .scores
        .iter()
        .zip(&uncond.scores)
        .map(|(&c, &u)| c + eta * (u - c))
        .collect();
    Ok(LogitVector::new(scores))
}

/// Classifier-free guidance:
/// `log P(w|ctx) + gamma * (log P(w|ctx,c) - log P(w|ctx))`.
/// Negative `gamma` realises prompt repulsion.
pub fn cfg_guidance(
    uncond_logp: &LogitVector,
    cond_logp: &LogitVector,
    gamma: f64,
) -> Result<LogitVector> {
    uncond_logp.check_same_len(cond_logp)?;
    uncond_logp.validate()?;
    cond_logp.validate()?;
    let scores = uncond_logp
        .scores
        .iter()
        .zip(&cond_logp.scores)
        .map(|(&u, &c)| u + gamma * (c - u))
        .collect();
    Ok(LogitVector::new(scores))
}

/// Element-wise sum of the two reshaped log-distributions.
pub fn steer_combine(ceg_logp: &LogitVector, np_logp: &LogitVector) -> Result<LogitVector> {
    ceg_logp.check_same_len(np_logp)?;
    let scores = ceg_logp
        .scores
        .iter()
        .zip(&np_logp.scores)
        .map(|(&a, &b)| a + b)
        .collect();
    Ok(LogitVector::new(scores))
}

/// One assembled STEER step: three model evaluations (domain and base on
/// the instruction-conditioned context, domain on the negative-prompt
/// context), combined as CEG + NP.
pub fn steer_step(
    models: &ModelPair,
    prompt: &ConditioningPrompt,
    context: &Context,
    params: &GuidanceParams,
) -> Result<LogitVector> {
    params.validate()?;
    let mut cond: Vec<TokenId> = prompt.positive.clone();
    cond.extend_from_slice(context.tokens());
    let cond_ctx = Context::new(cond, context.budget())?;

    let domain_logp = models.domain.log_probs(&cond_ctx)?;
    let base_logp = models.base.log_probs(&cond_ctx)?;
    let ceg = contrastive_expert_guidance(&domain_logp, &base_logp, params.gamma)?;

    let np = if prompt.negative.is_empty() {
        // Both NP evaluations coincide; the interpolation is the identity.
        domain_logp
    } else {
        let mut neg: Vec<TokenId> = prompt.negative.clone();
        neg.extend_from_slice(cond_ctx.tokens());
        let neg_ctx = Context::new(neg, context.budget())?;
        let cond_neg = models.domain.log_probs(&neg_ctx)?;
        interpolate_negative(&cond_neg, &domain_logp, params.eta)?
    };
    steer_combine(&ceg, &np)
}
