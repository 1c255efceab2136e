use alloc::format;

use crate::error::{Error, Result};
use crate::mixture::TopicMixture;

/// KL(p ‖ q) = Σ p_i ln(p_i / q_i), with 0 · ln 0 = 0.
pub fn kl_divergence(p: &TopicMixture, q: &TopicMixture) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch { expected: p.len(), found: q.len() });
    }
    let mut total = 0.0;
    for (i, (&pi, &qi)) in p.as_slice().iter().zip(q.as_slice()).enumerate() {
        if pi == 0.0 {
            continue;
        }
        if qi <= 0.0 {
            return Err(Error::Domain(format!("q[{i}] is zero where p[{i}] = {pi}")));
        }
        total += pi * libm::log(pi / qi);
    }
    // rounding can leave a tiny negative value for q ≈ p
    Ok(total.max(0.0))
}

/// Mean of KL(teacher_d ‖ student_d) over aligned documents.
pub fn mean_kl(teacher: &[TopicMixture], student: &[TopicMixture]) -> Result<f64> {
    if teacher.len() != student.len() {
        return Err(Error::LengthMismatch { left: teacher.len(), right: student.len() });
    }
    if teacher.is_empty() {
        return Err(Error::InvalidArgument("no documents to compare".into()));
    }
    let mut total = 0.0;
    for (p, q) in teacher.iter().zip(student) {
        total += kl_divergence(p, q)?;
    }
    Ok(total / teacher.len() as f64)
}
