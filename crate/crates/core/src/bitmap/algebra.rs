//! Ground-truth bitmap composition for left-deep join chains.

use serde::{Deserialize, Serialize};

use super::{jump_intersect, BitArray, JoinBitmapIndex};
use crate::error::Result;
use crate::model::CompareMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum JoinOp {
    Inner,
    LeftOuter,
    RightOuter,
    FullOuter,
    Cross,
    Semi,
    Anti,
}

impl JoinOp {
    pub const ALL: [JoinOp; 7] = [
        JoinOp::Inner,
        JoinOp::LeftOuter,
        JoinOp::RightOuter,
        JoinOp::FullOuter,
        JoinOp::Cross,
        JoinOp::Semi,
        JoinOp::Anti,
    ];

    pub fn label(self) -> &'static str {
        match self {
            JoinOp::Inner => "inner",
            JoinOp::LeftOuter => "left",
            JoinOp::RightOuter => "right",
            JoinOp::FullOuter => "full",
            JoinOp::Cross => "cross",
            JoinOp::Semi => "semi",
            JoinOp::Anti => "anti",
        }
    }

    pub fn from_label(s: &str) -> Option<JoinOp> {
        JoinOp::ALL.into_iter().find(|op| op.label() == s)
    }
}

/// A left-deep chain `t0 op1 t1 op2 t2 ...` over table positions in the index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JoinBitmapExpr {
    pub first: usize,
    pub steps: Vec<(JoinOp, usize)>,
}

/// Fold the chain left to right with one rule per operator; the mode is
/// SubSet as soon as a cross join appears.
pub fn ground_truth_bitmap(index: &JoinBitmapIndex, expr: &JoinBitmapExpr) -> Result<(BitArray, CompareMode)> {
    let mut acc = index.arrays[expr.first].clone();
    let mut mode = CompareMode::FullSet;
    for &(op, t) in &expr.steps {
        let b = &index.arrays[t];
        acc = match op {
            JoinOp::Inner | JoinOp::Semi => jump_intersect(&[&acc, b])?,
            JoinOp::Cross => {
                mode = CompareMode::SubSet;
                jump_intersect(&[&acc, b])?
            }
            JoinOp::LeftOuter => acc,
            JoinOp::RightOuter => b.clone(),
            JoinOp::FullOuter => acc.or(b)?,
            JoinOp::Anti => acc.and_not(b)?,
        };
    }
    Ok((acc, mode))
}
