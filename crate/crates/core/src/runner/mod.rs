//! File formats, stream orchestration, synthetic data, benchmarks and
//! ablations.

pub mod ablation;
pub mod bench;
pub mod io;
pub mod session;
pub mod synthetic;

use crate::error::Result;
use crate::model::HyperParams;
use crate::oracle::{dense_pipeline, OracleSwitches};
use session::{RunFlags, Session, StreamInputs};

/// Outcome of comparing the streaming engine's transductive read-out with
/// the dense oracle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleCheck {
    pub engine: Vec<usize>,
    pub oracle: Vec<usize>,
    /// Test indices where the two disagree.
    pub mismatches: Vec<usize>,
}

impl OracleCheck {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Streams every test sample through a session, then compares its
/// transductive predictions with [`dense_pipeline`] on the same node order.
pub fn oracle_check(inputs: &StreamInputs, hyper: &HyperParams, flags: &RunFlags) -> Result<OracleCheck> {
    let mut session = Session::new(inputs.prototypes.clone(), inputs.fewshot.clone(), *hyper, *flags)?;
    for u in &inputs.tests {
        session.push(u)?;
    }
    let engine = session.transductive_predictions()?;
    let switches = OracleSwitches {
        text_reweight: flags.text_reweight,
        fewshot_reweight: flags.fewshot_reweight,
        reweight_prototype_edges: flags.reweight_prototype_edges,
    };
    let oracle = dense_pipeline(&inputs.prototypes, &inputs.fewshot, &inputs.tests, hyper, switches)?;
    let mismatches = (0..engine.len()).filter(|&i| engine[i] != oracle[i]).collect();
    Ok(OracleCheck { engine, oracle, mismatches })
}
