use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};

/// One block of global variational parameters, e.g. a topic's Dirichlet
/// parameters or the Beta parameters of the corpus-level sticks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalBlock {
    pub name: String,
    pub params: Vec<f64>,
}

impl GlobalBlock {
    pub fn new(name: impl Into<String>, params: Vec<f64>) -> Self {
        Self { name: name.into(), params }
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if rho > 0.0 && rho <= 1.0 {
        Ok(())
    } else {
        Err(contract(format!("step size {rho} outside (0, 1]")))
    }
}

/// `(1 − ρ)·current + ρ·intermediate`, elementwise.
pub fn blend(current: &GlobalBlock, intermediate: &GlobalBlock, rho: f64) -> Result<GlobalBlock> {
    check_rho(rho)?;
    if current.params.len() != intermediate.params.len() {
        return Err(contract(format!(
            "block {} has {} entries but its intermediate has {}",
            current.name,
            current.params.len(),
            intermediate.params.len()
        )));
    }
    let params = if rho == 1.0 {
        intermediate.params.clone()
    } else {
        current
            .params
            .iter()
            .zip(&intermediate.params)
            // rounding can push the combination one ulp outside [c, i]
            .map(|(&c, &i)| ((1.0 - rho) * c + rho * i).clamp(c.min(i), c.max(i)))
            .collect()
    };
    Ok(GlobalBlock { name: current.name.clone(), params })
}

/// Elementwise mean of same-shaped blocks.
pub fn minibatch_average(intermediates: &[GlobalBlock]) -> Result<GlobalBlock> {
    let first = intermediates
        .first()
        .ok_or_else(|| contract("cannot average an empty minibatch"))?;
    let mut acc = MinibatchAccumulator::default();
    for block in intermediates {
        acc.add(std::slice::from_ref(block))?;
    }
    let mut out = acc.finish()?;
    let mut block = out.pop().expect("one block");
    block.name.clone_from(&first.name);
    Ok(block)
}

/// Running sum of per-document intermediate blocks.
///
/// Averaging in a stream keeps memory at one copy of the globals regardless
/// of the minibatch size; the result equals [`minibatch_average`] applied to
/// each block position.
#[derive(Debug, Default)]
pub struct MinibatchAccumulator {
    sums: Vec<GlobalBlock>,
    count: usize,
}

impl MinibatchAccumulator {
    pub fn add(&mut self, blocks: &[GlobalBlock]) -> Result<()> {
        if self.count == 0 {
            self.sums = blocks.to_vec();
        } else {
            if blocks.len() != self.sums.len() {
                return Err(contract("intermediates carry different numbers of blocks"));
            }
            for (sum, block) in self.sums.iter_mut().zip(blocks) {
                if sum.name != block.name || sum.params.len() != block.params.len() {
                    return Err(contract(format!(
                        "intermediate block {} does not match {}",
                        block.name, sum.name
                    )));
                }
                for (s, x) in sum.params.iter_mut().zip(&block.params) {
                    *s += x;
                }
            }
        }
        self.count += 1;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn finish(self) -> Result<Vec<GlobalBlock>> {
        if self.count == 0 {
            return Err(contract("cannot average an empty minibatch"));
        }
        let n = self.count as f64;
        Ok(self
            .sums
            .into_iter()
            .map(|mut b| {
                if self.count > 1 {
                    b.params.iter_mut().for_each(|x| *x /= n);
                }
                b
            })
            .collect())
    }
}

/// Blend every block with its intermediate using the previous values only.
pub fn blocked_svi_step(blocks: &[GlobalBlock], intermediates: &[GlobalBlock], rho: f64) -> Result<Vec<GlobalBlock>> {
    if blocks.len() != intermediates.len() {
        return Err(contract(format!(
            "{} global blocks but {} intermediates",
            blocks.len(),
            intermediates.len()
        )));
    }
    blocks
        .iter()
        .zip(intermediates)
        .map(|(b, i)| {
            if b.name != i.name {
                return Err(contract(format!("block {} aligned with intermediate {}", b.name, i.name)));
            }
            blend(b, i, rho)
        })
        .collect()
}
