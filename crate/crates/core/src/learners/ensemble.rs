use serde::{Deserialize, Serialize};

use super::{check_width, Classifier, Model};
use crate::error::{Error, Result};

/// Soft voting: the unweighted mean of the members' probability vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VotingEnsemble {
    classes: Vec<u32>,
    n_features: usize,
    members: Vec<Model>,
}

impl VotingEnsemble {
    pub fn new(members: Vec<Model>) -> Result<Self> {
        if members.len() < 2 {
            return Err(Error::Parameter("a voting ensemble needs at least two members".into()));
        }
        let classes = members[0].classes().to_vec();
        let n_features = members[0].n_features();
        for m in &members[1..] {
            if m.classes() != classes.as_slice() {
                return Err(Error::Parameter(format!(
                    "member class lists differ: {:?} vs {:?}",
                    classes,
                    m.classes()
                )));
            }
            if m.n_features() != n_features {
                return Err(Error::Dimension {
                    expected: n_features,
                    found: m.n_features(),
                });
            }
        }
        Ok(VotingEnsemble {
            classes,
            n_features,
            members,
        })
    }

    pub fn members(&self) -> &[Model] {
        &self.members
    }
}

impl Classifier for VotingEnsemble {
    fn classes(&self) -> &[u32] {
        &self.classes
    }

    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_width(self.n_features, x)?;
        let mut p = vec![0.0; self.classes.len()];
        for m in &self.members {
            for (acc, v) in p.iter_mut().zip(m.predict_proba(x)?) {
                *acc += v;
            }
        }
        let n = self.members.len() as f64;
        p.iter_mut().for_each(|v| *v /= n);
        Ok(p)
    }
}
