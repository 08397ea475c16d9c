//! Binary classifiers over bag-of-waves features.

mod logreg;
mod nb;

pub use logreg::{
    gradient as logreg_gradient, logreg_fit, logreg_predict, objective as logreg_objective, sigmoid,
    LogRegModel, GRADIENT_TOLERANCE, MAX_ITERATIONS,
};
pub use nb::{nb_fit, nb_predict, NbModel, DEFAULT_ALPHA, TIE_TOLERANCE};

use serde::{Deserialize, Serialize};

use crate::bowav::{idf_fit, idf_transform, FeatureVector, IdfModel};
use crate::error::{Error, Result};
use crate::signal::Class;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    /// Multinomial naive Bayes on raw counts.
    Nb,
    /// Logistic regression on idf-scaled counts.
    Logreg,
}

impl ClassifierKind {
    pub fn name(self) -> &'static str {
        match self {
            ClassifierKind::Nb => "nb",
            ClassifierKind::Logreg => "logreg",
        }
    }

    /// Whether the regularization grid applies.
    pub fn uses_reg_c(self) -> bool {
        self == ClassifierKind::Logreg
    }
}

impl std::str::FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nb" => Ok(ClassifierKind::Nb),
            "logreg" => Ok(ClassifierKind::Logreg),
            other => Err(Error::Parameter(format!("unknown classifier '{other}'"))),
        }
    }
}

/// A fitted classifier together with any feature scaling it depends on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrainedClassifier {
    Nb { model: NbModel },
    Logreg { model: LogRegModel, idf: IdfModel },
}

impl TrainedClassifier {
    pub fn fit(kind: ClassifierKind, train: &[FeatureVector], reg_c: f64) -> Result<TrainedClassifier> {
        let labels: Vec<Class> = train.iter().map(|f| f.label).collect();
        match kind {
            ClassifierKind::Nb => {
                let counts: Vec<&[u32]> = train.iter().map(|f| f.counts.as_slice()).collect();
                Ok(TrainedClassifier::Nb {
                    model: nb_fit(&counts, &labels, DEFAULT_ALPHA)?,
                })
            }
            ClassifierKind::Logreg => {
                let idf = idf_fit(train)?;
                let x = train
                    .iter()
                    .map(|f| Ok(idf_transform(f, &idf)?.values()))
                    .collect::<Result<Vec<_>>>()?;
                Ok(TrainedClassifier::Logreg {
                    model: logreg_fit(&x, &labels, reg_c)?,
                    idf,
                })
            }
        }
    }

    pub fn kind(&self) -> ClassifierKind {
        match self {
            TrainedClassifier::Nb { .. } => ClassifierKind::Nb,
            TrainedClassifier::Logreg { .. } => ClassifierKind::Logreg,
        }
    }

    pub fn predict(&self, fv: &FeatureVector) -> Result<Class> {
        match self {
            TrainedClassifier::Nb { model } => nb_predict(model, &fv.counts),
            TrainedClassifier::Logreg { model, idf } => {
                Ok(logreg_predict(model, &idf_transform(fv, idf)?.values())?.0)
            }
        }
    }

    pub fn predict_all(&self, features: &[FeatureVector]) -> Result<Vec<Class>> {
        features.iter().map(|f| self.predict(f)).collect()
    }
}
