//! Trained classifiers of every kind, bundled with their vectorizer for persistence.
//!
//! Model files are JSON objects of the form
//! `{"format": "emoforge-model", "version": 1, "kind": "logreg", "vectorizer": {..}, "model": {..}}`.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize};
use serde_json::{json, Value};

use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::linear::{self, KernelSvmModel, LinearModel, RbfConfig, TrainConfig};
use crate::neural::{self, CnnConfig, CnnModel, CnnTrainConfig, TrainHistory};
use crate::textprep::TokenizedDocument;
use crate::tree::{
    self, BoostConfig, BoostEnsemble, DecisionTree, Forest, ForestConfig, TreeConfig,
};
use crate::vectorizer::{SparseVector, TfidfModel};

pub const MODEL_FORMAT: &str = "emoforge-model";
pub const MODEL_VERSION: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "logreg")]
    Logistic,
    #[serde(rename = "svm-linear")]
    LinearSvm,
    #[serde(rename = "svm-rbf")]
    RbfSvm,
    #[serde(rename = "dtree")]
    DecisionTree,
    #[serde(rename = "adaboost")]
    AdaBoost,
    #[serde(rename = "rforest")]
    RandomForest,
    #[serde(rename = "cnn")]
    Cnn,
}

impl ModelKind {
    pub const ALL: [ModelKind; 7] = [
        ModelKind::Logistic,
        ModelKind::LinearSvm,
        ModelKind::RbfSvm,
        ModelKind::DecisionTree,
        ModelKind::AdaBoost,
        ModelKind::RandomForest,
        ModelKind::Cnn,
    ];

    /// The six classifiers swept over TF-IDF feature counts.
    pub const CLASSICAL: [ModelKind; 6] = [
        ModelKind::Logistic,
        ModelKind::LinearSvm,
        ModelKind::RbfSvm,
        ModelKind::DecisionTree,
        ModelKind::AdaBoost,
        ModelKind::RandomForest,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Logistic => "logreg",
            ModelKind::LinearSvm => "svm-linear",
            ModelKind::RbfSvm => "svm-rbf",
            ModelKind::DecisionTree => "dtree",
            ModelKind::AdaBoost => "adaboost",
            ModelKind::RandomForest => "rforest",
            ModelKind::Cnn => "cnn",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            ModelKind::Logistic => "Logistic Regression",
            ModelKind::LinearSvm => "SVM linear",
            ModelKind::RbfSvm => "SVM rbf",
            ModelKind::DecisionTree => "Decision tree",
            ModelKind::AdaBoost => "AdaBoost",
            ModelKind::RandomForest => "Random forest",
            ModelKind::Cnn => "CNN",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Format(format!("unknown model kind {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrainedClassifier {
    Logistic(LinearModel),
    LinearSvm(LinearModel),
    RbfSvm(KernelSvmModel),
    DecisionTree(DecisionTree),
    AdaBoost(BoostEnsemble),
    RandomForest(Forest),
    Cnn(CnnModel),
}

impl TrainedClassifier {
    pub fn kind(&self) -> ModelKind {
        match self {
            TrainedClassifier::Logistic(_) => ModelKind::Logistic,
            TrainedClassifier::LinearSvm(_) => ModelKind::LinearSvm,
            TrainedClassifier::RbfSvm(_) => ModelKind::RbfSvm,
            TrainedClassifier::DecisionTree(_) => ModelKind::DecisionTree,
            TrainedClassifier::AdaBoost(_) => ModelKind::AdaBoost,
            TrainedClassifier::RandomForest(_) => ModelKind::RandomForest,
            TrainedClassifier::Cnn(_) => ModelKind::Cnn,
        }
    }

    /// Predicts from TF-IDF vectors; the CNN needs token sequences instead.
    pub fn predict_vectors(&self, x: &[SparseVector]) -> Result<Vec<Label>> {
        match self {
            TrainedClassifier::Logistic(m) | TrainedClassifier::LinearSvm(m) => m.predict(x),
            TrainedClassifier::RbfSvm(m) => m.predict(x),
            TrainedClassifier::DecisionTree(m) => m.predict(x),
            TrainedClassifier::AdaBoost(m) => m.predict(x),
            TrainedClassifier::RandomForest(m) => m.predict(x),
            TrainedClassifier::Cnn(_) => Err(Error::Shape(
                "the CNN consumes token sequences, not TF-IDF vectors".into(),
            )),
        }
    }

    fn to_value(&self) -> Value {
        let v = match self {
            TrainedClassifier::Logistic(m) | TrainedClassifier::LinearSvm(m) => {
                serde_json::to_value(m)
            }
            TrainedClassifier::RbfSvm(m) => serde_json::to_value(m),
            TrainedClassifier::DecisionTree(m) => serde_json::to_value(m),
            TrainedClassifier::AdaBoost(m) => serde_json::to_value(m),
            TrainedClassifier::RandomForest(m) => serde_json::to_value(m),
            TrainedClassifier::Cnn(m) => serde_json::to_value(m),
        };
        v.expect("model parameters serialize")
    }

    fn from_value(kind: ModelKind, value: Value) -> Result<Self> {
        Ok(match kind {
            ModelKind::Logistic => TrainedClassifier::Logistic(serde_json::from_value(value)?),
            ModelKind::LinearSvm => TrainedClassifier::LinearSvm(serde_json::from_value(value)?),
            ModelKind::RbfSvm => TrainedClassifier::RbfSvm(serde_json::from_value(value)?),
            ModelKind::DecisionTree => {
                TrainedClassifier::DecisionTree(serde_json::from_value(value)?)
            }
            ModelKind::AdaBoost => TrainedClassifier::AdaBoost(serde_json::from_value(value)?),
            ModelKind::RandomForest => {
                TrainedClassifier::RandomForest(serde_json::from_value(value)?)
            }
            ModelKind::Cnn => TrainedClassifier::Cnn(serde_json::from_value(value)?),
        })
    }
}

/// Hyperparameters for every classifier kind. Missing JSON fields keep their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierParams {
    pub logreg: TrainConfig,
    #[serde(deserialize_with = "svm_config")]
    pub svm_linear: TrainConfig,
    pub svm_rbf: RbfConfig,
    pub dtree: TreeConfig,
    pub adaboost: BoostConfig,
    pub rforest: ForestConfig,
    pub cnn: CnnConfig,
    pub cnn_train: CnnTrainConfig,
}

impl Default for ClassifierParams {
    fn default() -> Self {
        ClassifierParams {
            logreg: TrainConfig::logistic(),
            svm_linear: TrainConfig::linear_svm(),
            svm_rbf: RbfConfig::default(),
            dtree: TreeConfig::default(),
            adaboost: BoostConfig::default(),
            rforest: ForestConfig::default(),
            cnn: CnnConfig::default(),
            cnn_train: CnnTrainConfig::default(),
        }
    }
}

/// Fills fields missing from a partial `svm_linear` object from the SVM defaults.
fn svm_config<'de, D: Deserializer<'de>>(
    deserializer: D,
) -> std::result::Result<TrainConfig, D::Error> {
    let partial = Value::deserialize(deserializer)?;
    let mut merged = serde_json::to_value(TrainConfig::linear_svm()).expect("config serializes");
    if let (Value::Object(base), Value::Object(over)) = (&mut merged, partial) {
        base.extend(over);
    }
    serde_json::from_value(merged).map_err(serde::de::Error::custom)
}

impl ClassifierParams {
    /// Copy with every randomized component seeded from `seed`.
    pub fn with_seed(&self, seed: u64) -> Self {
        let mut p = self.clone();
        p.logreg.seed = seed;
        p.svm_linear.seed = seed;
        p.svm_rbf.seed = seed;
        p.rforest.seed = seed;
        p.cnn.seed = seed;
        p.cnn_train.seed = seed;
        p
    }
}

/// Trains one of the six TF-IDF classifiers.
pub fn train_classifier(
    kind: ModelKind,
    x: &[SparseVector],
    y: &[Label],
    n_features: usize,
    params: &ClassifierParams,
) -> Result<TrainedClassifier> {
    Ok(match kind {
        ModelKind::Logistic => {
            TrainedClassifier::Logistic(linear::train_logistic(x, y, n_features, &params.logreg)?)
        }
        ModelKind::LinearSvm => TrainedClassifier::LinearSvm(linear::train_linear_svm(
            x,
            y,
            n_features,
            &params.svm_linear,
        )?),
        ModelKind::RbfSvm => {
            TrainedClassifier::RbfSvm(linear::train_rbf_svm(x, y, n_features, &params.svm_rbf)?)
        }
        ModelKind::DecisionTree => TrainedClassifier::DecisionTree(tree::train_decision_tree(
            x,
            y,
            n_features,
            &params.dtree,
        )?),
        ModelKind::AdaBoost => {
            TrainedClassifier::AdaBoost(tree::train_adaboost(x, y, n_features, &params.adaboost)?)
        }
        ModelKind::RandomForest => TrainedClassifier::RandomForest(tree::train_random_forest(
            x,
            y,
            n_features,
            &params.rforest,
        )?),
        ModelKind::Cnn => return Err(Error::Config("use train_bundle for the CNN".into())),
    })
}

/// A classifier together with the vectorizer that produced its inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    pub vectorizer: TfidfModel,
    pub classifier: TrainedClassifier,
}

impl ModelBundle {
    pub fn kind(&self) -> ModelKind {
        self.classifier.kind()
    }

    pub fn predict_docs(&self, docs: &[TokenizedDocument]) -> Result<Vec<Label>> {
        match &self.classifier {
            TrainedClassifier::Cnn(cnn) => {
                let batch = self.vectorizer.encode_sequences(docs, cnn.config.max_len)?;
                cnn.predict(&batch)
            }
            other => other.predict_vectors(&self.vectorizer.transform_all(docs)),
        }
    }

    pub fn predict_texts<S: AsRef<str>>(&self, texts: &[S]) -> Result<Vec<Label>> {
        let docs: Vec<TokenizedDocument> = texts
            .iter()
            .enumerate()
            .map(|(i, t)| TokenizedDocument::from_text(i as u64, t.as_ref(), Label::Positive))
            .collect();
        self.predict_docs(&docs)
    }

    pub fn to_json(&self) -> String {
        let value = json!({
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "kind": self.kind().as_str(),
            "vectorizer": self.vectorizer.to_json_value(),
            "model": self.classifier.to_value(),
        });
        serde_json::to_string(&value).expect("bundle serializes")
    }

    pub fn from_json(text: &str) -> Result<ModelBundle> {
        let mut value: Value = serde_json::from_str(text)?;
        let obj = value
            .as_object_mut()
            .ok_or_else(|| Error::Format("model file is not a JSON object".into()))?;
        match obj.get("format").and_then(Value::as_str) {
            Some(MODEL_FORMAT) => {}
            other => {
                return Err(Error::Format(format!(
                    "format tag is {other:?}, expected {MODEL_FORMAT:?}"
                )))
            }
        }
        let version = obj
            .get("version")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::Format("missing version".into()))?;
        if version != MODEL_VERSION {
            return Err(Error::Version {
                found: version,
                expected: MODEL_VERSION,
            });
        }
        let kind: ModelKind = obj
            .get("kind")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::Format("missing kind".into()))?
            .parse()?;
        let vectorizer = obj
            .remove("vectorizer")
            .ok_or_else(|| Error::Format("missing vectorizer".into()))?;
        let model = obj
            .remove("model")
            .ok_or_else(|| Error::Format("missing model".into()))?;
        Ok(ModelBundle {
            vectorizer: TfidfModel::from_json_value(vectorizer)?,
            classifier: TrainedClassifier::from_value(kind, model)?,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<ModelBundle> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        ModelBundle::from_json(&text)
    }
}

pub fn save_model(bundle: &ModelBundle, path: impl AsRef<Path>) -> Result<()> {
    bundle.save(path)
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ModelBundle> {
    ModelBundle::load(path)
}

/// Fits a vectorizer on `train` and trains `kind` on it. The CNN also returns its history.
pub fn train_bundle(
    kind: ModelKind,
    train: &[TokenizedDocument],
    vectorizer_config: crate::vectorizer::VectorizerConfig,
    params: &ClassifierParams,
) -> Result<(ModelBundle, Option<TrainHistory>)> {
    let vectorizer = TfidfModel::fit(train, vectorizer_config)?;
    let labels: Vec<Label> = train.iter().map(|d| d.label).collect();
    if kind == ModelKind::Cnn {
        let batch = vectorizer.encode_sequences(train, params.cnn.max_len)?;
        let (cnn, history) = neural::train_cnn(&batch, &labels, &params.cnn, &params.cnn_train)?;
        let bundle = ModelBundle {
            vectorizer,
            classifier: TrainedClassifier::Cnn(cnn),
        };
        return Ok((bundle, Some(history)));
    }
    let x = vectorizer.transform_all(train);
    let classifier = train_classifier(kind, &x, &labels, vectorizer.dim(), params)?;
    Ok((
        ModelBundle {
            vectorizer,
            classifier,
        },
        None,
    ))
}
