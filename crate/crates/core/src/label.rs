use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Integer class code. Binary problems use `-1` (COVID, the default positive
/// class) and `+1` (not-COVID).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClassLabel(pub i32);

impl ClassLabel {
    pub const NEGATIVE_ONE: ClassLabel = ClassLabel(-1);
    pub const POSITIVE_ONE: ClassLabel = ClassLabel(1);

    /// Default positive class for sensitivity and ROC.
    pub const COVID: ClassLabel = ClassLabel::NEGATIVE_ONE;
    pub const NOT_COVID: ClassLabel = ClassLabel::POSITIVE_ONE;

    pub fn code(self) -> i32 {
        self.0
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The declared set of legal label codes for one dataset or matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LabelSpace {
    /// Codes −1 and +1.
    #[default]
    Binary,
    /// Codes `0..classes`.
    Multiclass { classes: u32 },
}

impl LabelSpace {
    pub fn multiclass(classes: u32) -> Result<Self> {
        if classes < 2 {
            return Err(Error::Config(format!(
                "multiclass label space needs at least 2 classes, got {classes}"
            )));
        }
        Ok(LabelSpace::Multiclass { classes })
    }

    pub fn contains(self, label: ClassLabel) -> bool {
        match self {
            LabelSpace::Binary => label.0 == -1 || label.0 == 1,
            LabelSpace::Multiclass { classes } => label.0 >= 0 && (label.0 as u32) < classes,
        }
    }

    pub fn check(self, label: ClassLabel) -> Result<ClassLabel> {
        if self.contains(label) {
            Ok(label)
        } else {
            Err(Error::InvalidLabel(format!(
                "code {label} is not in the {self} label space"
            )))
        }
    }

    /// All legal labels in ascending code order.
    pub fn labels(self) -> Vec<ClassLabel> {
        match self {
            LabelSpace::Binary => vec![ClassLabel(-1), ClassLabel(1)],
            LabelSpace::Multiclass { classes } => (0..classes as i32).map(ClassLabel).collect(),
        }
    }
}

impl fmt::Display for LabelSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LabelSpace::Binary => write!(f, "binary {{-1, +1}}"),
            LabelSpace::Multiclass { classes } => write!(f, "multiclass 0..{classes}"),
        }
    }
}
