//! Non-neural baselines over binarized unigram and bigram features:
//! multinomial Naive Bayes and a one-vs-one linear SVM.

pub mod features;
pub mod nb;
pub mod svm;

pub use features::{FeatureScheme, FeatureSpace, SparseBinaryVector, BIGRAM_JOINER, LANG_SEPARATOR};
pub use nb::{train_nb, NaiveBayes, NbEvent};
pub use svm::{train_binary_svm, train_svm_ovo, BinarySvm, DcdOptions, DcdTrace, FeatureRow, SvmOvo};
