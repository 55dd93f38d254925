pub mod catalog;
pub mod ingest;
pub mod preprocess;
pub mod relation;
pub mod report;
pub mod similarity;
pub mod skipgram;
pub mod synthetic;
pub mod vocab;
