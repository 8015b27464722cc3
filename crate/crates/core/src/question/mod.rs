//! Compositional question generation over scene graphs.

mod dataset;
mod generate;
mod program;
mod template;

pub use dataset::{emit_dataset, Dataset, DatasetInfo, EmitConfig, Shortfall, Split, SplitRatios};
pub use generate::{
    generate_for_page, page_stream, question_id, realize, seeded_stream, QAPair, DEFAULT_RETRY_CAP,
};
pub use program::{
    exec_caption_position, exec_count, exec_exist, exec_filter_category, exec_relate, exec_unique,
    execute, Answer, Execution, RejectSample, TraceStep, ANSWER_VOCAB, MAX_COUNT,
};
pub use template::{
    placeholders, AnswerType, ProgramStep, QType, QuestionTemplate, Slot, SlotName, SlotValue,
    StepArg, TemplateBank, DEFAULT_BANK,
};

#[derive(Debug, thiserror::Error)]
pub enum QuestionError {
    #[error("{0}")]
    Template(String),
    #[error("dataset: {0}")]
    Dataset(String),
    #[error("not enough valid questions: {}", .0.iter().map(|s| s.to_string()).collect::<Vec<_>>().join("; "))]
    Shortfall(Vec<Shortfall>),
}
