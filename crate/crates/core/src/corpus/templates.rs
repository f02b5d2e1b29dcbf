//! Track prompts, stored verbatim. The LaTeX line breaks of the typeset
//! originals become plain newlines; the typographic quote and dash characters
//! are kept as-is.

use crate::label::Track;

pub const MISTAKE_IDENTIFICATION: &str = "TASK DEFINITION:

You are an expert evaluator of AI tutor responses. Your task is to determine whether the tutor's response accurately identifies a mistake in the student's reasoning or solution.

EVALUATION CRITERIA:

1.\"Yes\"– The tutor accurately identifies a mistake in the student’s response.
2.\"To some extent\"– The tutor shows some awareness, but it is ambiguous or uncertain.
3.\"No\"– The tutor fails to identify or misunderstands the mistake.";

pub const MISTAKE_LOCATION: &str = "TASK DEFINITION:

You are an expert evaluator of AI tutor responses. Your task is to determine whether the tutor's response accurately points to a genuine mistake and its location in the student's response.

EVALUATION CRITERIA:

1.\"Yes\"– The tutor clearly points to the exact location of the mistake.
2.\"To some extent\"– The tutor refers to a mistake but is vague or indirect.
3.\"No\"– The tutor provides no indication of where the mistake occurred.";

pub const PROVIDING_GUIDANCE: &str = "TASK DEFINITION:

You are an expert evaluator of AI tutor responses. Your task is to determine whether the tutor's response provides correct and relevant guidance to help the student.

EVALUATION CRITERIA:

1.\"Yes\"– The tutor gives helpful guidance such as a hint or explanation.
2.\"To some extent\"– The guidance is partially helpful, unclear, or incomplete.
3.\"No\"– The guidance is absent, irrelevant, or factually incorrect.";

pub const ACTIONABILITY: &str = "TASK DEFINITION:

You are an expert evaluator of AI tutor responses. Your task is to determine whether the tutor's feedback is actionable, i.e., it clearly suggests what the student should do next.

EVALUATION CRITERIA:

1.\"Yes\"– The response includes clear next steps for the student.
2.\"To some extent\"– Some action is implied, but it is not clearly stated.
3.\"No\"– No action is suggested or the feedback ends the conversation.";

pub fn template(track: Track) -> &'static str {
    match track {
        Track::MistakeIdentification => MISTAKE_IDENTIFICATION,
        Track::MistakeLocation => MISTAKE_LOCATION,
        Track::ProvidingGuidance => PROVIDING_GUIDANCE,
        Track::Actionability => ACTIONABILITY,
    }
}
