use serde::{Deserialize, Serialize};

/// Fixed instruction opening every question-generation prompt.
pub const SYSTEM_INSTRUCTION: &str = "You are an automatic assistant that generates appropriate question based on the predefined answer. Generate a single question that is most suitable for the given dialogue history and target answer.";
pub const FILL_INSTRUCTION: &str = "Please fill in only [BLANK] in the next dialogue.";
pub const BLANK_LINE: &str = "A: [BLANK]";

/// Topic transition announced at a relation-sentence turn.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicShift {
    pub current_topic: String,
    pub next_topic: String,
}

impl TopicShift {
    pub fn new(current_topic: impl Into<String>, next_topic: impl Into<String>) -> Self {
        Self {
            current_topic: current_topic.into(),
            next_topic: next_topic.into(),
        }
    }

    pub fn instruction(&self) -> String {
        format!(
            "Note that the conversation topic has changed into {} from {}.",
            self.next_topic, self.current_topic
        )
    }
}

/// Everything the generator sees when producing the question for one turn.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PromptContext {
    pub history: Vec<(String, String)>,
    pub target_answer: String,
    pub shift: Option<TopicShift>,
}

/// Renders the fill-in-the-blank prompt:
///
/// ```text
/// <instruction>
/// Please fill in only [BLANK] in the next dialogue.
/// [Note that the conversation topic has changed into X from Y.]
///
/// START
/// A: q1
/// B: a1
/// A: [BLANK]
/// B: <target answer>
/// END
/// ```
pub fn render_prompt(ctx: &PromptContext) -> String {
    let mut out = String::new();
    out.push_str(SYSTEM_INSTRUCTION);
    out.push('\n');
    out.push_str(FILL_INSTRUCTION);
    out.push('\n');
    if let Some(shift) = &ctx.shift {
        out.push_str(&shift.instruction());
        out.push('\n');
    }
    out.push_str("\nSTART\n");
    for (q, a) in &ctx.history {
        out.push_str(&format!("A: {q}\nB: {a}\n"));
    }
    out.push_str(BLANK_LINE);
    out.push('\n');
    out.push_str(&format!("B: {}\n", ctx.target_answer));
    out.push_str("END");
    out
}
