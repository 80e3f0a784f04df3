//! Operator backends for the decision-process engine.
//!
//! * [`scripted`]: table-driven operators and environment for deterministic tests.
//! * [`shortcuts`]: hard validation shortcuts applied before any backend validator.
//! * [`parse`]: tolerant extraction of structured fields from model output.
//! * [`llm`] and [`llm_ops`]: a chat-completion client with bounded retry and a
//!   prompt-driven operator set built on it.

pub mod llm;
pub mod llm_ops;
pub mod parse;
pub mod prompt;
pub mod scripted;
pub mod shortcuts;

pub use llm::{replay_client, ReplayTransport, ChatClient, ChatMessage, DecodeParams, HttpTransport, LlmConfig, LlmError, RetryPolicy, Transport, TransportFault};
pub use llm_ops::LlmOperators;
pub use parse::{tolerant_parse, FieldSpec, FieldType, ParseFailure};
pub use prompt::{render_attempt_history, PromptError, PromptTemplates};
pub use scripted::{ScriptedEnvironment, ScriptedOperators, ScriptedScript};
pub use shortcuts::{apply_shortcuts, cap_before_goal, EnvSignal, ValidationShortcutConfig};
