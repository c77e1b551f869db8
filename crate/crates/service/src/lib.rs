//! Session service, HTTP API and batch commands for `conceptrank`.

pub mod api;
pub mod cli;
pub mod journal;
pub mod session;

pub use journal::{Journal, Record};
pub use session::{ResultItem, ResultPage, ServiceConfig, ServiceError, Session, SessionManager, SessionView, Step};
