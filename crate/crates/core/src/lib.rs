//! Turns the data tables of ordinary web pages into conversational agents.
//!
//! A page is parsed into a [`page_model::PageModel`], its column labels are
//! mapped to human terms by [`vocabulary`], typed or spoken requests become
//! [`command::Command`]s with help from recent pointer events held in an
//! [`event_buffer::EventBuffer`], and [`engine`] executes them. A
//! [`session::Session`] ties the pieces together behind the JSON protocol
//! in [`protocol`].

pub mod command;
pub mod engine;
pub mod event_buffer;
pub mod ids;
pub mod numeric;
pub mod page_model;
pub mod protocol;
pub mod responder;
pub mod scenario;
pub mod server;
pub mod session;
pub mod vocabulary;

pub use responder::HELP_TEXT;

/// Port the server listens on by default.
pub const DEFAULT_PORT: u16 = 8787;
