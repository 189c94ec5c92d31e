//! Live gesture sessions over WebSocket.
//!
//! A client streams pointer positions; the server renders each one as a
//! bright disc on a dark frame, runs one pipeline step and answers with the
//! session state. The wire format is described in [`protocol`]; [`Session`]
//! holds the transport-free logic and [`server`] wires it to axum.

pub mod protocol;
pub mod server;
mod session;

pub use protocol::{decode_rle_rows, encode_rle_rows, ClientMessage, ConfigOverrides, ErrorKind, PinState, ServerMessage, SessionUpdate, ZoneGeometry, Zones};
pub use server::{router, serve, AppState, Health};
pub use session::{Session, POINTER_INTENSITY, POINTER_RADIUS};
