//! Domain model of the microgrid and the deterministic window LP.
//!
//! Day-ahead quantities are hourly and spread evenly over the four slots of
//! their hour; everything else lives on the 15-minute slot grid.

mod types;
mod window;

pub use types::*;
pub use window::{
    build_deterministic_window, evaluate_actual_cost, DemandBooking, RowKey, VarKey, WindowFixings, WindowLp,
};
