//! First-order and higher-order approximations of false-alarm probability
//! and detection delay, with the renewal constants they need estimated by
//! simulation.

mod eta;
mod formulas;
mod overshoot;
mod poisson;
mod report;

pub use eta::{estimate_eta_constant, EtaConstant, EtaOptions};
pub use formulas::{first_order_add, ho_add_gsr, ho_add_shiryaev, ho_pfa, HoAdd};
pub use overshoot::{estimate_overshoot, OvershootConstants};
pub use poisson::{estimate_poisson_correction, PoissonCorrection, PoissonOptions, PoissonStart};
pub use report::{asymptotic_report, AsymptoticReport, PredictionRow};
