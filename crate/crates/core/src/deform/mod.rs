//! Deformations of ball metrics: shifts, doubling, gluing, smoothing,
//! boundary perturbation and the conformal collar deformation.

mod collar;
mod glue;
mod perturb;
mod shift;
mod smooth;

pub use collar::{conformal_collar, hessian_laplacian_check, CollarFunction, ConformalResult, HessianCheck};
pub use glue::{eqper_margin, glue_interpolate, GlueDiagnostics};
pub use perturb::{boundary_perturb, boundary_perturb_auto, delta_schedule, scaled_perturb_path, BumpFunction};
pub use shift::{double, shift, Smoothness};
pub use smooth::{smooth_c1, smooth_c1_fixed, SmoothResult};
