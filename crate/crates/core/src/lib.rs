//! Environmental contours of significant wave height and wind speed.
//!
//! A joint density of `(Hs, V)` is estimated on a regular grid, either
//! nonparametrically with a Gaussian product-kernel KDE ([`kde`]) or with a
//! conditional Weibull model ([`cma`]). Highest density contours for return
//! periods are extracted from the grid ([`hdc`]), design conditions are read
//! off each contour ([`design`]) and exceedance counts are checked against a
//! binomial model ([`diagnostics`]). [`pipeline`] ties the steps together
//! for the `envcontour` command-line tool.

pub mod cma;
pub mod design;
pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod hdc;
pub mod io;
pub mod kde;
pub mod pipeline;
pub mod synth;

pub use error::{Error, Result};
