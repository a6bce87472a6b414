//! Skew correction: Canny edges, progressive probabilistic Hough segments,
//! homography estimation and perspective warping.

mod canny;
mod deskew;
mod homography;
mod hough;

pub use canny::{canny, EdgeMap};
pub use deskew::{deskew, CannyParams, DeskewMode, DeskewOutcome, DeskewParams, HoughParams};
pub use homography::{estimate_homography, warp_perspective, Homography};
pub use hough::{ppht, LineSegment, PphtParams};
